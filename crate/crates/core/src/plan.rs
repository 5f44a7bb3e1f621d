//! TDT assignments and forward propagation of departures along paths.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::instance::{LegIdx, Network, PathIdx};
use crate::slot::{day_of, Slot};

/// Promise reported for paths whose delivery would take longer than this.
pub const MAX_PROMISE_DAYS: u8 = 8;

/// Slot (or no departure) for every (leg, wave) of a network, stored flat in
/// the network's canonical leg order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TdtPlan {
    slots: Vec<Option<Slot>>,
}

impl TdtPlan {
    /// Plan with no departures placed.
    pub fn empty(net: &Network) -> TdtPlan {
        TdtPlan { slots: vec![None; net.total_waves()] }
    }

    pub fn from_flat(net: &Network, slots: Vec<Option<Slot>>) -> Result<TdtPlan> {
        if slots.len() != net.total_waves() {
            return Err(Error::PlanMismatch(format!(
                "plan has {} waves, network has {}",
                slots.len(),
                net.total_waves()
            )));
        }
        Ok(TdtPlan { slots })
    }

    pub fn check_shape(&self, net: &Network) -> Result<()> {
        if self.slots.len() == net.total_waves() {
            Ok(())
        } else {
            Err(Error::PlanMismatch(format!(
                "plan has {} waves, network has {}",
                self.slots.len(),
                net.total_waves()
            )))
        }
    }

    pub fn flat(&self) -> &[Option<Slot>] {
        &self.slots
    }

    pub fn flat_mut(&mut self) -> &mut [Option<Slot>] {
        &mut self.slots
    }

    /// Waves of one leg, 0-based.
    #[inline]
    pub fn waves(&self, net: &Network, leg: LegIdx) -> &[Option<Slot>] {
        let o = net.wave_offset(leg);
        &self.slots[o..o + net.leg(leg).waves as usize]
    }

    #[inline]
    pub fn get(&self, net: &Network, leg: LegIdx, wave: u8) -> Option<Slot> {
        self.slots[net.wave_offset(leg) + wave as usize]
    }

    #[inline]
    pub fn set(&mut self, net: &Network, leg: LegIdx, wave: u8, slot: Option<Slot>) {
        self.slots[net.wave_offset(leg) + wave as usize] = slot;
    }

    pub fn is_placed(&self, net: &Network, leg: LegIdx) -> bool {
        self.waves(net, leg).iter().any(Option::is_some)
    }

    /// Number of legs with at least one departure.
    pub fn placed_legs(&self, net: &Network) -> usize {
        net.leg_indices().filter(|&l| self.is_placed(net, l)).count()
    }

    /// Distinct departure slots of a leg, ascending.
    pub fn distinct_slots(&self, net: &Network, leg: LegIdx) -> crate::slot::SlotSet {
        self.waves(net, leg).iter().flatten().copied().collect()
    }
}

/// Outcome of propagating a plan along one path.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PathOutcome {
    /// `None` when some leg of the path has no departure.
    pub promise: Option<u8>,
    /// Departure slot of the first leg used by the path.
    pub cutoff: Option<Slot>,
}

impl PathOutcome {
    pub const UNREACHABLE: PathOutcome = PathOutcome { promise: None, cutoff: None };
}

/// Promise and chosen waves for every path.
#[derive(Clone, PartialEq, Debug)]
pub struct PropagationResult {
    outcomes: Vec<PathOutcome>,
    chosen: Vec<u8>,
    chosen_offset: Vec<usize>,
}

impl PropagationResult {
    pub fn outcome(&self, p: PathIdx) -> PathOutcome {
        self.outcomes[p.index()]
    }

    pub fn outcomes(&self) -> &[PathOutcome] {
        &self.outcomes
    }

    /// 0-based wave used on each leg of the path (empty when unreachable).
    pub fn chosen_waves(&self, p: PathIdx) -> &[u8] {
        &self.chosen[self.chosen_offset[p.index()]..self.chosen_offset[p.index() + 1]]
    }
}

/// Propagates the plan along every path of the network.
pub fn propagate(net: &Network, plan: &TdtPlan) -> Result<PropagationResult> {
    plan.check_shape(net)?;
    let mut outcomes = Vec::with_capacity(net.paths().len());
    let mut chosen = Vec::new();
    let mut chosen_offset = Vec::with_capacity(net.paths().len() + 1);
    let mut scratch = PathScratch::default();
    for p in net.path_indices() {
        chosen_offset.push(chosen.len());
        let out = propagate_path(net, plan, p, &mut scratch);
        if out.promise.is_some() {
            chosen.extend_from_slice(&scratch.best);
        }
        outcomes.push(out);
    }
    chosen_offset.push(chosen.len());
    Ok(PropagationResult { outcomes, chosen, chosen_offset })
}

/// Reusable buffers for [`propagate_path`].
#[derive(Default, Clone, Debug)]
pub struct PathScratch {
    current: Vec<u8>,
    /// Wave choice of the best combination found by the last call.
    pub best: Vec<u8>,
    best_slots: Vec<Slot>,
    cur_slots: Vec<Slot>,
}

/// Propagates along one path, trying every combination of placed waves and
/// keeping the smallest promise, ties broken by the latest departure slots
/// (compared leg by leg from the origin).
pub fn propagate_path(net: &Network, plan: &TdtPlan, p: PathIdx, scratch: &mut PathScratch) -> PathOutcome {
    let path = net.path(p);
    let n = path.legs.len();
    for &l in &path.legs {
        if !plan.is_placed(net, l) {
            return PathOutcome::UNREACHABLE;
        }
    }
    let ds = net.node(path.dest);
    let cutoff = ds.cutoff().expect("path ends at a DS");

    scratch.current.clear();
    scratch.current.resize(n, 0);
    scratch.cur_slots.clear();
    scratch.cur_slots.resize(n, Slot::FIRST);
    let mut best_promise = u8::MAX;

    // Odometer over placed waves of each leg.
    for (i, &l) in path.legs.iter().enumerate() {
        scratch.current[i] = first_placed(plan.waves(net, l), 0).unwrap();
    }
    loop {
        for (i, &l) in path.legs.iter().enumerate() {
            scratch.cur_slots[i] = plan.waves(net, l)[scratch.current[i] as usize].unwrap();
        }
        let promise = promise_of(net, &path.legs, &scratch.cur_slots, cutoff);
        let better = promise < best_promise
            || (promise == best_promise && scratch.cur_slots.as_slice() > scratch.best_slots.as_slice());
        if better {
            best_promise = promise;
            scratch.best.clear();
            scratch.best.extend_from_slice(&scratch.current);
            scratch.best_slots.clear();
            scratch.best_slots.extend_from_slice(&scratch.cur_slots);
        }
        // advance
        let mut i = n;
        loop {
            if i == 0 {
                return PathOutcome { promise: Some(best_promise), cutoff: Some(scratch.best_slots[0]) };
            }
            i -= 1;
            let waves = plan.waves(net, path.legs[i]);
            match first_placed(waves, scratch.current[i] + 1) {
                Some(w) => {
                    scratch.current[i] = w;
                    break;
                }
                None => scratch.current[i] = first_placed(waves, 0).unwrap(),
            }
        }
    }
}

fn first_placed(waves: &[Option<Slot>], from: u8) -> Option<u8> {
    (from as usize..waves.len()).find(|&w| waves[w].is_some()).map(|w| w as u8)
}

/// Promise of a path whose legs depart at the given slots, the first on day 0.
pub(crate) fn promise_of(net: &Network, legs: &[LegIdx], slots: &[Slot], cutoff: Slot) -> u8 {
    let mut dep = slots[0].offset();
    let last = legs.len() - 1;
    for (i, &l) in legs.iter().enumerate() {
        let leg = net.leg(l);
        let arrival = dep + leg.transit_slots as i64;
        if i == last {
            let day = day_of(arrival);
            let delivered = if Slot::from_offset(arrival) <= cutoff { day } else { day + 1 };
            return delivered.clamp(0, MAX_PROMISE_DAYS as i64) as u8;
        }
        let ready = arrival + net.node(leg.dest).processing_slots() as i64;
        let next = slots[i + 1].offset();
        dep = ready + (next - ready).rem_euclid(96);
    }
    unreachable!()
}
