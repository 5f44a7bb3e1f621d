//! Greedy construction, hill-climbing local search and the hybrid pipeline
//! that polishes a seed plan with local search.

use alloc::vec;
use alloc::vec::Vec;

use crate::constraints::{count_violations, local_violations};
use crate::error::{Error, Result};
use crate::eval::PlanState;
use crate::instance::{LegIdx, Network, NodeKind};
use crate::lop::lop_solution;
use crate::objective::{blackbox_total, TargetWeights};
use crate::plan::{propagate, TdtPlan};
use crate::slot::Slot;

/// Weighted coverage objective of a plan.
pub fn blackbox_objective(net: &Network, plan: &TdtPlan, w: &TargetWeights) -> Result<f64> {
    let prop = propagate(net, plan)?;
    Ok(w.combine(&blackbox_total(net, &prop)))
}

pub fn greedy(net: &Network) -> TdtPlan {
    greedy_with(net, &TargetWeights::default())
}

/// Two-phase greedy: legs into stations first, then legs into sort
/// centers. Each round commits the single (leg, slot) with the largest
/// objective gain among placements that keep the plan violation-free.
/// While a leg into a sort center is unplaced, objective evaluations
/// assume it departs at its LOP slot.
pub fn greedy_with(net: &Network, w: &TargetWeights) -> TdtPlan {
    let lop = lop_solution(net);
    let into_sc: Vec<bool> = net.legs().iter().map(|l| net.node(l.dest).kind() == NodeKind::Sc).collect();

    let mut real = TdtPlan::empty(net);
    let mut proxy_plan = TdtPlan::empty(net);
    for l in net.leg_indices().filter(|l| into_sc[l.index()]) {
        let o = net.wave_offset(l);
        for i in o..o + net.leg(l).waves as usize {
            proxy_plan.flat_mut()[i] = lop.flat()[i];
        }
    }
    let mut proxy = PlanState::new(net, proxy_plan).expect("plan shaped by the network");
    let mut placed = vec![false; net.total_waves()];

    // Legs whose candidate gains may change when a given leg is committed.
    let mut by_node: Vec<Vec<LegIdx>> = vec![Vec::new(); net.nodes().len()];
    let mut by_station: Vec<Vec<LegIdx>> = vec![Vec::new(); net.nodes().len()];
    for l in net.leg_indices() {
        let leg = net.leg(l);
        by_node[leg.origin.index()].push(l);
        by_node[leg.dest.index()].push(l);
        let mut stations: Vec<_> = net.paths_through(l).iter().map(|&p| net.path(p).dest).collect();
        stations.sort_unstable();
        stations.dedup();
        for d in stations {
            by_station[d.index()].push(l);
        }
    }

    for phase_sc in [false, true] {
        let legs: Vec<LegIdx> = net.leg_indices().filter(|l| into_sc[l.index()] == phase_sc).collect();
        let mut best: Vec<Option<(f64, usize, Slot)>> = vec![None; net.legs().len()];
        let mut dirty = vec![true; net.legs().len()];
        loop {
            for &l in &legs {
                if dirty[l.index()] {
                    dirty[l.index()] = false;
                    best[l.index()] = best_candidate(net, l, w, &mut real, &mut proxy, &placed, &lop, into_sc[l.index()]);
                }
            }
            let mut pick: Option<(f64, usize, Slot, LegIdx)> = None;
            for &l in &legs {
                if let Some((g, i, s)) = best[l.index()] {
                    if pick.is_none_or(|p| g > p.0) {
                        pick = Some((g, i, s, l));
                    }
                }
            }
            let Some((_, i, s, l)) = pick else { break };
            real.flat_mut()[i] = Some(s);
            proxy.set(i, Some(s));
            placed[i] = true;
            let leg = net.leg(l);
            for n in [leg.origin, leg.dest] {
                for &b in &by_node[n.index()] {
                    dirty[b.index()] = true;
                }
            }
            for &p in net.paths_through(l) {
                for &b in &by_station[net.path(p).dest.index()] {
                    dirty[b.index()] = true;
                }
            }
        }
    }
    real
}

/// Best violation-free placement for the first unplaced wave of `leg`, as
/// (gain, flat wave, slot); `None` when nothing has positive gain.
#[allow(clippy::too_many_arguments)]
fn best_candidate(
    net: &Network,
    leg: LegIdx,
    w: &TargetWeights,
    real: &mut TdtPlan,
    proxy: &mut PlanState,
    placed: &[bool],
    lop: &TdtPlan,
    proxied: bool,
) -> Option<(f64, usize, Slot)> {
    let o = net.wave_offset(leg);
    let waves = o..o + net.leg(leg).waves as usize;
    let wave = waves.clone().find(|&i| !placed[i])?;

    let cleared: Vec<(usize, Option<Slot>)> = waves.clone().filter(|&i| !placed[i]).map(|i| (i, None)).collect();
    proxy.apply(&cleared, None);
    let base = proxy.objective(w);

    let mut best: Option<(f64, usize, Slot)> = None;
    let mut undo = Vec::with_capacity(1);
    for s in net.feasible_slots(leg).iter().rev() {
        real.flat_mut()[wave] = Some(s);
        let ok = local_violations(net, real, &[leg]) == 0;
        real.flat_mut()[wave] = None;
        if !ok {
            continue;
        }
        undo.clear();
        proxy.apply(&[(wave, Some(s))], Some(&mut undo));
        let gain = proxy.objective(w) - base;
        proxy.apply(&undo, None);
        if gain > 0.0 && best.is_none_or(|b| gain > b.0) {
            best = Some((gain, wave, s));
        }
    }

    let restore: Vec<(usize, Option<Slot>)> = waves
        .filter(|&i| !placed[i])
        .map(|i| (i, if proxied { lop.flat()[i] } else { None }))
        .collect();
    proxy.apply(&restore, None);
    best
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct LocalSearchConfig {
    /// Maximum number of candidate moves evaluated.
    pub budget: u64,
    /// Largest slot shift tried for a single wave.
    pub radius: u8,
    pub target_weights: TargetWeights,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        LocalSearchConfig { budget: 2_000_000, radius: 8, target_weights: TargetWeights::default() }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct SearchStats {
    pub evaluations: u64,
    pub improvements: u64,
    pub sweeps: u64,
}

/// One accepted move, reported to the local-search observer.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Improvement {
    pub evaluations: u64,
    pub objective: f64,
}

pub fn local_search(net: &Network, plan: TdtPlan, cfg: &LocalSearchConfig) -> Result<(TdtPlan, SearchStats)> {
    local_search_with(net, plan, cfg, &mut |_| {})
}

/// Strict hill climbing with first-improvement acceptance.
///
/// Moves per wave: shift by ±1..=radius within the shift domain, remove the
/// departure, place a missing departure at any domain slot, and shift the
/// wave together with every placed wave of a leg directly downstream of it.
pub fn local_search_with(
    net: &Network,
    plan: TdtPlan,
    cfg: &LocalSearchConfig,
    observer: &mut dyn FnMut(&Improvement),
) -> Result<(TdtPlan, SearchStats)> {
    let mut state = PlanState::new(net, plan)?;
    if state.violations() > 0 {
        return Err(Error::InfeasiblePlan(state.violations()));
    }
    let w = &cfg.target_weights;
    let downstream = downstream_legs(net);
    let mut current = state.objective(w);
    let mut stats = SearchStats::default();
    let mut undo = Vec::new();
    let mut moves: Vec<Vec<(usize, Option<Slot>)>> = Vec::new();

    'outer: loop {
        stats.sweeps += 1;
        let mut improved = false;
        for i in 0..net.total_waves() {
            moves.clear();
            wave_moves(net, &state, i, cfg.radius, &downstream, &mut moves);
            for mv in &moves {
                if stats.evaluations >= cfg.budget {
                    break 'outer;
                }
                stats.evaluations += 1;
                undo.clear();
                state.apply(mv, Some(&mut undo));
                let value = state.objective(w);
                if state.violations() == 0 && value > current {
                    current = value;
                    stats.improvements += 1;
                    improved = true;
                    observer(&Improvement { evaluations: stats.evaluations, objective: value });
                    // the move list was built for the old slots
                    break;
                }
                state.apply(&undo, None);
            }
        }
        if !improved {
            break;
        }
    }
    Ok((state.into_plan(), stats))
}

fn downstream_legs(net: &Network) -> Vec<Vec<LegIdx>> {
    let mut next = vec![Vec::new(); net.legs().len()];
    for p in net.paths() {
        for pair in p.legs.windows(2) {
            if !next[pair[0].index()].contains(&pair[1]) {
                next[pair[0].index()].push(pair[1]);
            }
        }
    }
    next
}

fn wave_moves(
    net: &Network,
    state: &PlanState,
    i: usize,
    radius: u8,
    downstream: &[Vec<LegIdx>],
    out: &mut Vec<Vec<(usize, Option<Slot>)>>,
) {
    let (leg, _) = net.wave_at(i);
    let dom = net.feasible_slots(leg);
    let Some(s) = state.slot(i) else {
        for t in dom.iter().rev() {
            out.push(vec![(i, Some(t))]);
        }
        return;
    };
    for d in 1..=radius as i64 {
        for delta in [d, -d] {
            let t = s.shifted(delta);
            if dom.contains(t) {
                out.push(vec![(i, Some(t))]);
            }
        }
    }
    out.push(vec![(i, None)]);
    for &b in &downstream[leg.index()] {
        let ob = net.wave_offset(b);
        let bw = ob..ob + net.leg(b).waves as usize;
        let bdom = net.feasible_slots(b);
        for d in 1..=radius as i64 {
            'delta: for delta in [d, -d] {
                let t = s.shifted(delta);
                if !dom.contains(t) {
                    continue;
                }
                let mut mv = vec![(i, Some(t))];
                for j in bw.clone() {
                    if let Some(u) = state.slot(j) {
                        let u2 = u.shifted(delta);
                        if !bdom.contains(u2) {
                            continue 'delta;
                        }
                        mv.push((j, Some(u2)));
                    }
                }
                if mv.len() > 1 {
                    out.push(mv);
                }
            }
        }
    }
}

/// Removes departures until the plan has no violations: first any single
/// removal that lowers the count, otherwise the wave of the leg with the
/// most local violations.
pub fn repair(net: &Network, plan: TdtPlan) -> Result<TdtPlan> {
    let mut state = PlanState::new(net, plan)?;
    while state.violations() > 0 {
        let mut done = false;
        for i in 0..net.total_waves() {
            if state.slot(i).is_none() {
                continue;
            }
            let before = state.violations();
            let old = state.slot(i);
            state.set(i, None);
            if state.violations() < before {
                done = true;
                break;
            }
            state.set(i, old);
        }
        if done {
            continue;
        }
        let mut worst: Option<(usize, usize)> = None;
        for i in 0..net.total_waves() {
            if state.slot(i).is_some() {
                let v = local_violations(net, state.plan(), &[net.wave_at(i).0]);
                if worst.is_none_or(|w| v > w.0) {
                    worst = Some((v, i));
                }
            }
        }
        match worst {
            Some((_, i)) => state.set(i, None),
            None => break,
        }
    }
    debug_assert_eq!(count_violations(net, state.plan()).total, 0);
    Ok(state.into_plan())
}

/// Local search seeded with `seed`, repaired first if it has violations.
pub fn hybrid(net: &Network, seed: TdtPlan, cfg: &LocalSearchConfig) -> Result<(TdtPlan, SearchStats)> {
    let seed = repair(net, seed)?;
    local_search(net, seed, cfg)
}
