//! Law-of-physics (LOP) departure times: the latest departures that still
//! reach each station by its cutoff, stepping backwards from the cutoff.

use alloc::vec::Vec;

use crate::instance::{LegIdx, Network, PathIdx};
use crate::plan::TdtPlan;
use crate::slot::{day_of, Slot, SlotSet};

/// Backward-pass LOP plan.
///
/// Legs are fixed downstream-first. For each leg, every path through it
/// proposes its own latest slot given the already-fixed downstream legs
/// (upstream legs are assumed to depart at their own latest feasible
/// times). Among the proposals the leg keeps the set of at most `waves`
/// slots minimizing the volume-weighted promise over its paths, then the
/// latest. Capacity and labor constraints are ignored, so the result is
/// generally infeasible.
pub fn lop_solution(net: &Network) -> TdtPlan {
    let mut plan = TdtPlan::empty(net);
    let mut fixed: Vec<Option<SlotSet>> = alloc::vec![None; net.legs().len()];

    for &leg in net.legs_downstream_first() {
        let feasible = net.feasible_slots(leg);
        if feasible.is_empty() {
            fixed[leg.index()] = Some(SlotSet::EMPTY);
            continue;
        }
        // (path weight, promise per candidate) rows
        let mut candidates: Vec<Slot> = Vec::new();
        let mut rows: Vec<(f64, i64, PathIdx)> = Vec::new();
        for &p in net.paths_through(leg) {
            let Some(deadline) = leg_deadline(net, p, leg, &fixed) else { continue };
            let own = Slot::from_offset(feasible.latest_at_or_before(deadline).unwrap());
            if upstream_promise(net, p, leg, own, deadline).is_none() {
                continue;
            }
            if !candidates.contains(&own) {
                candidates.push(own);
            }
            rows.push((net.path(p).volume, deadline, p));
        }
        let chosen = if candidates.is_empty() {
            alloc::vec![feasible.last().unwrap()]
        } else {
            candidates.sort_unstable_by(|a, b| b.cmp(a));
            let table: Vec<(f64, Vec<(i64, i64)>)> = rows
                .iter()
                .map(|&(w, deadline, p)| {
                    let entries = candidates
                        .iter()
                        .map(|&c| {
                            let promise = upstream_promise(net, p, leg, c, deadline).unwrap_or(i64::MAX / 4);
                            let dep = SlotSet::single(c).latest_at_or_before(deadline).unwrap();
                            (promise, -dep)
                        })
                        .collect();
                    (w, entries)
                })
                .collect();
            pick_waves(&table, candidates.len(), net.leg(leg).waves as usize)
                .into_iter()
                .map(|i| candidates[i])
                .collect()
        };
        let waves = net.leg(leg).waves;
        for w in 0..waves {
            let slot = chosen.get(w as usize).copied().unwrap_or(chosen[0]);
            plan.set(net, leg, w, Some(slot));
        }
        fixed[leg.index()] = Some(chosen.iter().copied().collect());
    }
    plan
}

/// Latest absolute departure of `leg` on path `p` that still delivers on
/// day 0, given the fixed downstream legs. `None` if a downstream leg has
/// no departure.
fn leg_deadline(net: &Network, p: PathIdx, leg: LegIdx, fixed: &[Option<SlotSet>]) -> Option<i64> {
    let path = net.path(p);
    let cutoff = net.node(path.dest).cutoff().unwrap();
    let mut deadline = cutoff.offset();
    for &l in path.legs.iter().rev() {
        let transit = net.leg(l).transit_slots as i64;
        deadline -= transit;
        if l == leg {
            return Some(deadline);
        }
        let slots = fixed[l.index()].expect("downstream legs are fixed first");
        let dep = slots.latest_at_or_before(deadline)?;
        let origin = net.leg(l).origin;
        deadline = dep - net.node(origin).processing_slots() as i64;
    }
    unreachable!("leg lies on the path")
}

/// Promise of path `p` when `leg` departs at `slot` (latest occurrence
/// before `deadline`) and every upstream leg departs as late as its shift
/// domain allows.
fn upstream_promise(net: &Network, p: PathIdx, leg: LegIdx, slot: Slot, deadline: i64) -> Option<i64> {
    let path = net.path(p);
    let pos = path.legs.iter().position(|&l| l == leg).unwrap();
    let mut dep = SlotSet::single(slot).latest_at_or_before(deadline).unwrap();
    for &l in path.legs[..pos].iter().rev() {
        let sc = net.leg(l).dest;
        let limit = dep - net.node(sc).processing_slots() as i64 - net.leg(l).transit_slots as i64;
        dep = net.feasible_slots(l).latest_at_or_before(limit)?;
    }
    Some(-day_of(dep))
}

/// Indices of at most `waves` candidates minimizing the weighted promise,
/// then maximizing the weighted departure time. Each row uses its best
/// chosen candidate, ranked by (promise, earliness).
fn pick_waves(table: &[(f64, Vec<(i64, i64)>)], n: usize, waves: usize) -> Vec<usize> {
    let score = |set: &[usize]| -> (f64, f64) {
        table.iter().fold((0.0, 0.0), |(a, b), (w, row)| {
            let (pr, early) = set.iter().map(|&i| row[i]).min().unwrap();
            (a + w * pr as f64, b + w * early as f64)
        })
    };
    let better = |x: (f64, f64), y: (f64, f64)| x.0 < y.0 || (x.0 == y.0 && x.1 < y.1);
    let mut best = alloc::vec![0];
    let mut best_score = score(&best);
    for i in 1..n {
        let s = score(&[i]);
        if better(s, best_score) {
            best = alloc::vec![i];
            best_score = s;
        }
    }
    if waves >= 2 {
        for i in 0..n {
            for j in i + 1..n {
                let s = score(&[i, j]);
                if better(s, best_score) {
                    best = alloc::vec![i, j];
                    best_score = s;
                }
            }
        }
    }
    best
}
