//! Incrementally maintained plan evaluation: path outcomes, coverage totals
//! and total violation count, updated when a few waves change.

use alloc::vec;
use alloc::vec::Vec;

use crate::constraints::local_violations;
use crate::error::Result;
use crate::instance::{LegIdx, Network, NodeIdx, PathIdx};
use crate::objective::{station_totals, TargetWeights, TARGET_DAYS};
use crate::plan::{propagate_path, PathOutcome, PathScratch, TdtPlan};
use crate::slot::Slot;

/// A plan together with its cached evaluation.
///
/// Coverage totals are re-summed over stations in node order after every
/// change, so they are bit-identical to a from-scratch
/// [`blackbox_total`](crate::objective::blackbox_total).
#[derive(Clone, Debug)]
pub struct PlanState<'a> {
    net: &'a Network,
    plan: TdtPlan,
    outcomes: Vec<PathOutcome>,
    station: Vec<[f64; TARGET_DAYS]>,
    totals: [f64; TARGET_DAYS],
    violations: usize,
    scratch: PathScratch,
    seen_path: Vec<u32>,
    seen_node: Vec<u32>,
    epoch: u32,
    legs_buf: Vec<LegIdx>,
    paths_buf: Vec<PathIdx>,
    nodes_buf: Vec<NodeIdx>,
}

impl<'a> PlanState<'a> {
    pub fn new(net: &'a Network, plan: TdtPlan) -> Result<PlanState<'a>> {
        plan.check_shape(net)?;
        let mut scratch = PathScratch::default();
        let outcomes: Vec<PathOutcome> =
            net.path_indices().map(|p| propagate_path(net, &plan, p, &mut scratch)).collect();
        let station = net
            .node_indices()
            .map(|n| {
                if net.segments_of(n).is_empty() {
                    [0.0; TARGET_DAYS]
                } else {
                    station_totals(net, n, |p| outcomes[p.index()])
                }
            })
            .collect();
        let violations = crate::constraints::count_violations(net, &plan).total;
        let mut s = PlanState {
            net,
            plan,
            outcomes,
            station,
            totals: [0.0; TARGET_DAYS],
            violations,
            scratch,
            seen_path: vec![0; net.paths().len()],
            seen_node: vec![0; net.nodes().len()],
            epoch: 0,
            legs_buf: Vec::new(),
            paths_buf: Vec::new(),
            nodes_buf: Vec::new(),
        };
        s.resum();
        Ok(s)
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn plan(&self) -> &TdtPlan {
        &self.plan
    }

    pub fn into_plan(self) -> TdtPlan {
        self.plan
    }

    pub fn totals(&self) -> &[f64; TARGET_DAYS] {
        &self.totals
    }

    pub fn objective(&self, w: &TargetWeights) -> f64 {
        w.combine(&self.totals)
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    pub fn outcome(&self, p: PathIdx) -> PathOutcome {
        self.outcomes[p.index()]
    }

    pub fn slot(&self, flat: usize) -> Option<Slot> {
        self.plan.flat()[flat]
    }

    fn resum(&mut self) {
        let mut totals = [0.0; TARGET_DAYS];
        for n in self.net.node_indices() {
            if self.net.segments_of(n).is_empty() {
                continue;
            }
            for t in 0..TARGET_DAYS {
                totals[t] += self.station[n.index()][t];
            }
        }
        self.totals = totals;
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen_path.iter_mut().for_each(|e| *e = 0);
            self.seen_node.iter_mut().for_each(|e| *e = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Sets flat waves to new slots. When `undo` is given, the previous
    /// values are appended to it so that applying it restores the state.
    pub fn apply(&mut self, changes: &[(usize, Option<Slot>)], mut undo: Option<&mut Vec<(usize, Option<Slot>)>>) {
        let net = self.net;
        let epoch = self.next_epoch();
        let mut legs = core::mem::take(&mut self.legs_buf);
        legs.clear();
        for &(i, _) in changes {
            let (l, _) = net.wave_at(i);
            if !legs.contains(&l) {
                legs.push(l);
            }
        }
        let before = local_violations(net, &self.plan, &legs);
        let start = undo.as_deref().map_or(0, |u| u.len());
        for &(i, s) in changes {
            let old = core::mem::replace(&mut self.plan.flat_mut()[i], s);
            if let Some(u) = undo.as_deref_mut() {
                u.push((i, old));
            }
        }
        if let Some(u) = undo {
            u[start..].reverse();
        }
        let after = local_violations(net, &self.plan, &legs);
        self.violations = self.violations + after - before;

        let mut paths = core::mem::take(&mut self.paths_buf);
        let mut nodes = core::mem::take(&mut self.nodes_buf);
        paths.clear();
        nodes.clear();
        for &l in &legs {
            for &p in net.paths_through(l) {
                if self.seen_path[p.index()] != epoch {
                    self.seen_path[p.index()] = epoch;
                    paths.push(p);
                }
            }
        }
        let mut changed = false;
        for &p in &paths {
            let out = propagate_path(net, &self.plan, p, &mut self.scratch);
            if out != self.outcomes[p.index()] {
                self.outcomes[p.index()] = out;
                let d = net.path(p).dest;
                if self.seen_node[d.index()] != epoch {
                    self.seen_node[d.index()] = epoch;
                    nodes.push(d);
                }
                changed = true;
            }
        }
        for &d in &nodes {
            if !net.segments_of(d).is_empty() {
                let outcomes = &self.outcomes;
                self.station[d.index()] = station_totals(net, d, |p| outcomes[p.index()]);
            }
        }
        if changed {
            self.resum();
        }
        self.legs_buf = legs;
        self.paths_buf = paths;
        self.nodes_buf = nodes;
    }

    pub fn set(&mut self, flat: usize, slot: Option<Slot>) {
        self.apply(&[(flat, slot)], None);
    }
}
