//! Exact branch-and-infer search maximizing package speed.
//!
//! Every (leg, wave) receives a slot from its domain. Domains are filtered
//! by per-slot and rolling capacity, dispatch spacing and station labor as
//! waves are assigned; the objective bound relaxes each path on its own,
//! letting it catch the earliest remaining departure on every leg.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicI64, Ordering};

use crate::constraints::{labor_from_arrivals, milli_volume};
use crate::instance::{LegIdx, Network, NodeIdx, NodeKind, PathIdx};
use crate::objective::{package_speed, PromiseWeights};
use crate::plan::{propagate, propagate_path, PathScratch, TdtPlan, MAX_PROMISE_DAYS};
use crate::slot::{day_of, Slot, SlotSet, SLOTS_PER_DAY};

const K: usize = SLOTS_PER_DAY as usize;

/// Promise weights are scaled by this factor and rounded for the integer
/// objective; volumes use thousandths.
pub const WEIGHT_SCALE: f64 = 1e6;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CpStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unknown,
}

impl CpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CpStatus::Optimal => "OPTIMAL",
            CpStatus::Feasible => "FEASIBLE",
            CpStatus::Infeasible => "INFEASIBLE",
            CpStatus::Unknown => "UNKNOWN",
        }
    }
}

/// Order in which the slots of a branching variable are tried.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum ValueOrder {
    #[default]
    LatestFirst,
    /// Slots with the highest bound over the leg's paths first, then latest.
    BestBound,
}

/// Large-neighborhood improvement used once the complete search has run
/// out of its node budget: waves outside a random neighborhood are fixed to
/// the incumbent and the rest is searched again under a node limit.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LnsConfig {
    pub seed: u64,
    /// Nodes spent on the complete search before switching to LNS.
    pub complete_nodes: u64,
    /// Waves freed per neighborhood (at least).
    pub free_waves: usize,
    pub nodes_per_round: u64,
}

impl Default for LnsConfig {
    fn default() -> Self {
        LnsConfig { seed: 0, complete_nodes: 100_000, free_waves: 24, nodes_per_round: 2_000 }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct CpConfig {
    pub weights: PromiseWeights,
    pub value_order: ValueOrder,
    /// Limit on search nodes over all phases.
    pub node_limit: Option<u64>,
    pub lns: Option<LnsConfig>,
}

impl Default for CpConfig {
    fn default() -> Self {
        CpConfig { weights: PromiseWeights::default(), value_order: ValueOrder::LatestFirst, node_limit: None, lns: None }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct CpResult {
    pub plan: Option<TdtPlan>,
    /// Package speed of `plan`.
    pub objective: Option<f64>,
    /// Upper bound on the package speed (the objective when optimal).
    pub bound: f64,
    pub status: CpStatus,
    pub nodes: u64,
}

/// Slot domains of every (leg, wave), indexed like [`TdtPlan::flat`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DomainStore {
    domains: Vec<SlotSet>,
}

impl DomainStore {
    pub fn new(domains: Vec<SlotSet>) -> DomainStore {
        DomainStore { domains }
    }

    pub fn domains(&self) -> &[SlotSet] {
        &self.domains
    }

    pub fn into_domains(self) -> Vec<SlotSet> {
        self.domains
    }

    pub fn domain(&self, flat: usize) -> SlotSet {
        self.domains[flat]
    }

    /// The assignment flag of (wave, slot): `Some(true)` when the wave is
    /// fixed to the slot, `Some(false)` when the slot is excluded, `None`
    /// while undecided.
    pub fn y(&self, flat: usize, slot: Slot) -> Option<bool> {
        let d = self.domains[flat];
        if !d.contains(slot) {
            Some(false)
        } else if d.len() == 1 {
            Some(true)
        } else {
            None
        }
    }

    pub fn value(&self, flat: usize) -> Option<Slot> {
        let d = self.domains[flat];
        if d.len() == 1 {
            d.first()
        } else {
            None
        }
    }
}

/// Root-level domains: shift domains filtered by capacity, spacing and
/// labor deductions, with singleton domains propagated to a fixpoint.
/// `infeasible` is set when some domain became empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PrunedDomains {
    pub store: DomainStore,
    pub infeasible: bool,
}

pub fn prune_domains(net: &Network) -> PrunedDomains {
    let mut s = Search::new(net, &PromiseWeights::default());
    let ok = s.root();
    PrunedDomains { store: DomainStore::new(s.dom), infeasible: !ok }
}

/// Days added by each leg of path `p` under the plan, using the same wave
/// choice as propagation: from one departure to the next departure (or to
/// delivery for the last leg). `None` if the path is unreachable. The sum
/// equals the path promise.
pub fn promise_added(net: &Network, plan: &TdtPlan, p: PathIdx) -> Option<Vec<u8>> {
    let mut scratch = PathScratch::default();
    propagate_path(net, plan, p, &mut scratch).promise?;
    let path = net.path(p);
    let slots: Vec<Slot> = path
        .legs
        .iter()
        .zip(&scratch.best)
        .map(|(&l, &w)| plan.get(net, l, w).unwrap())
        .collect();
    let cutoff = net.node(path.dest).cutoff().unwrap();
    let mut out = Vec::with_capacity(slots.len());
    let mut dep = slots[0].offset();
    let mut total = 0i64;
    for (t, &l) in path.legs.iter().enumerate() {
        let leg = net.leg(l);
        let arrival = dep + leg.transit_slots as i64;
        let next_day = if t + 1 == path.legs.len() {
            let day = day_of(arrival);
            if Slot::from_offset(arrival) <= cutoff {
                day
            } else {
                day + 1
            }
        } else {
            let ready = arrival + net.node(leg.dest).processing_slots() as i64;
            let next = ready + (slots[t + 1].offset() - ready).rem_euclid(K as i64);
            let d = day_of(next);
            dep = next;
            d
        };
        let mut added = next_day - total;
        if total + added > MAX_PROMISE_DAYS as i64 {
            added = MAX_PROMISE_DAYS as i64 - total;
        }
        out.push(added as u8);
        total += added;
    }
    Some(out)
}

/// Branch-and-bound search for the plan maximizing package speed.
///
/// `stop` is polled every 256 nodes. `shared` is an incumbent value (in the
/// scaled integer objective) shared between concurrent searches; subtrees
/// that cannot beat it are pruned.
pub fn solve(net: &Network, cfg: &CpConfig, stop: &mut dyn FnMut() -> bool, shared: Option<&AtomicI64>) -> CpResult {
    let mut s = Search::new(net, &cfg.weights);
    let scale = s.scale();
    if !s.root() {
        return CpResult { plan: None, objective: None, bound: 0.0, status: CpStatus::Infeasible, nodes: 0 };
    }
    let root_bound = s.ub_sum;
    let order = branching_order(net);
    s.order = order.clone();
    s.value_order = cfg.value_order;
    s.node_limit = match cfg.lns {
        Some(l) => Some(cfg.node_limit.map_or(l.complete_nodes, |n| n.min(l.complete_nodes))),
        None => cfg.node_limit,
    };
    s.shared = shared;
    let completed = s.dfs(0, stop);
    let status = match (completed, s.best.is_some()) {
        (true, true) => CpStatus::Optimal,
        (true, false) => CpStatus::Infeasible,
        (false, true) => CpStatus::Feasible,
        (false, false) => CpStatus::Unknown,
    };
    let mut nodes = s.nodes;
    let mut best = s.best.take();
    if let (Some(lns), false, false) = (cfg.lns, completed, s.stopped) {
        if let Some(b) = best.take() {
            let (b, n) = improve(net, cfg, &lns, &order, b, nodes, stop, shared);
            best = Some(b);
            nodes = n;
        }
    }
    let (plan, objective) = match best {
        Some((_, slots)) => {
            let plan = TdtPlan::from_flat(net, slots.into_iter().map(Some).collect()).unwrap();
            let prop = propagate(net, &plan).unwrap();
            let obj = package_speed(net, &prop, &cfg.weights);
            (Some(plan), Some(obj))
        }
        None => (None, None),
    };
    let bound = match (status, objective) {
        (CpStatus::Optimal, Some(o)) => o,
        (CpStatus::Infeasible, _) => 0.0,
        _ => root_bound as f64 / scale,
    };
    CpResult { plan, objective, bound, status, nodes }
}

#[allow(clippy::too_many_arguments)]
fn improve(
    net: &Network,
    cfg: &CpConfig,
    lns: &LnsConfig,
    order: &[usize],
    mut best: (i128, Vec<Slot>),
    mut nodes: u64,
    stop: &mut dyn FnMut() -> bool,
    shared: Option<&AtomicI64>,
) -> ((i128, Vec<Slot>), u64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(lns.seed);
    let stations: Vec<NodeIdx> = net.node_indices().filter(|&n| !net.paths_to(n).is_empty()).collect();
    let n = net.total_waves();
    let target = lns.free_waves.min(n);
    let mut free = vec![false; n];
    while !stop() && cfg.node_limit.is_none_or(|lim| nodes < lim) {
        free.iter_mut().for_each(|f| *f = false);
        let mut count = 0;
        while count < target {
            let ds = stations[rng.gen_range(0..stations.len())];
            for &p in net.paths_to(ds) {
                for &l in &net.path(p).legs {
                    let o = net.wave_offset(l);
                    for i in o..o + net.leg(l).waves as usize {
                        if !free[i] {
                            free[i] = true;
                            count += 1;
                        }
                    }
                }
            }
        }
        let mut sub = Search::new(net, &cfg.weights);
        for i in 0..n {
            if !free[i] {
                sub.dom[i] = sub.dom[i].intersection(SlotSet::single(best.1[i]));
            }
        }
        sub.floor = best.0;
        sub.shared = shared;
        sub.order = order.to_vec();
        sub.value_order = ValueOrder::BestBound;
        sub.node_limit = Some(lns.nodes_per_round);
        if sub.root() {
            sub.dfs(0, stop);
        }
        nodes += sub.nodes.max(1);
        if let Some(b) = sub.best.take() {
            best = b;
        }
        if sub.stopped {
            break;
        }
    }
    (best, nodes)
}

/// Legs upstream-first along paths; waves of a leg consecutively.
fn branching_order(net: &Network) -> Vec<usize> {
    let mut order = Vec::with_capacity(net.total_waves());
    for &l in net.legs_downstream_first().iter().rev() {
        let o = net.wave_offset(l);
        order.extend(o..o + net.leg(l).waves as usize);
    }
    order
}

struct Frame {
    dom: Vec<SlotSet>,
    path_ub: Vec<i128>,
    ub_sum: i128,
    out_usage: [u8; K],
    in_usage: [u8; K],
    leg_used: SlotSet,
    arrivals: Option<[i64; K]>,
}

struct Search<'a> {
    net: &'a Network,
    omega: Vec<i128>,
    vol: Vec<i128>,
    leg_vol: Vec<i64>,
    dom: Vec<SlotSet>,
    assigned: Vec<Option<Slot>>,
    out_usage: Vec<[u8; K]>,
    in_usage: Vec<[u8; K]>,
    leg_used: Vec<SlotSet>,
    arrivals: Vec<[i64; K]>,
    ds_total: Vec<i64>,
    unassigned_in: Vec<usize>,
    path_ub: Vec<i128>,
    ub_sum: i128,
    order: Vec<usize>,
    value_order: ValueOrder,
    node_limit: Option<u64>,
    shared: Option<&'a AtomicI64>,
    best: Option<(i128, Vec<Slot>)>,
    floor: i128,
    nodes: u64,
    stopped: bool,
    scratch: PathScratch,
}

impl<'a> Search<'a> {
    fn new(net: &'a Network, w: &PromiseWeights) -> Search<'a> {
        let omega = (0..=MAX_PROMISE_DAYS as u32 + 1)
            .map(|d| libm::round(w.weight(d) * WEIGHT_SCALE) as i128)
            .collect();
        let vol = net.paths().iter().map(|p| milli_volume(p.volume) as i128).collect();
        let leg_vol: Vec<i64> = net.legs().iter().map(|l| milli_volume(l.volume)).collect();
        let n = net.nodes().len();
        let mut ds_total = vec![0; n];
        let mut unassigned_in = vec![0; n];
        for l in net.leg_indices() {
            let d = net.leg(l).dest;
            ds_total[d.index()] += leg_vol[l.index()];
            unassigned_in[d.index()] += net.leg(l).waves as usize;
        }
        let dom = (0..net.total_waves()).map(|i| net.feasible_slots(net.wave_at(i).0)).collect();
        Search {
            net,
            omega,
            vol,
            leg_vol,
            dom,
            assigned: vec![None; net.total_waves()],
            out_usage: vec![[0; K]; n],
            in_usage: vec![[0; K]; n],
            leg_used: vec![SlotSet::EMPTY; net.legs().len()],
            arrivals: vec![[0; K]; n],
            ds_total,
            unassigned_in,
            path_ub: vec![0; net.paths().len()],
            ub_sum: 0,
            order: Vec::new(),
            value_order: ValueOrder::LatestFirst,
            node_limit: None,
            shared: None,
            best: None,
            floor: -1,
            nodes: 0,
            stopped: false,
            scratch: PathScratch::default(),
        }
    }

    fn scale(&self) -> f64 {
        1000.0 * WEIGHT_SCALE * K as f64
    }

    #[inline]
    fn term(&self, p: PathIdx, x: Slot, promise: u8) -> i128 {
        let x = x.get() as i128;
        let pr = promise as usize;
        self.vol[p.index()] * (x * self.omega[pr] + (K as i128 - x) * self.omega[pr + 1])
    }

    fn waves(&self, l: LegIdx) -> core::ops::Range<usize> {
        let o = self.net.wave_offset(l);
        o..o + self.net.leg(l).waves as usize
    }

    fn leg_domain(&self, l: LegIdx) -> SlotSet {
        self.waves(l).fold(SlotSet::EMPTY, |acc, i| acc.union(self.dom[i]))
    }

    /// Best term of path `p` over first-leg slots in `first`, each followed
    /// by the earliest catchable departure on every later leg.
    fn path_bound_with(&self, p: PathIdx, first: SlotSet) -> i128 {
        let net = self.net;
        let path = net.path(p);
        let cutoff = net.node(path.dest).cutoff().unwrap();
        let m = path.legs.len();
        let mut best = 0;
        'x: for x in first.iter().rev() {
            let mut dep = x.offset();
            for (t, &l) in path.legs.iter().enumerate() {
                let leg = net.leg(l);
                let arrival = dep + leg.transit_slots as i64;
                if t + 1 == m {
                    let day = day_of(arrival) + (Slot::from_offset(arrival) > cutoff) as i64;
                    let pr = day.clamp(0, MAX_PROMISE_DAYS as i64) as u8;
                    best = best.max(self.term(p, x, pr));
                } else {
                    let ready = arrival + net.node(leg.dest).processing_slots() as i64;
                    match self.leg_domain(path.legs[t + 1]).earliest_at_or_after(ready) {
                        Some(d) => dep = d,
                        None => continue 'x,
                    }
                }
            }
        }
        best
    }

    fn path_bound(&self, p: PathIdx) -> i128 {
        let first = self.leg_domain(self.net.path(p).legs[0]);
        self.path_bound_with(p, first)
    }

    fn refresh_bounds(&mut self, legs: &[LegIdx]) {
        let net = self.net;
        for &l in legs {
            for &p in net.paths_through(l) {
                let b = self.path_bound(p);
                self.ub_sum += b - self.path_ub[p.index()];
                self.path_ub[p.index()] = b;
            }
        }
    }

    /// Slots `t` where one more truck would exceed the per-slot or some
    /// rolling capacity, given usage counts.
    fn blocked(&self, usage: &[u8; K], cap_slot: u32, cap_roll: u32) -> SlotSet {
        let span = (self.net.rolling_window() as usize + 1).min(K);
        let mut full_window = [false; K];
        for (k, fw) in full_window.iter_mut().enumerate() {
            let sum: u32 = (0..span).map(|j| usage[(k + j) % K] as u32).sum();
            *fw = sum + 1 > cap_roll;
        }
        let mut out = SlotSet::EMPTY;
        for t in 0..K {
            let in_full_window = (0..span).any(|j| full_window[(t + K - j) % K]);
            if usage[t] as u32 + 1 > cap_slot || in_full_window {
                out.insert(Slot::from_offset(t as i64));
            }
        }
        out
    }

    fn filter_outbound(&mut self, n: NodeIdx, changed: &mut Vec<LegIdx>) {
        let cap = self.net.node(n).capacity;
        let blocked = self.blocked(&self.out_usage[n.index()], cap.out_slot, cap.out_rolling);
        for &l in self.net.out_legs(n) {
            let allowed = SlotSet::from_bits(!blocked.bits() & SlotSet::FULL.bits()).union(self.leg_used[l.index()]);
            self.restrict_leg(l, allowed, changed);
        }
    }

    fn filter_inbound(&mut self, n: NodeIdx, changed: &mut Vec<LegIdx>) {
        let cap = self.net.node(n).capacity;
        let blocked = self.blocked(&self.in_usage[n.index()], cap.in_slot, cap.in_rolling);
        let open = SlotSet::from_bits(!blocked.bits() & SlotSet::FULL.bits());
        for &l in self.net.in_legs(n) {
            let allowed = open.rotated(-(self.net.leg(l).transit_slots as i64)).union(self.leg_used[l.index()]);
            self.restrict_leg(l, allowed, changed);
        }
    }

    fn restrict_leg(&mut self, l: LegIdx, allowed: SlotSet, changed: &mut Vec<LegIdx>) {
        let mut any = false;
        for i in self.waves(l) {
            if self.assigned[i].is_none() {
                let d = self.dom[i].intersection(allowed);
                if d != self.dom[i] {
                    self.dom[i] = d;
                    any = true;
                }
            }
        }
        if any && !changed.contains(&l) {
            changed.push(l);
        }
    }

    /// Whether the station's backlog is already certain to remain at the
    /// end of the shift (more arrivals can only increase it).
    fn labor_overflows(&self, ds: NodeIdx, arrivals: &[i64; K]) -> bool {
        let shift = self.net.node(ds).labor_shift().unwrap();
        let total = self.ds_total[ds.index()];
        if total == 0 {
            return false;
        }
        let n = shift.len() as i64;
        let set = shift.as_set();
        let mut backlog: i64 = 0;
        for s in Slot::all() {
            if !set.contains(s) {
                backlog += arrivals[s.offset() as usize];
            }
        }
        backlog *= n;
        for s in shift.slots() {
            backlog = (backlog + n * arrivals[s.offset() as usize] - total).max(0);
        }
        backlog > 0
    }

    fn filter_labor(&mut self, ds: NodeIdx, changed: &mut Vec<LegIdx>) -> bool {
        if self.net.node(ds).kind() != NodeKind::Ds {
            return true;
        }
        let net = self.net;
        if self.unassigned_in[ds.index()] == 0 {
            let shift = net.node(ds).labor_shift().unwrap();
            return labor_from_arrivals(&self.arrivals[ds.index()], self.ds_total[ds.index()], shift.start, shift.len())
                == 0;
        }
        if self.labor_overflows(ds, &self.arrivals[ds.index()]) {
            return false;
        }
        for &l in net.in_legs(ds) {
            if !self.leg_used[l.index()].is_empty() {
                continue;
            }
            let v = self.leg_vol[l.index()];
            let mut allowed = SlotSet::EMPTY;
            let mut arr = self.arrivals[ds.index()];
            for t in self.leg_domain(l).iter() {
                let a = net.arrival_slot(l, t).offset() as usize;
                arr[a] += v;
                if !self.labor_overflows(ds, &arr) {
                    allowed.insert(t);
                }
                arr[a] -= v;
            }
            self.restrict_leg(l, allowed, changed);
        }
        true
    }

    fn spacing(&mut self, l: LegIdx, s: Slot, changed: &mut Vec<LegIdx>) {
        let eps = self.net.node(self.net.leg(l).origin).dispatch_spacing() as i64;
        if eps <= 1 || self.net.leg(l).waves < 2 {
            return;
        }
        let near = SlotSet::interval(s.shifted(-(eps - 1)), s.shifted(eps - 1));
        let allowed = SlotSet::from_bits(!near.bits() & SlotSet::FULL.bits()).union(SlotSet::single(s));
        self.restrict_leg(l, allowed, changed);
    }

    fn domains_nonempty(&self, legs: &[LegIdx]) -> bool {
        legs.iter().all(|&l| self.waves(l).all(|i| !self.dom[i].is_empty()))
    }

    /// Root filtering and singleton fixpoint; false if a domain empties.
    fn root(&mut self) -> bool {
        let net = self.net;
        let mut changed = Vec::new();
        for n in net.node_indices() {
            self.filter_outbound(n, &mut changed);
            self.filter_inbound(n, &mut changed);
            if !self.filter_labor(n, &mut changed) {
                return false;
            }
        }
        if self.dom.iter().any(|d| d.is_empty()) {
            return false;
        }
        loop {
            let forced = (0..self.dom.len()).find(|&i| self.assigned[i].is_none() && self.dom[i].len() == 1);
            let Some(i) = forced else { break };
            let s = self.dom[i].first().unwrap();
            if !self.assign(i, s) {
                return false;
            }
        }
        for p in net.path_indices() {
            let b = self.path_bound(p);
            self.path_ub[p.index()] = b;
            self.ub_sum += b;
        }
        true
    }

    /// Assigns a wave and propagates; false on a wipe-out.
    fn assign(&mut self, i: usize, s: Slot) -> bool {
        let net = self.net;
        let (l, _) = net.wave_at(i);
        let leg = net.leg(l);
        let (o, d) = (leg.origin, leg.dest);
        self.assigned[i] = Some(s);
        self.dom[i] = SlotSet::single(s);
        self.unassigned_in[d.index()] -= 1;
        let mut changed = vec![l];
        let new_slot = !self.leg_used[l.index()].contains(s);
        if new_slot {
            self.leg_used[l.index()].insert(s);
            let a = net.arrival_slot(l, s).offset() as usize;
            self.out_usage[o.index()][s.offset() as usize] += 1;
            self.in_usage[d.index()][a] += 1;
            if net.node(d).kind() == NodeKind::Ds {
                self.arrivals[d.index()][a] += self.leg_vol[l.index()];
            }
            self.filter_outbound(o, &mut changed);
            self.filter_inbound(d, &mut changed);
        }
        self.spacing(l, s, &mut changed);
        if !self.filter_labor(d, &mut changed) {
            return false;
        }
        if !self.domains_nonempty(&changed) {
            return false;
        }
        if self.ub_sum != 0 || !self.path_ub.iter().all(|&b| b == 0) {
            self.refresh_bounds(&changed);
        }
        true
    }

    fn frame(&self, i: usize) -> Frame {
        let (l, _) = self.net.wave_at(i);
        let leg = self.net.leg(l);
        Frame {
            dom: self.dom.clone(),
            path_ub: self.path_ub.clone(),
            ub_sum: self.ub_sum,
            out_usage: self.out_usage[leg.origin.index()],
            in_usage: self.in_usage[leg.dest.index()],
            leg_used: self.leg_used[l.index()],
            arrivals: (self.net.node(leg.dest).kind() == NodeKind::Ds).then(|| self.arrivals[leg.dest.index()]),
        }
    }

    fn restore(&mut self, i: usize, f: Frame) {
        let (l, _) = self.net.wave_at(i);
        let leg = self.net.leg(l);
        self.assigned[i] = None;
        self.unassigned_in[leg.dest.index()] += 1;
        self.dom = f.dom;
        self.path_ub = f.path_ub;
        self.ub_sum = f.ub_sum;
        self.out_usage[leg.origin.index()] = f.out_usage;
        self.in_usage[leg.dest.index()] = f.in_usage;
        self.leg_used[l.index()] = f.leg_used;
        if let Some(a) = f.arrivals {
            self.arrivals[leg.dest.index()] = a;
        }
    }

    fn incumbent_value(&self) -> i128 {
        let own = self.best.as_ref().map_or(self.floor, |b| b.0.max(self.floor));
        match self.shared {
            Some(s) => own.max(s.load(Ordering::Relaxed) as i128),
            None => own,
        }
    }

    fn values(&self, i: usize) -> Vec<Slot> {
        let mut vals: Vec<Slot> = self.dom[i].iter().rev().collect();
        if self.value_order == ValueOrder::BestBound && vals.len() > 1 {
            let (l, _) = self.net.wave_at(i);
            let paths = self.net.paths_through(l);
            let mut scored: Vec<(i128, Slot)> = vals
                .iter()
                .map(|&t| {
                    let score = paths
                        .iter()
                        .map(|&p| {
                            let path = self.net.path(p);
                            if path.legs[0] == l {
                                self.path_bound_with(p, SlotSet::single(t))
                            } else {
                                self.path_bound(p)
                            }
                        })
                        .sum();
                    (score, t)
                })
                .collect();
            scored.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
            vals = scored.into_iter().map(|x| x.1).collect();
        }
        vals
    }

    /// Returns false when stopped before the subtree was exhausted.
    fn dfs(&mut self, depth: usize, stop: &mut dyn FnMut() -> bool) -> bool {
        self.nodes += 1;
        if self.nodes.is_multiple_of(256) && stop() {
            self.stopped = true;
            return false;
        }
        if self.node_limit.is_some_and(|lim| self.nodes > lim) {
            return false;
        }
        if self.ub_sum <= self.incumbent_value() {
            return true;
        }
        // skip waves fixed at the root
        let mut depth = depth;
        while depth < self.order.len() && self.assigned[self.order[depth]].is_some() {
            depth += 1;
        }
        if depth == self.order.len() {
            self.record();
            return true;
        }
        let i = self.order[depth];
        for s in self.values(i) {
            if !self.dom[i].contains(s) {
                continue;
            }
            let frame = self.frame(i);
            let ok = self.assign(i, s);
            let finished = if ok { self.dfs(depth + 1, stop) } else { true };
            self.restore(i, frame);
            if !finished {
                return false;
            }
            if self.ub_sum <= self.incumbent_value() {
                break;
            }
        }
        true
    }

    fn record(&mut self) {
        let net = self.net;
        let slots: Vec<Slot> = self.assigned.iter().map(|s| s.unwrap()).collect();
        let plan = TdtPlan::from_flat(net, slots.iter().copied().map(Some).collect()).unwrap();
        let mut value = 0i128;
        for p in net.path_indices() {
            let out = propagate_path(net, &plan, p, &mut self.scratch);
            value += self.term(p, out.cutoff.unwrap(), out.promise.unwrap());
        }
        if value > self.floor && self.best.as_ref().is_none_or(|b| value > b.0) {
            self.best = Some((value, slots));
            if let Some(sh) = self.shared {
                sh.fetch_max(value.min(i64::MAX as i128) as i64, Ordering::Relaxed);
            }
        }
    }
}
