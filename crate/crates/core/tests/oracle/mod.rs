//! Reference implementations written directly from the model definitions,
//! plus small instance builders. Shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdt_core::instance::{
    Capacities, LaborShift, LegIdx, LegSpec, Node, NodeIdx, NodeKind, NodeRole, PathIdx, PathSpec, SegmentSpec,
};
use tdt_core::{Network, NetworkSpec, Slot, SlotSet, TdtPlan};

pub const K: u32 = 96;

pub fn arrival(slot: Slot, transit: u32) -> Slot {
    Slot::of(((slot.get() as u32 - 1 + transit) % K + 1) as u16)
}

fn placed(plan: &TdtPlan, net: &Network, l: LegIdx) -> Vec<Slot> {
    let mut v: Vec<Slot> = plan.waves(net, l).iter().flatten().copied().collect();
    v.sort();
    v.dedup();
    v
}

/// Departure slots allowed by the origin's outbound and destination's inbound shifts.
pub fn shift_domain(net: &Network, l: LegIdx) -> Vec<Slot> {
    let leg = net.leg(l);
    (1..=K as u16)
        .map(Slot::of)
        .filter(|&s| {
            net.node(leg.origin).outbound_shift.contains(s)
                && net.node(leg.dest).inbound_shift.contains(arrival(s, leg.transit_slots))
        })
        .collect()
}

pub fn shifts(net: &Network, plan: &TdtPlan) -> usize {
    let mut n = 0;
    for l in net.leg_indices() {
        let leg = net.leg(l);
        for s in plan.waves(net, l).iter().flatten() {
            let out_ok = net.node(leg.origin).outbound_shift.contains(*s);
            let in_ok = net.node(leg.dest).inbound_shift.contains(arrival(*s, leg.transit_slots));
            if !(out_ok && in_ok) {
                n += 1;
            }
        }
    }
    n
}

/// Trucks per slot (index 0 = slot 1) leaving or reaching a node.
fn usage(net: &Network, plan: &TdtPlan, node: NodeIdx, inbound: bool) -> Vec<u32> {
    let mut u = vec![0; K as usize];
    for l in net.leg_indices() {
        let leg = net.leg(l);
        let at = if inbound { leg.dest } else { leg.origin };
        if at != node {
            continue;
        }
        let mut slots: Vec<Slot> =
            placed(plan, net, l).into_iter().map(|s| if inbound { arrival(s, leg.transit_slots) } else { s }).collect();
        slots.sort();
        slots.dedup();
        for s in slots {
            u[s.get() as usize - 1] += 1;
        }
    }
    u
}

fn directions(net: &Network, node: NodeIdx) -> Vec<bool> {
    let mut d = Vec::new();
    if net.leg_indices().any(|l| net.leg(l).origin == node) {
        d.push(false);
    }
    if net.leg_indices().any(|l| net.leg(l).dest == node) {
        d.push(true);
    }
    d
}

pub fn slot_capacity(net: &Network, plan: &TdtPlan) -> usize {
    let mut n = 0;
    for node in net.node_indices() {
        let cap = net.node(node).capacity;
        for inbound in directions(net, node) {
            let c = if inbound { cap.in_slot } else { cap.out_slot };
            n += usage(net, plan, node, inbound).iter().filter(|&&u| u > c).count();
        }
    }
    n
}

pub fn rolling_capacity(net: &Network, plan: &TdtPlan) -> usize {
    let kappa = net.rolling_window() as usize;
    let mut n = 0;
    for node in net.node_indices() {
        let cap = net.node(node).capacity;
        for inbound in directions(net, node) {
            let c = if inbound { cap.in_rolling } else { cap.out_rolling };
            let u = usage(net, plan, node, inbound);
            for k in 0..K as usize {
                let sum: u32 = (0..=kappa.min(K as usize - 1)).map(|j| u[(k + j) % K as usize]).sum();
                if sum > c {
                    n += 1;
                }
            }
        }
    }
    n
}

pub fn labor(net: &Network, plan: &TdtPlan) -> usize {
    let mut n = 0;
    for ds in net.node_indices() {
        let Some(shift) = net.node(ds).labor_shift() else { continue };
        let mut arrivals = vec![0.0f64; K as usize];
        let mut total = 0.0;
        for l in net.leg_indices() {
            let leg = net.leg(l);
            if leg.dest != ds {
                continue;
            }
            let slots = placed(plan, net, l);
            if slots.is_empty() {
                continue;
            }
            for s in &slots {
                arrivals[arrival(*s, leg.transit_slots).get() as usize - 1] += leg.volume / slots.len() as f64;
            }
            total += leg.volume;
        }
        if total == 0.0 {
            continue;
        }
        let mut shift_slots = Vec::new();
        let mut s = shift.start;
        loop {
            shift_slots.push(s);
            if s == shift.end {
                break;
            }
            s = Slot::of(s.get() as u16 % K as u16 + 1);
        }
        let len = shift_slots.len();
        let rate = total / len as f64;
        let mut backlog: f64 =
            (1..=K as u16).filter(|k| !shift_slots.contains(&Slot::of(*k))).map(|k| arrivals[k as usize - 1]).sum();
        let mut history = Vec::new();
        for s in &shift_slots {
            backlog = (backlog + arrivals[s.get() as usize - 1] - rate).max(0.0);
            history.push(backlog);
        }
        let tol = 1e-9 * total;
        if history[len - 1] > tol {
            n += 1;
        }
        if len >= 2 && history[len - 2] <= tol {
            n += 1;
        }
    }
    n
}

pub fn spacing(net: &Network, plan: &TdtPlan) -> usize {
    let mut n = 0;
    for l in net.leg_indices() {
        let eps = match net.node(net.leg(l).origin).role {
            NodeRole::Sw { dispatch_spacing } => dispatch_spacing as i32,
            _ => 0,
        };
        let w: Vec<Slot> = plan.waves(net, l).iter().flatten().copied().collect();
        let mut bad = false;
        for i in 0..w.len() {
            for j in i + 1..w.len() {
                let d = (w[i].get() as i32 - w[j].get() as i32).abs();
                let circ = d.min(K as i32 - d);
                if circ > 0 && circ < eps {
                    bad = true;
                }
            }
        }
        n += bad as usize;
    }
    n
}

pub fn total_violations(net: &Network, plan: &TdtPlan) -> usize {
    shifts(net, plan) + slot_capacity(net, plan) + rolling_capacity(net, plan) + labor(net, plan) + spacing(net, plan)
}

/// Path promise and first-leg slot by trying every combination of placed
/// waves and scanning forward slot by slot for each connection.
pub fn path_outcome(net: &Network, plan: &TdtPlan, p: PathIdx) -> Option<(u8, Slot)> {
    let path = net.path(p);
    let choices: Vec<Vec<Slot>> =
        path.legs.iter().map(|&l| plan.waves(net, l).iter().flatten().copied().collect()).collect();
    if choices.iter().any(|c| c.is_empty()) {
        return None;
    }
    let cutoff = net.node(path.dest).cutoff().unwrap();
    let mut best: Option<(u8, Vec<Slot>)> = None;
    let mut idx = vec![0usize; choices.len()];
    loop {
        let combo: Vec<Slot> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
        let mut t = combo[0].get() as i64 - 1;
        let mut promise = 0u8;
        for (i, &l) in path.legs.iter().enumerate() {
            let leg = net.leg(l);
            let arr = t + leg.transit_slots as i64;
            if i + 1 == path.legs.len() {
                let day = arr / K as i64;
                let slot = (arr % K as i64 + 1) as u16;
                let delivered = if slot <= cutoff.get() as u16 { day } else { day + 1 };
                promise = delivered.min(8) as u8;
            } else {
                let processing = match net.node(leg.dest).role {
                    NodeRole::Sc { processing_slots } => processing_slots as i64,
                    _ => 0,
                };
                let mut d = arr + processing;
                while (d % K as i64 + 1) as u16 != combo[i + 1].get() as u16 {
                    d += 1;
                }
                t = d;
            }
        }
        let better = match &best {
            None => true,
            Some((bp, bs)) => promise < *bp || (promise == *bp && combo > *bs),
        };
        if better {
            best = Some((promise, combo));
        }
        let mut i = idx.len();
        loop {
            if i == 0 {
                let (p, s) = best.unwrap();
                return Some((p, s[0]));
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < choices[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

pub fn omega(day: u8) -> f64 {
    [1.0, 0.5, 0.25, 0.125, 0.0625].get(day as usize).copied().unwrap_or(0.0)
}

/// Package speed with the default promise weights.
pub fn package_speed(net: &Network, plan: &TdtPlan) -> f64 {
    let mut acc = 0.0;
    for p in net.path_indices() {
        if let Some((pi, x)) = path_outcome(net, plan, p) {
            let x = x.get() as f64;
            acc += net.path(p).volume * (x * omega(pi) + (K as f64 - x) * omega(pi + 1));
        }
    }
    acc / K as f64
}

/// Calls `f` on every plan whose waves take values from `domains` (flat order).
pub fn for_each_plan(net: &Network, domains: &[Vec<Option<Slot>>], mut f: impl FnMut(&TdtPlan)) {
    let n = domains.len();
    if domains.iter().any(|d| d.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; n];
    let mut plan = TdtPlan::empty(net);
    loop {
        for i in 0..n {
            plan.flat_mut()[i] = domains[i][idx[i]];
        }
        f(&plan);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < domains[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// Shift domains per flat wave, optionally with the NULL choice.
pub fn wave_domains(net: &Network, with_null: bool) -> Vec<Vec<Option<Slot>>> {
    let mut out = Vec::new();
    for l in net.leg_indices() {
        let mut d: Vec<Option<Slot>> = shift_domain(net, l).into_iter().map(Some).collect();
        if with_null {
            d.push(None);
        }
        for _ in 0..net.leg(l).waves {
            out.push(d.clone());
        }
    }
    out
}

/// Best package speed over complete feasible assignments, or `None` if
/// there are none.
pub fn brute_force_package_speed(net: &Network) -> Option<f64> {
    let mut best: Option<f64> = None;
    for_each_plan(net, &wave_domains(net, false), |plan| {
        if total_violations(net, plan) == 0 {
            let v = package_speed(net, plan);
            if best.is_none_or(|b| v > b) {
                best = Some(v);
            }
        }
    });
    best
}

pub fn sw(id: &str, window: SlotSet, spacing: u32, out_slot: u32, out_rolling: u32) -> Node {
    Node {
        id: id.into(),
        role: NodeRole::Sw { dispatch_spacing: spacing },
        inbound_shift: SlotSet::EMPTY,
        outbound_shift: window,
        capacity: Capacities { in_slot: 0, out_slot, in_rolling: 0, out_rolling },
    }
}

pub fn sc(id: &str, processing: u32, outbound: SlotSet, cap: Capacities) -> Node {
    Node {
        id: id.into(),
        role: NodeRole::Sc { processing_slots: processing },
        inbound_shift: SlotSet::FULL,
        outbound_shift: outbound,
        capacity: cap,
    }
}

pub fn ds(id: &str, cutoff: u16, start: u16, end: u16, inbound: SlotSet, cap: Capacities) -> Node {
    Node {
        id: id.into(),
        role: NodeRole::Ds {
            cutoff: Slot::of(cutoff),
            shift: LaborShift { start: Slot::of(start), end: Slot::of(end) },
        },
        inbound_shift: inbound,
        outbound_shift: SlotSet::EMPTY,
        capacity: cap,
    }
}

pub fn leg(id: &str, o: &str, d: &str, transit: u32, waves: u8) -> LegSpec {
    LegSpec { id: id.into(), origin: o.into(), dest: d.into(), transit_slots: transit, waves, volume: None }
}

pub fn path(id: &str, legs: &[&str], volume: f64) -> PathSpec {
    PathSpec { id: id.into(), legs: legs.iter().map(|s| s.to_string()).collect(), volume }
}

pub fn segment(ds: &str, weight: f64, sws: &[&str]) -> SegmentSpec {
    SegmentSpec { ds: ds.into(), weight, serving_sws: sws.iter().map(|s| s.to_string()).collect() }
}

fn roomy() -> Capacities {
    Capacities { in_slot: 10, out_slot: 10, in_rolling: 50, out_rolling: 50 }
}

/// Direct SW→DS leg with 12 h transit and an 8:00 cutoff.
pub fn example_direct() -> Network {
    NetworkSpec {
        rolling_window: 4,
        nodes: vec![
            sw("SW2", SlotSet::FULL, 4, 10, 50),
            ds("DS3", 33, 33, 48, SlotSet::FULL, roomy()),
        ],
        legs: vec![leg("SW2-DS3", "SW2", "DS3", 48, 1)],
        paths: vec![path("P1", &["SW2-DS3"], 1.0)],
        segments: vec![segment("DS3", 1.0, &["SW2"])],
        curves: vec![],
    }
    .build()
    .unwrap()
    .network
}

/// SW→SC→DS with 12 h and 8 h transits, 3 h sort and an 8:00 cutoff.
pub fn example_sort_center() -> Network {
    NetworkSpec {
        rolling_window: 4,
        nodes: vec![
            sw("SW1", SlotSet::FULL, 4, 10, 50),
            sc("SC1", 12, SlotSet::FULL, roomy()),
            ds("DS1", 33, 33, 48, SlotSet::FULL, roomy()),
        ],
        legs: vec![leg("SW1-SC1", "SW1", "SC1", 48, 1), leg("SC1-DS1", "SC1", "DS1", 32, 1)],
        paths: vec![path("P1", &["SW1-SC1", "SC1-DS1"], 1.0)],
        segments: vec![segment("DS1", 1.0, &["SW1"])],
        curves: vec![],
    }
    .build()
    .unwrap()
    .network
}

/// Random tiny network: one of a few shapes with at most `max_legs` legs and
/// `max_waves` waves; every shift window spans at most 24 slots. Capacities
/// are tight enough that constraints bind.
pub struct Tiny {
    pub max_legs: usize,
    pub max_waves: usize,
    pub window: u16,
}

impl Tiny {
    pub fn build(&self, seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let spec = self.spec(&mut rng);
            let net = spec.build().unwrap().network;
            if net.legs().len() <= self.max_legs && net.total_waves() <= self.max_waves {
                return net;
            }
        }
    }

    fn window(&self, rng: &mut ChaCha8Rng) -> SlotSet {
        let start = rng.gen_range(1..=96u16);
        let width = rng.gen_range(self.window / 2..=self.window) as i64;
        SlotSet::interval(Slot::of(start), Slot::of(start).shifted(width - 1))
    }

    fn spec(&self, rng: &mut ChaCha8Rng) -> NetworkSpec {
        let shape = rng.gen_range(0..5);
        let transit = |rng: &mut ChaCha8Rng| rng.gen_range(2..=60u32);
        let mut nodes = Vec::new();
        let sw_node = |rng: &mut ChaCha8Rng, id: &str| {
            sw(id, self.window(rng), rng.gen_range(1..=6), rng.gen_range(1..=2), rng.gen_range(1..=4))
        };
        let sw1 = sw_node(rng, "W1");
        let sw2 = sw_node(rng, "W2");
        let cap = |rng: &mut ChaCha8Rng| Capacities {
            in_slot: rng.gen_range(1..=2),
            out_slot: rng.gen_range(1..=2),
            in_rolling: rng.gen_range(1..=4),
            out_rolling: rng.gen_range(1..=4),
        };
        let cutoff = rng.gen_range(20..=50u16);
        let start = cutoff + rng.gen_range(0..=8u16);
        let len = rng.gen_range(1..=24u16);
        let inbound = if rng.gen_bool(0.3) { self.window(rng).union(self.window(rng)) } else { SlotSet::FULL };
        let d = ds("D", cutoff, start, Slot::of(start).shifted(len as i64 - 1).get() as u16, inbound, cap(rng));
        let c = sc("C", rng.gen_range(0..=16), self.window(rng), cap(rng));
        let two = if rng.gen_bool(0.5) { 2 } else { 1 };
        let (legs, paths) = match shape {
            0 => (vec![leg("W1-D", "W1", "D", transit(rng), 1)], vec![path("P1", &["W1-D"], 1.0)]),
            1 => (
                vec![leg("W1-D", "W1", "D", transit(rng), 1), leg("W2-D", "W2", "D", transit(rng), 1)],
                vec![path("P1", &["W1-D"], 1.0), path("P2", &["W2-D"], 1.0)],
            ),
            2 => (
                vec![
                    leg("W1-C", "W1", "C", transit(rng), two),
                    leg("C-D", "C", "D", transit(rng), 1),
                    leg("W1-D", "W1", "D", transit(rng), 1),
                ],
                vec![path("P1", &["W1-C", "C-D"], 1.0), path("P2", &["W1-D"], 1.0)],
            ),
            3 => (
                vec![
                    leg("W1-C", "W1", "C", transit(rng), two),
                    leg("W2-C", "W2", "C", transit(rng), 1),
                    leg("C-D", "C", "D", transit(rng), 1),
                ],
                vec![path("P1", &["W1-C", "C-D"], 1.0), path("P2", &["W2-C", "C-D"], 1.0)],
            ),
            _ => (
                vec![
                    leg("W1-C", "W1", "C", transit(rng), two),
                    leg("W2-C", "W2", "C", transit(rng), 1),
                    leg("C-D", "C", "D", transit(rng), 1),
                    leg("W1-D", "W1", "D", transit(rng), 1),
                ],
                vec![
                    path("P1", &["W1-C", "C-D"], 1.0),
                    path("P2", &["W2-C", "C-D"], 1.0),
                    path("P3", &["W1-D"], 1.0),
                ],
            ),
        };
        let mut paths = paths;
        for p in &mut paths {
            p.volume = rng.gen_range(1..=50) as f64;
        }
        let uses = |name: &str| legs.iter().any(|l| l.origin == name || l.dest == name);
        if uses("W1") {
            nodes.push(sw1);
        }
        if uses("W2") {
            nodes.push(sw2);
        }
        if uses("C") {
            nodes.push(c);
        }
        nodes.push(d);
        let mut segments = Vec::new();
        for w in ["W1", "W2"] {
            let vol: f64 = paths.iter().filter(|p| p.legs[0].starts_with(w)).map(|p| p.volume).sum();
            if vol > 0.0 {
                segments.push(segment("D", vol, &[w]));
            }
        }
        NetworkSpec { rolling_window: rng.gen_range(1..=4), nodes, legs, paths, segments, curves: vec![] }
    }
}

/// Product of the shift-domain sizes (plus NULL when requested).
pub fn search_space(net: &Network, with_null: bool) -> u64 {
    wave_domains(net, with_null).iter().map(|d| d.len() as u64).product()
}

pub fn is_ds(net: &Network, n: NodeIdx) -> bool {
    net.node(n).kind() == NodeKind::Ds
}
