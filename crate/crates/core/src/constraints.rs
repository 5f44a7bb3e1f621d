//! Violation counting for shift, per-slot capacity, rolling capacity,
//! labor and dispatch-spacing constraints.
//!
//! Granularity: one violation per (leg, wave) outside its shift domain, per
//! (node, slot, direction) over per-slot capacity, per (node, window start,
//! direction) over rolling capacity, per failed station labor condition, and
//! per multi-wave leg with waves too close together.

use crate::instance::{LegIdx, Network, NodeIdx, NodeKind};
use crate::plan::TdtPlan;
use crate::slot::{Slot, SlotSet, SLOTS_PER_DAY};

const K: usize = SLOTS_PER_DAY as usize;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct ViolationReport {
    pub shifts: usize,
    pub slot_capacity: usize,
    pub rolling_capacity: usize,
    pub labor: usize,
    pub dispatch_spacing: usize,
    pub total: usize,
}

impl ViolationReport {
    fn with_total(mut self) -> Self {
        self.total = self.shifts + self.slot_capacity + self.rolling_capacity + self.labor + self.dispatch_spacing;
        self
    }

    pub fn is_feasible(&self) -> bool {
        self.total == 0
    }
}

impl core::ops::Add for ViolationReport {
    type Output = ViolationReport;

    fn add(self, o: ViolationReport) -> ViolationReport {
        ViolationReport {
            shifts: self.shifts + o.shifts,
            slot_capacity: self.slot_capacity + o.slot_capacity,
            rolling_capacity: self.rolling_capacity + o.rolling_capacity,
            labor: self.labor + o.labor,
            dispatch_spacing: self.dispatch_spacing + o.dispatch_spacing,
            total: 0,
        }
        .with_total()
    }
}

/// Waves of one leg outside its shift domain.
pub fn leg_shift_violations(net: &Network, plan: &TdtPlan, leg: LegIdx) -> usize {
    let dom = net.feasible_slots(leg);
    plan.waves(net, leg).iter().flatten().filter(|s| !dom.contains(**s)).count()
}

pub fn check_shifts(net: &Network, plan: &TdtPlan) -> usize {
    net.leg_indices().map(|l| leg_shift_violations(net, plan, l)).sum()
}

/// Trucks departing (`inbound = false`) or arriving per slot at a node.
/// Waves of a leg sharing a slot count once.
pub fn node_usage(net: &Network, plan: &TdtPlan, node: NodeIdx, inbound: bool) -> [u32; K] {
    let mut usage = [0u32; K];
    let legs = if inbound { net.in_legs(node) } else { net.out_legs(node) };
    for &l in legs {
        let mut slots = plan.distinct_slots(net, l);
        if inbound {
            slots = slots.rotated(net.leg(l).transit_slots as i64);
        }
        for s in slots.iter() {
            usage[s.offset() as usize] += 1;
        }
    }
    usage
}

fn slot_excess(usage: &[u32; K], cap: u32) -> usize {
    usage.iter().filter(|&&u| u > cap).count()
}

fn rolling_excess(usage: &[u32; K], cap: u32, window: u32) -> usize {
    let span = (window as usize + 1).min(K);
    let mut sum: u32 = usage[..span].iter().sum();
    let mut count = 0;
    for k in 0..K {
        if sum > cap {
            count += 1;
        }
        sum -= usage[k];
        sum += usage[(k + span) % K];
    }
    count
}

/// Per-slot and rolling capacity violations at one node, both directions.
pub fn node_capacity_violations(net: &Network, plan: &TdtPlan, node: NodeIdx) -> (usize, usize) {
    let cap = net.node(node).capacity;
    let mut slot = 0;
    let mut rolling = 0;
    if !net.out_legs(node).is_empty() {
        let u = node_usage(net, plan, node, false);
        slot += slot_excess(&u, cap.out_slot);
        rolling += rolling_excess(&u, cap.out_rolling, net.rolling_window());
    }
    if !net.in_legs(node).is_empty() {
        let u = node_usage(net, plan, node, true);
        slot += slot_excess(&u, cap.in_slot);
        rolling += rolling_excess(&u, cap.in_rolling, net.rolling_window());
    }
    (slot, rolling)
}

pub fn check_slot_capacity(net: &Network, plan: &TdtPlan) -> usize {
    net.node_indices().map(|n| node_capacity_violations(net, plan, n).0).sum()
}

pub fn check_rolling_capacity(net: &Network, plan: &TdtPlan) -> usize {
    net.node_indices().map(|n| node_capacity_violations(net, plan, n).1).sum()
}

/// Volume in thousandths, the integer unit of the labor recursion.
#[inline]
pub fn milli_volume(v: f64) -> i64 {
    libm::round(v * 1000.0) as i64
}

/// Labor violations at a station (0, 1 or 2).
///
/// Arrivals outside the labor shift form the opening backlog. Each shift
/// slot adds its arrivals and then processes `rate = V / n`, where `V` is
/// the volume of placed inbound legs and `n` the shift length; the backlog
/// is floored at zero. Violations: backlog left after the last slot, and
/// (for shifts of two or more slots) no backlog left after the second-last
/// slot. The recursion runs on `n * backlog` in integer thousandths so it
/// is exact.
pub fn labor_violations_at(net: &Network, plan: &TdtPlan, ds: NodeIdx) -> usize {
    let Some(shift) = net.node(ds).labor_shift() else { return 0 };
    let mut arrivals = [0i64; K];
    let mut total = 0i64;
    for &l in net.in_legs(ds) {
        let slots = plan.distinct_slots(net, l).rotated(net.leg(l).transit_slots as i64);
        let n = slots.len() as i64;
        if n == 0 {
            continue;
        }
        let v = milli_volume(net.leg(l).volume);
        for (i, s) in slots.iter().enumerate() {
            let share = v / n + if (i as i64) < v % n { 1 } else { 0 };
            arrivals[s.offset() as usize] += share;
        }
        total += v;
    }
    labor_from_arrivals(&arrivals, total, shift.start, shift.len())
}

pub(crate) fn labor_from_arrivals(arrivals: &[i64; K], total: i64, start: Slot, len: usize) -> usize {
    if total == 0 {
        return 0;
    }
    let n = len as i64;
    let shift = SlotSet::interval(start, start.shifted(len as i64 - 1));
    let opening: i64 = Slot::all()
        .filter(|s| !shift.contains(*s))
        .map(|s| arrivals[s.offset() as usize])
        .sum();
    let mut backlog = n * opening;
    let mut second_last = backlog;
    for i in 0..len {
        let s = start.shifted(i as i64);
        backlog = (backlog + n * arrivals[s.offset() as usize] - total).max(0);
        if i + 2 == len {
            second_last = backlog;
        }
    }
    let mut v = 0;
    if backlog > 0 {
        v += 1;
    }
    if len >= 2 && second_last <= 0 {
        v += 1;
    }
    v
}

pub fn check_labor(net: &Network, plan: &TdtPlan) -> usize {
    net.node_indices()
        .filter(|&n| net.node(n).kind() == NodeKind::Ds)
        .map(|n| labor_violations_at(net, plan, n))
        .sum()
}

/// Whether a multi-wave leg has two distinct departures closer than the
/// origin's dispatch spacing (circularly).
pub fn spacing_violated(net: &Network, plan: &TdtPlan, leg: LegIdx) -> bool {
    let waves = plan.waves(net, leg);
    if waves.len() < 2 {
        return false;
    }
    let eps = net.node(net.leg(leg).origin).dispatch_spacing();
    for (i, a) in waves.iter().enumerate() {
        for b in &waves[i + 1..] {
            if let (Some(a), Some(b)) = (a, b) {
                if a != b && (a.circular_distance(*b) as u32) < eps {
                    return true;
                }
            }
        }
    }
    false
}

pub fn check_dispatch_spacing(net: &Network, plan: &TdtPlan) -> usize {
    net.leg_indices().filter(|&l| spacing_violated(net, plan, l)).count()
}

pub fn count_violations(net: &Network, plan: &TdtPlan) -> ViolationReport {
    let mut slot = 0;
    let mut rolling = 0;
    for n in net.node_indices() {
        let (s, r) = node_capacity_violations(net, plan, n);
        slot += s;
        rolling += r;
    }
    ViolationReport {
        shifts: check_shifts(net, plan),
        slot_capacity: slot,
        rolling_capacity: rolling,
        labor: check_labor(net, plan),
        dispatch_spacing: check_dispatch_spacing(net, plan),
        total: 0,
    }
    .with_total()
}

/// Violations attributable to the given legs: shift and spacing on each leg,
/// and capacity/labor at their end nodes. When only these legs changed
/// between two plans, the difference of this count equals the difference of
/// the global count.
pub fn local_violations(net: &Network, plan: &TdtPlan, legs: &[LegIdx]) -> usize {
    let mut total = 0;
    let mut nodes: [Option<NodeIdx>; 8] = [None; 8];
    let mut extra: alloc::vec::Vec<NodeIdx> = alloc::vec::Vec::new();
    let mut seen = |n: NodeIdx| -> bool {
        if nodes.contains(&Some(n)) || extra.contains(&n) {
            return true;
        }
        if let Some(slot) = nodes.iter_mut().find(|s| s.is_none()) {
            *slot = Some(n);
        } else {
            extra.push(n);
        }
        false
    };
    for &l in legs {
        total += leg_shift_violations(net, plan, l);
        total += spacing_violated(net, plan, l) as usize;
        for n in [net.leg(l).origin, net.leg(l).dest] {
            if seen(n) {
                continue;
            }
            let (s, r) = node_capacity_violations(net, plan, n);
            total += s + r + labor_violations_at(net, plan, n);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::*;
    use crate::instance::{Network, NetworkSpec, DEFAULT_ROLLING_WINDOW};
    use alloc::vec;

    fn fan_out(n_legs: usize, cap_slot: u32, cap_roll: u32) -> Network {
        let mut nodes = vec![sw("S")];
        nodes[0].capacity.out_slot = cap_slot;
        nodes[0].capacity.out_rolling = cap_roll;
        let mut legs = vec![];
        let mut paths = vec![];
        for i in 0..n_legs {
            let d = alloc::format!("D{i}");
            nodes.push(ds(&d, 33, 25, 40));
            let id = alloc::format!("l{i}");
            legs.push(leg(&id, "S", &d, 10, 1));
            paths.push(path(&alloc::format!("p{i}"), &[&id], 1.0));
        }
        NetworkSpec {
            rolling_window: DEFAULT_ROLLING_WINDOW,
            nodes,
            legs,
            paths,
            segments: vec![],
            curves: vec![],
        }
        .build()
        .unwrap()
        .network
    }

    fn plan_of(net: &Network, slots: &[u16]) -> TdtPlan {
        TdtPlan::from_flat(net, slots.iter().map(|&k| Slot::new(k)).collect()).unwrap()
    }

    #[test]
    fn per_slot_capacity() {
        let net = fan_out(3, 2, 50);
        assert_eq!(check_slot_capacity(&net, &plan_of(&net, &[5, 5, 0])), 0);
        assert_eq!(check_slot_capacity(&net, &plan_of(&net, &[5, 5, 5])), 1);
    }

    #[test]
    fn multi_wave_same_slot_counts_once() {
        let spec = NetworkSpec {
            rolling_window: DEFAULT_ROLLING_WINDOW,
            nodes: vec![sw("S"), sc("C", 0), ds("D", 33, 25, 40)],
            legs: vec![leg("a", "S", "C", 10, 2), leg("b", "C", "D", 10, 1)],
            paths: vec![path("p", &["a", "b"], 1.0)],
            segments: vec![],
            curves: vec![],
        };
        let mut spec = spec;
        spec.nodes[0].capacity.out_slot = 1;
        spec.nodes[1].capacity.in_slot = 1;
        let net = spec.build().unwrap().network;
        assert_eq!(check_slot_capacity(&net, &plan_of(&net, &[7, 7, 30])), 0);
        assert_eq!(node_usage(&net, &plan_of(&net, &[7, 7, 30]), NodeIdx(1), true)[16], 1);
    }

    #[test]
    fn rolling_window_counts() {
        let net = fan_out(5, 10, 5);
        let plan = plan_of(&net, &[10, 11, 12, 13, 14]);
        assert_eq!(check_rolling_capacity(&net, &plan), 0);
        let net4 = fan_out(5, 10, 4);
        // only the window starting at slot 10 holds all five
        assert_eq!(check_rolling_capacity(&net4, &plan), 1);
        assert_eq!(check_rolling_capacity(&net4, &TdtPlan::empty(&net4)), 0);
        // wrap-around window
        let wrap = plan_of(&net4, &[95, 96, 1, 2, 3]);
        assert_eq!(check_rolling_capacity(&net4, &wrap), 1);
    }

    #[test]
    fn dispatch_spacing_wraps() {
        let spec = NetworkSpec {
            rolling_window: DEFAULT_ROLLING_WINDOW,
            nodes: vec![sw("S"), sc("C", 0), ds("D", 33, 25, 40)],
            legs: vec![leg("a", "S", "C", 10, 2), leg("b", "C", "D", 10, 1)],
            paths: vec![path("p", &["a", "b"], 1.0)],
            segments: vec![],
            curves: vec![],
        };
        let net = spec.build().unwrap().network; // spacing 4
        assert_eq!(check_dispatch_spacing(&net, &plan_of(&net, &[9, 9, 1])), 0);
        assert_eq!(check_dispatch_spacing(&net, &plan_of(&net, &[2, 95, 1])), 1);
        assert_eq!(check_dispatch_spacing(&net, &plan_of(&net, &[10, 20, 1])), 0);
        assert_eq!(check_dispatch_spacing(&net, &plan_of(&net, &[10, 0, 1])), 0);
    }

    #[test]
    fn shifts_flag_closed_arrivals() {
        let mut spec = example_direct().to_spec();
        spec.nodes[1].inbound_shift = SlotSet::interval(Slot::of(1), Slot::of(40));
        let net = spec.build().unwrap().network;
        // 81 + 48 -> slot 33 open; 90 + 48 -> slot 42 closed
        assert_eq!(check_shifts(&net, &plan_of(&net, &[81])), 0);
        assert_eq!(check_shifts(&net, &plan_of(&net, &[90])), 1);
    }

    fn labor_net(volume: f64, start: u16, end: u16) -> Network {
        let mut spec = example_direct().to_spec();
        spec.nodes[1] = ds("DS3", 33, start, end);
        spec.paths[0].volume = volume;
        spec.build().unwrap().network
    }

    #[test]
    fn labor_drains_exactly_when_arriving_at_shift_start() {
        // shift 25..=40 (16 slots), rate = volume / 16
        let net = labor_net(16.0, 25, 40);
        // arrival slot 25 <- departure 73 (+48)
        assert_eq!(check_labor(&net, &plan_of(&net, &[73])), 0);
        // arriving before the shift is opening backlog, also fine
        assert_eq!(check_labor(&net, &plan_of(&net, &[60])), 0);
    }

    #[test]
    fn labor_fails_when_everything_arrives_last() {
        let net = labor_net(16.0, 25, 40);
        // arrival slot 40 <- departure 88
        assert!(check_labor(&net, &plan_of(&net, &[88])) >= 1);
        // mid-shift arrival leaves backlog at the end
        assert!(check_labor(&net, &plan_of(&net, &[80])) >= 1);
    }

    #[test]
    fn labor_shift_across_midnight() {
        let net = labor_net(8.0, 93, 4); // 93..96, 1..4
        // arrival at 93 <- departure 45
        assert_eq!(check_labor(&net, &plan_of(&net, &[45])), 0);
        // arrival at slot 2 (mid-shift, after midnight) <- departure 50
        assert!(check_labor(&net, &plan_of(&net, &[50])) >= 1);
    }

    #[test]
    fn labor_is_vacuous_without_arrivals() {
        let net = labor_net(16.0, 25, 40);
        assert_eq!(check_labor(&net, &TdtPlan::empty(&net)), 0);
    }

    #[test]
    fn report_total_is_sum() {
        let net = fan_out(3, 1, 1);
        let r = count_violations(&net, &plan_of(&net, &[5, 5, 6]));
        assert_eq!(r.slot_capacity, 1);
        assert_eq!(r.total, r.shifts + r.slot_capacity + r.rolling_capacity + r.labor + r.dispatch_spacing);
        assert!(r.rolling_capacity > 0);
    }
}
