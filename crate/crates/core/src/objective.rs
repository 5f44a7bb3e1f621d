//! Objectives: the package-speed proxy, the demand-coverage evaluator with
//! station-level overlap aggregation, and coverage KPIs.

use alloc::string::String;
use alloc::vec::Vec;

use crate::instance::{Network, PathIdx};
use crate::plan::{PathOutcome, PropagationResult};
use crate::slot::{Slot, SLOTS_PER_DAY};

/// Target promise days covered by the KPIs (0D..3D).
pub const TARGET_DAYS: usize = 4;

/// Weight per promise day; days past the end weigh zero.
#[derive(Clone, PartialEq, Debug)]
pub struct PromiseWeights(Vec<f64>);

impl PromiseWeights {
    pub fn new(omega: Vec<f64>) -> Result<PromiseWeights, String> {
        if omega.len() < 5 {
            return Err("at least 5 promise weights (days 0-4) are required".into());
        }
        if omega.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err("promise weights must be finite and non-negative".into());
        }
        if omega.windows(2).any(|w| w[1] > w[0]) {
            return Err("promise weights must be non-increasing".into());
        }
        Ok(PromiseWeights(omega))
    }

    #[inline]
    pub fn weight(&self, day: u32) -> f64 {
        self.0.get(day as usize).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Default for PromiseWeights {
    /// `(1, 0.5, 0.25, 0.125, 0.0625)`, zero afterwards.
    fn default() -> Self {
        PromiseWeights(alloc::vec![1.0, 0.5, 0.25, 0.125, 0.0625])
    }
}

/// Cumulative share of a warehouse's daily demand captured by a given
/// order cutoff slot; non-decreasing with `g(96) = 1`.
#[derive(Clone, PartialEq, Debug)]
pub struct DemandCurve([f64; SLOTS_PER_DAY as usize]);

const fn uniform_curve() -> [f64; SLOTS_PER_DAY as usize] {
    let mut v = [0.0; SLOTS_PER_DAY as usize];
    let mut k = 0;
    while k < SLOTS_PER_DAY as usize {
        v[k] = (k + 1) as f64 / SLOTS_PER_DAY as f64;
        k += 1;
    }
    v
}

impl DemandCurve {
    /// `g(k) = k / 96`.
    pub const UNIFORM: DemandCurve = DemandCurve(uniform_curve());

    pub fn new(values: [f64; SLOTS_PER_DAY as usize]) -> Result<DemandCurve, String> {
        let c = DemandCurve(values);
        c.check()?;
        Ok(c)
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if self.0.iter().any(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err("values must lie in [0, 1]".into());
        }
        if self.0.windows(2).any(|w| w[1] < w[0]) {
            return Err("values must be non-decreasing".into());
        }
        if self.0[SLOTS_PER_DAY as usize - 1] != 1.0 {
            return Err("value at slot 96 must be 1".into());
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, slot: Slot) -> f64 {
        self.0[slot.offset() as usize]
    }

    pub fn values(&self) -> &[f64; SLOTS_PER_DAY as usize] {
        &self.0
    }
}

/// Package speed of one path with first-leg departure `cutoff` and promise
/// `promise`, multiplied by 96. Kept unscaled until the final sum so equal
/// objectives compare bit-for-bit.
#[inline]
pub(crate) fn package_speed_term(volume: f64, cutoff: Slot, promise: u8, w: &PromiseWeights) -> f64 {
    let x = cutoff.get() as f64;
    let k = SLOTS_PER_DAY as f64;
    volume * (x * w.weight(promise as u32) + (k - x) * w.weight(promise as u32 + 1))
}

/// Volume-weighted package speed summed over all reachable paths.
pub fn package_speed(net: &Network, prop: &PropagationResult, w: &PromiseWeights) -> f64 {
    let mut acc = 0.0;
    for p in net.path_indices() {
        if let PathOutcome { promise: Some(pi), cutoff: Some(x) } = prop.outcome(p) {
            acc += package_speed_term(net.path(p).volume, x, pi, w);
        }
    }
    acc / SLOTS_PER_DAY as f64
}

/// Expected coverage of one path at target promise `target`.
#[inline]
pub fn blackbox_path(curve: &DemandCurve, outcome: PathOutcome, target: u8) -> f64 {
    match (outcome.promise, outcome.cutoff) {
        (Some(p), Some(x)) if p == target => curve.at(x),
        (Some(p), Some(_)) if p < target => curve.at(Slot::LAST),
        _ => 0.0,
    }
}

/// Coverage totals per target day for a single station: each segment is
/// covered by its best serving path.
pub fn station_totals(net: &Network, ds: crate::instance::NodeIdx, outcome: impl Fn(PathIdx) -> PathOutcome) -> [f64; TARGET_DAYS] {
    let mut totals = [0.0; TARGET_DAYS];
    for &si in net.segments_of(ds) {
        let seg = &net.segments()[si];
        let mut best = [0.0f64; TARGET_DAYS];
        for &p in net.paths_to(ds) {
            let path = net.path(p);
            if seg.serving_sws.binary_search(&path.origin).is_err() {
                continue;
            }
            let out = outcome(p);
            if out.promise.is_none() {
                continue;
            }
            let curve = net.demand_curve(path.origin);
            for (t, b) in best.iter_mut().enumerate() {
                *b = b.max(blackbox_path(curve, out, t as u8));
            }
        }
        for t in 0..TARGET_DAYS {
            totals[t] += seg.weight * best[t];
        }
    }
    totals
}

/// Raw coverage totals for target days 0..=3.
pub fn blackbox_total(net: &Network, prop: &PropagationResult) -> [f64; TARGET_DAYS] {
    let mut totals = [0.0; TARGET_DAYS];
    for ds in net.node_indices() {
        if net.segments_of(ds).is_empty() {
            continue;
        }
        let st = station_totals(net, ds, |p| prop.outcome(p));
        for t in 0..TARGET_DAYS {
            totals[t] += st[t];
        }
    }
    totals
}

/// Per-target-day weighting used to collapse coverage totals into one
/// scalar objective.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TargetWeights(pub [f64; TARGET_DAYS]);

impl Default for TargetWeights {
    fn default() -> Self {
        TargetWeights([1.0; TARGET_DAYS])
    }
}

impl TargetWeights {
    pub fn combine(&self, totals: &[f64; TARGET_DAYS]) -> f64 {
        self.0.iter().zip(totals).map(|(w, t)| w * t).sum()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct KpiReport {
    /// Normalized coverage for target days 0..=3.
    pub kpi: [f64; TARGET_DAYS],
    pub tdt_placed: usize,
    pub normalization: f64,
}

pub fn kpis_from_totals(totals: &[f64; TARGET_DAYS], tdt_placed: usize, normalization: f64) -> KpiReport {
    let mut kpi = [0.0; TARGET_DAYS];
    if normalization > 0.0 {
        for t in 0..TARGET_DAYS {
            kpi[t] = totals[t] / normalization;
        }
    }
    KpiReport { kpi, tdt_placed, normalization }
}

/// KPIs of a propagated plan; `tdt_placed` counts legs with a departure.
pub fn kpis(net: &Network, plan: &crate::plan::TdtPlan, prop: &PropagationResult) -> KpiReport {
    kpis_from_totals(&blackbox_total(net, prop), plan.placed_legs(net), net.total_demand())
}

/// Unrounded difference `a - b` in basis points (1 bps = 0.0001).
pub fn bps_raw(a: f64, b: f64) -> i64 {
    libm::round((a - b) / 1e-4) as i64
}

/// Difference in basis points rounded to the nearest 10, as used in report tables.
pub fn bps_diff(a: f64, b: f64) -> i64 {
    let raw = bps_raw(a, b);
    libm::round(raw as f64 / 10.0) as i64 * 10
}
