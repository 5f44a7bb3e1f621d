//! Seeded synthetic instances.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Capacities, LaborShift, LegSpec, Network, NetworkSpec, Node, NodeRole, PathSpec, SegmentSpec,
    DEFAULT_ROLLING_WINDOW,
};
use crate::error::{Error, Result};
use crate::slot::{Slot, SlotSet};

/// Generator knobs. `connectivity` is the probability that a given
/// (SW, DS) pair gets a direct path, and independently a path through a
/// sort center.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub n_sw: usize,
    pub n_sc: usize,
    pub n_ds: usize,
    pub connectivity: f64,
    pub transit_min: u32,
    pub transit_max: u32,
    /// Allow two waves on SW→SC legs.
    pub multi_wave: bool,
    pub rolling_window: u32,
}

impl GeneratorConfig {
    pub fn new(n_sw: usize, n_sc: usize, n_ds: usize, connectivity: f64) -> GeneratorConfig {
        GeneratorConfig {
            n_sw,
            n_sc,
            n_ds,
            connectivity,
            transit_min: 2,
            transit_max: 60,
            multi_wave: true,
            rolling_window: DEFAULT_ROLLING_WINDOW,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_sw == 0 || self.n_ds == 0 {
            return Err(Error::InvalidArgument("need at least one SW and one DS".into()));
        }
        if !(self.connectivity > 0.0 && self.connectivity <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "connectivity must lie in (0, 1], got {}",
                self.connectivity
            )));
        }
        if self.transit_min == 0 || self.transit_min > self.transit_max {
            return Err(Error::InvalidArgument(format!(
                "bad transit range {}..={}",
                self.transit_min, self.transit_max
            )));
        }
        if self.rolling_window == 0 {
            return Err(Error::InvalidArgument("rolling_window must be positive".into()));
        }
        Ok(())
    }

    pub fn generate(&self, seed: u64) -> Result<Network> {
        self.check()?;
        let mut g = Gen { cfg: self, rng: ChaCha8Rng::seed_from_u64(seed), legs: BTreeMap::new(), spec_legs: Vec::new() };
        let spec = g.spec();
        let built = spec.build()?;
        Ok(built.network)
    }
}

/// Deterministic instance with the default transit range and two-wave
/// SW→SC legs allowed. `n_sc` may be zero; the other counts must be
/// positive.
pub fn generate_instance(seed: u64, n_sw: usize, n_sc: usize, n_ds: usize, connectivity: f64) -> Result<Network> {
    GeneratorConfig::new(n_sw, n_sc, n_ds, connectivity).generate(seed)
}

struct Gen<'a> {
    cfg: &'a GeneratorConfig,
    rng: ChaCha8Rng,
    legs: BTreeMap<(String, String), usize>,
    spec_legs: Vec<LegSpec>,
}

impl Gen<'_> {
    fn window(&mut self, min_len: u16, max_len: u16) -> SlotSet {
        let len = self.rng.gen_range(min_len..=max_len);
        let start = Slot::of(self.rng.gen_range(1..=96));
        SlotSet::interval(start, start.shifted(len as i64 - 1))
    }

    /// All slots except a random closed stretch of up to `max_closed`.
    fn mostly_open(&mut self, max_closed: u16) -> SlotSet {
        let closed = self.rng.gen_range(0..=max_closed);
        if closed == 0 {
            return SlotSet::FULL;
        }
        let start = Slot::of(self.rng.gen_range(1..=96));
        let shut = SlotSet::interval(start, start.shifted(closed as i64 - 1));
        SlotSet::from_bits(SlotSet::FULL.bits() & !shut.bits())
    }

    fn node(&mut self, i: usize, kind: u8) -> Node {
        match kind {
            0 => Node {
                id: format!("SW{}", i + 1),
                role: NodeRole::Sw { dispatch_spacing: self.rng.gen_range(2..=8) },
                inbound_shift: SlotSet::EMPTY,
                outbound_shift: self.window(48, 80),
                capacity: Capacities {
                    in_slot: 0,
                    out_slot: self.rng.gen_range(1..=2),
                    in_rolling: 0,
                    out_rolling: self.rng.gen_range(3..=5),
                },
            },
            1 => Node {
                id: format!("SC{}", i + 1),
                role: NodeRole::Sc { processing_slots: self.rng.gen_range(4..=16) },
                inbound_shift: self.mostly_open(12),
                outbound_shift: self.mostly_open(12),
                capacity: Capacities {
                    in_slot: self.rng.gen_range(2..=3),
                    out_slot: self.rng.gen_range(2..=3),
                    in_rolling: self.rng.gen_range(4..=6),
                    out_rolling: self.rng.gen_range(4..=6),
                },
            },
            _ => {
                let cutoff = Slot::of(self.rng.gen_range(25..=45));
                let start = cutoff.shifted(self.rng.gen_range(0..=8));
                let len = self.rng.gen_range(16..=32);
                Node {
                    id: format!("DS{}", i + 1),
                    role: NodeRole::Ds { cutoff, shift: LaborShift { start, end: start.shifted(len - 1) } },
                    inbound_shift: self.mostly_open(24),
                    outbound_shift: SlotSet::EMPTY,
                    capacity: Capacities {
                        in_slot: self.rng.gen_range(1..=2),
                        out_slot: 0,
                        in_rolling: self.rng.gen_range(3..=5),
                        out_rolling: 0,
                    },
                }
            }
        }
    }

    fn leg(&mut self, origin: &str, dest: &str, multi: bool) -> String {
        let key = (String::from(origin), String::from(dest));
        if let Some(&i) = self.legs.get(&key) {
            return self.spec_legs[i].id.clone();
        }
        let waves = if multi && self.cfg.multi_wave && self.rng.gen_bool(0.5) { 2 } else { 1 };
        let id = format!("{origin}-{dest}");
        let transit = self.rng.gen_range(self.cfg.transit_min..=self.cfg.transit_max);
        self.legs.insert(key, self.spec_legs.len());
        self.spec_legs.push(LegSpec {
            id: id.clone(),
            origin: origin.into(),
            dest: dest.into(),
            transit_slots: transit,
            waves,
            volume: None,
        });
        id
    }

    fn spec(&mut self) -> NetworkSpec {
        let c = self.cfg;
        let mut nodes = Vec::with_capacity(c.n_sw + c.n_sc + c.n_ds);
        for i in 0..c.n_sw {
            let n = self.node(i, 0);
            nodes.push(n);
        }
        for i in 0..c.n_sc {
            let n = self.node(i, 1);
            nodes.push(n);
        }
        for i in 0..c.n_ds {
            let n = self.node(i, 2);
            nodes.push(n);
        }
        let sw = |i: usize| format!("SW{}", i + 1);
        let sc = |i: usize| format!("SC{}", i + 1);
        let ds = |i: usize| format!("DS{}", i + 1);

        // (sw, ds, via sort center)
        let mut routes: Vec<(usize, usize, Option<usize>)> = Vec::new();
        for d in 0..c.n_ds {
            for s in 0..c.n_sw {
                if self.rng.gen_bool(c.connectivity) {
                    routes.push((s, d, None));
                }
                if c.n_sc > 0 && self.rng.gen_bool(c.connectivity) {
                    let via = self.rng.gen_range(0..c.n_sc);
                    routes.push((s, d, Some(via)));
                }
            }
            if !routes.iter().any(|r| r.1 == d) {
                let s = self.rng.gen_range(0..c.n_sw);
                let via = (c.n_sc > 0).then(|| self.rng.gen_range(0..c.n_sc));
                routes.push((s, d, via));
            }
        }
        if !routes.iter().any(|r| r.2.is_none()) {
            let s = self.rng.gen_range(0..c.n_sw);
            let d = self.rng.gen_range(0..c.n_ds);
            routes.push((s, d, None));
        }
        if c.n_sc > 0 && !routes.iter().any(|r| r.2.is_some()) {
            let s = self.rng.gen_range(0..c.n_sw);
            let d = self.rng.gen_range(0..c.n_ds);
            let via = self.rng.gen_range(0..c.n_sc);
            routes.push((s, d, Some(via)));
        }
        routes.sort_unstable();
        routes.dedup();

        let mut paths = Vec::with_capacity(routes.len());
        for &(s, d, via) in &routes {
            let legs = match via {
                None => alloc::vec![self.leg(&sw(s), &ds(d), false)],
                Some(v) => alloc::vec![self.leg(&sw(s), &sc(v), true), self.leg(&sc(v), &ds(d), false)],
            };
            let volume = self.rng.gen_range(1..=100) as f64;
            paths.push(PathSpec { id: format!("P{}", paths.len() + 1), legs, volume });
        }

        // Per DS: one exclusive segment per serving SW plus, when several SWs
        // serve it, a shared segment any of them can cover. Weights add up to
        // the station's path volume.
        let mut segments = Vec::new();
        for d in 0..c.n_ds {
            let mut by_sw: BTreeMap<usize, f64> = BTreeMap::new();
            for (r, p) in routes.iter().zip(&paths) {
                if r.1 == d {
                    *by_sw.entry(r.0).or_default() += p.volume;
                }
            }
            let total: f64 = by_sw.values().sum();
            let shared = if by_sw.len() >= 2 { self.rng.gen_range(1..=4) as f64 * 0.1 } else { 0.0 };
            for (&s, &v) in &by_sw {
                segments.push(SegmentSpec { ds: ds(d), weight: v * (1.0 - shared), serving_sws: alloc::vec![sw(s)] });
            }
            if shared > 0.0 {
                let mut sws: Vec<String> = by_sw.keys().map(|&s| sw(s)).collect();
                sws.shuffle(&mut self.rng);
                sws.sort();
                segments.push(SegmentSpec { ds: ds(d), weight: total * shared, serving_sws: sws });
            }
        }

        NetworkSpec {
            rolling_window: c.rolling_window,
            nodes,
            legs: core::mem::take(&mut self.spec_legs),
            paths,
            segments,
            curves: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::NodeKind;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_instance(1, 2, 1, 2, 1.0).unwrap();
        let b = generate_instance(1, 2, 1, 2, 1.0).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(2, 2, 1, 2, 1.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn has_direct_and_two_leg_paths() {
        for seed in 0..20 {
            let net = generate_instance(seed, 3, 2, 4, 0.1).unwrap();
            assert!(net.paths().iter().any(|p| p.legs.len() == 1));
            assert!(net.paths().iter().any(|p| p.legs.len() == 2));
        }
    }

    #[test]
    fn leg_volumes_match_paths_and_segments_match_demand() {
        let net = generate_instance(3, 20, 8, 40, 0.1).unwrap();
        for l in net.leg_indices() {
            let sum: f64 = net.paths_through(l).iter().map(|&p| net.path(p).volume).sum();
            assert_eq!(net.leg(l).volume, sum);
        }
        for d in net.node_indices().filter(|&n| net.node(n).kind() == NodeKind::Ds) {
            let demand: f64 = net.paths_to(d).iter().map(|&p| net.path(p).volume).sum();
            let weights: f64 = net.segments_of(d).iter().map(|&s| net.segments()[s].weight).sum();
            assert!((demand - weights).abs() < 1e-9 * demand.max(1.0));
        }
    }

    #[test]
    fn transit_within_range() {
        let net = generate_instance(4, 10, 4, 10, 0.3).unwrap();
        assert!(net.legs().iter().all(|l| (2..=60).contains(&l.transit_slots)));
    }

    #[test]
    fn paper_scale() {
        let net = generate_instance(7, 90, 34, 242, 0.05).unwrap();
        let count = |k| net.nodes().iter().filter(|n| n.kind() == k).count();
        assert_eq!((count(NodeKind::Sw), count(NodeKind::Sc), count(NodeKind::Ds)), (90, 34, 242));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_instance(1, 0, 1, 1, 0.5).is_err());
        assert!(generate_instance(1, 1, 1, 1, 0.0).is_err());
        assert!(generate_instance(1, 1, 1, 1, 1.5).is_err());
        assert!(generate_instance(1, 1, 0, 1, 1.0).is_ok());
    }
}
