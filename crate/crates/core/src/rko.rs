//! Random-key optimizer: keys in `[0, 1)` are decoded through per-wave bin
//! maps into shift-feasible TDTs and searched by simulated annealing on a
//! penalized coverage fitness.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{count_violations, ViolationReport};
use crate::error::{Error, Result};
use crate::eval::PlanState;
use crate::instance::Network;
use crate::objective::{blackbox_total, kpis_from_totals, KpiReport, TargetWeights};
use crate::plan::{propagate, TdtPlan};
use crate::slot::{Slot, SlotSet};

/// Bin layout of one (leg, wave): a NULL bin `[0, null_width)` followed by
/// equal-width bins for the candidate slots in ascending order.
#[derive(Clone, PartialEq, Debug)]
pub struct WaveBins {
    null_width: f64,
    slots: Vec<Slot>,
}

impl WaveBins {
    /// `null_width` of `None` gives the NULL bin the same width as the slot
    /// bins. Without candidate slots the NULL bin covers `[0, 1)`.
    pub fn new(slots: SlotSet, null_width: Option<f64>) -> WaveBins {
        let slots: Vec<Slot> = slots.iter().collect();
        let null_width = if slots.is_empty() {
            1.0
        } else {
            null_width.unwrap_or(1.0 / (slots.len() + 1) as f64)
        };
        WaveBins { null_width, slots }
    }

    pub fn null_width(&self) -> f64 {
        self.null_width
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    fn slot_width(&self) -> f64 {
        (1.0 - self.null_width) / self.slots.len() as f64
    }

    #[inline]
    pub fn decode(&self, key: f64) -> Option<Slot> {
        if key < self.null_width || self.slots.is_empty() {
            return None;
        }
        let i = ((key - self.null_width) / self.slot_width()) as usize;
        Some(self.slots[i.min(self.slots.len() - 1)])
    }

    /// Bins as `(lower, upper, label)`, covering `[0, 1)` in order.
    pub fn bins(&self) -> Vec<(f64, f64, Option<Slot>)> {
        let mut out = Vec::with_capacity(self.slots.len() + 1);
        out.push((0.0, self.null_width, None));
        let w = self.slot_width();
        for (i, &s) in self.slots.iter().enumerate() {
            let lo = self.null_width + i as f64 * w;
            let hi = if i + 1 == self.slots.len() { 1.0 } else { self.null_width + (i + 1) as f64 * w };
            out.push((lo, hi, Some(s)));
        }
        out
    }

    /// Midpoint of the bin labeled `slot`; `None` if no bin carries it.
    pub fn midpoint(&self, slot: Option<Slot>) -> Option<f64> {
        match slot {
            None => Some(self.null_width / 2.0),
            Some(s) => {
                let i = self.slots.binary_search(&s).ok()?;
                Some(self.null_width + (i as f64 + 0.5) * self.slot_width())
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct BinMapConfig {
    /// Fixed NULL-bin width in `(0, 1)` for every wave; `None` for one
    /// slot-bin width.
    pub null_width: Option<f64>,
}

impl BinMapConfig {
    pub fn check(&self) -> Result<()> {
        match self.null_width {
            Some(w) if !(w > 0.0 && w < 1.0) => {
                Err(Error::InvalidArgument(alloc::format!("null bin width must lie in (0, 1), got {w}")))
            }
            _ => Ok(()),
        }
    }
}

/// Bin maps of every (leg, wave), indexed like [`TdtPlan::flat`].
#[derive(Clone, PartialEq, Debug)]
pub struct TdtBinMap {
    waves: Vec<WaveBins>,
    config: BinMapConfig,
}

impl TdtBinMap {
    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn wave(&self, flat: usize) -> &WaveBins {
        &self.waves[flat]
    }

    pub fn config(&self) -> BinMapConfig {
        self.config
    }

    /// Plan encoded by the keys.
    pub fn decode_keys(&self, net: &Network, chi: &RandomKeyVector) -> Result<TdtPlan> {
        if chi.len() != self.len() {
            return Err(Error::KeyLength { got: chi.len(), expected: self.len() });
        }
        let slots = self.waves.iter().zip(chi.keys()).map(|(b, &k)| b.decode(k)).collect();
        TdtPlan::from_flat(net, slots)
    }
}

pub fn build_bin_map(net: &Network) -> TdtBinMap {
    build_bin_map_with(net, BinMapConfig::default())
}

pub fn build_bin_map_with(net: &Network, config: BinMapConfig) -> TdtBinMap {
    let waves = (0..net.total_waves())
        .map(|i| {
            let (l, _) = net.wave_at(i);
            WaveBins::new(net.feasible_slots(l), config.null_width)
        })
        .collect();
    TdtBinMap { waves, config }
}

/// Rebuilds the bins over `domain ∩ current slots` for every (leg, wave).
pub fn apply_pruned_domains(map: &TdtBinMap, domains: &[SlotSet]) -> Result<TdtBinMap> {
    if domains.len() != map.len() {
        return Err(Error::PlanMismatch(alloc::format!(
            "{} domains for {} waves",
            domains.len(),
            map.len()
        )));
    }
    let waves = map
        .waves
        .iter()
        .zip(domains)
        .map(|(b, &d)| {
            let current: SlotSet = b.slots.iter().copied().collect();
            WaveBins::new(current.intersection(d), map.config.null_width)
        })
        .collect();
    Ok(TdtBinMap { waves, config: map.config })
}

/// Point in `[0, 1)^N`, one key per (leg, wave) in flat order.
#[derive(Clone, PartialEq, Debug)]
pub struct RandomKeyVector(Vec<f64>);

impl RandomKeyVector {
    pub fn new(keys: Vec<f64>) -> Result<RandomKeyVector> {
        if let Some(k) = keys.iter().find(|k| !(**k >= 0.0 && **k < 1.0)) {
            return Err(Error::InvalidArgument(alloc::format!("random key {k} outside [0, 1)")));
        }
        Ok(RandomKeyVector(keys))
    }

    pub fn random<R: RngCore>(n: usize, rng: &mut R) -> RandomKeyVector {
        RandomKeyVector((0..n).map(|_| rng.gen::<f64>()).collect())
    }

    pub fn keys(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Keys at the bin midpoints of the plan's slots.
pub fn encode_plan(net: &Network, plan: &TdtPlan, map: &TdtBinMap) -> Result<RandomKeyVector> {
    plan.check_shape(net)?;
    let keys = plan
        .flat()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            map.wave(i).midpoint(s).ok_or_else(|| {
                let (l, w) = net.wave_at(i);
                Error::SlotNotInBinMap { leg: net.leg(l).id.clone(), wave: w + 1, slot: s.map_or(0, |s| s.get()) }
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RandomKeyVector(keys))
}

/// Fitness = weighted coverage total minus `penalty` per violation.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct FitnessConfig {
    pub penalty: f64,
    pub target_weights: TargetWeights,
}

impl FitnessConfig {
    /// Penalty of 1% of the KPI normalization per violation.
    pub fn for_network(net: &Network) -> FitnessConfig {
        FitnessConfig { penalty: 0.01 * net.total_demand(), target_weights: TargetWeights::default() }
    }

    #[inline]
    pub fn fitness(&self, objective: f64, violations: usize) -> f64 {
        objective - self.penalty * violations as f64
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct DecodeOutcome {
    pub plan: TdtPlan,
    pub fitness: f64,
    /// Weighted coverage total.
    pub objective: f64,
    pub violations: ViolationReport,
    pub kpis: KpiReport,
}

pub fn decode(chi: &RandomKeyVector, net: &Network, map: &TdtBinMap, fit: &FitnessConfig) -> Result<DecodeOutcome> {
    let plan = map.decode_keys(net, chi)?;
    evaluate_plan(net, plan, fit)
}

/// Full evaluation of a plan under the fitness configuration.
pub fn evaluate_plan(net: &Network, plan: TdtPlan, fit: &FitnessConfig) -> Result<DecodeOutcome> {
    let prop = propagate(net, &plan)?;
    let totals = blackbox_total(net, &prop);
    let violations = count_violations(net, &plan);
    let objective = fit.target_weights.combine(&totals);
    let kpis = kpis_from_totals(&totals, plan.placed_legs(net), net.total_demand());
    Ok(DecodeOutcome { fitness: fit.fitness(objective, violations.total), objective, violations, kpis, plan })
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct AnnealConfig {
    pub t_max: u64,
    pub t0: f64,
    pub cooling: f64,
    pub moves_per_step: usize,
    pub seed: u64,
    pub fitness: FitnessConfig,
    /// Record a trace point every `trace_stride` iterations (0: none).
    pub trace_stride: u64,
}

impl AnnealConfig {
    /// Defaults scaled by the KPI normalization: `T0 = 0.05 N`,
    /// penalty `0.01 N`, cooling 0.9995, 200k iterations.
    pub fn for_network(net: &Network) -> AnnealConfig {
        AnnealConfig {
            t_max: 200_000,
            t0: (0.05 * net.total_demand()).max(f64::MIN_POSITIVE),
            cooling: 0.9995,
            moves_per_step: 1,
            seed: 0,
            fitness: FitnessConfig::for_network(net),
            trace_stride: 1000,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return bad("initial temperature must be positive");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling factor must lie in (0, 1)");
        }
        if self.moves_per_step == 0 {
            return bad("moves per step must be positive");
        }
        if !(self.fitness.penalty >= 0.0 && self.fitness.penalty.is_finite()) {
            return bad("penalty must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TracePoint {
    pub iteration: u64,
    pub temperature: f64,
    pub fitness: f64,
    pub violations: usize,
    pub best_fitness: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct AnnealResult {
    pub chi: RandomKeyVector,
    pub best: DecodeOutcome,
    pub trace: Vec<TracePoint>,
    pub iterations: u64,
}

/// Simulated annealing over random keys.
///
/// Each step resamples `moves_per_step` uniformly chosen keys and accepts by
/// the Metropolis rule at `T_t = T0 * cooling^t`. `stop` is polled every
/// 1024 iterations and ends the run early when it returns true.
pub fn anneal(
    net: &Network,
    map: &TdtBinMap,
    config: &AnnealConfig,
    chi0: Option<RandomKeyVector>,
    stop: &mut dyn FnMut() -> bool,
) -> Result<AnnealResult> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = map.len();
    let mut chi = match chi0 {
        Some(c) => {
            if c.len() != n {
                return Err(Error::KeyLength { got: c.len(), expected: n });
            }
            c
        }
        None => RandomKeyVector::random(n, &mut rng),
    };
    let fit = &config.fitness;
    let w = &fit.target_weights;
    let mut state = PlanState::new(net, map.decode_keys(net, &chi)?)?;
    let mut current = fit.fitness(state.objective(w), state.violations());
    let mut best_chi = chi.clone();
    let mut best = current;
    let mut trace = Vec::new();
    let mut temperature = config.t0;
    let push = |trace: &mut Vec<TracePoint>, t, temp, f, v, b| {
        trace.push(TracePoint { iteration: t, temperature: temp, fitness: f, violations: v, best_fitness: b })
    };
    if config.trace_stride > 0 {
        push(&mut trace, 0, temperature, current, state.violations(), best);
    }

    let mut changes = Vec::with_capacity(config.moves_per_step);
    let mut new_keys = Vec::with_capacity(config.moves_per_step);
    let mut undo = Vec::with_capacity(config.moves_per_step);
    let mut iterations = 0;
    if n > 0 {
        for t in 1..=config.t_max {
            if t % 1024 == 0 && stop() {
                break;
            }
            iterations = t;
            temperature *= config.cooling;
            changes.clear();
            new_keys.clear();
            undo.clear();
            for _ in 0..config.moves_per_step {
                let i = rng.gen_range(0..n);
                let key: f64 = rng.gen();
                new_keys.push((i, key));
                changes.push((i, map.wave(i).decode(key)));
            }
            state.apply(&changes, Some(&mut undo));
            let proposed = fit.fitness(state.objective(w), state.violations());
            let delta = proposed - current;
            let accept = delta >= 0.0 || (temperature > 0.0 && rng.gen::<f64>() < libm::exp(delta / temperature));
            if accept {
                for &(i, k) in &new_keys {
                    chi.0[i] = k;
                }
                current = proposed;
                if current > best {
                    best = current;
                    best_chi.0.copy_from_slice(&chi.0);
                }
            } else {
                state.apply(&undo, None);
            }
            if config.trace_stride > 0 && t % config.trace_stride == 0 {
                push(&mut trace, t, temperature, current, state.violations(), best);
            }
        }
    }
    let best_outcome = decode(&best_chi, net, map, fit)?;
    Ok(AnnealResult { chi: best_chi, best: best_outcome, trace, iterations })
}
