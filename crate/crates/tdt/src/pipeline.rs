//! Solver pipelines behind `tdt solve`.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicI64, Ordering};
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use log::{debug, info};
use tdt_core::constraints::{count_violations, ViolationReport};
use tdt_core::cp::{self, CpConfig, CpResult, CpStatus, ValueOrder};
use tdt_core::heuristics::{greedy, local_search_with, repair, LocalSearchConfig, SearchStats};
use tdt_core::lop::lop_solution;
use tdt_core::objective::{blackbox_total, kpis, package_speed, KpiReport, PromiseWeights};
use tdt_core::rko::{
    anneal, apply_pruned_domains, build_bin_map_with, encode_plan, AnnealConfig, AnnealResult, BinMapConfig,
    TracePoint,
};
use tdt_core::{propagate, Network, SlotSet, TdtPlan};

/// CP node limit used when none is configured.
pub const DEFAULT_CP_NODES: u64 = 1_500_000;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Solver {
    Greedy,
    Rko,
    Cp,
    HybridRko,
    HybridCp,
    Lop,
}

impl Solver {
    pub const ALL: [Solver; 6] =
        [Solver::Greedy, Solver::Rko, Solver::Cp, Solver::HybridRko, Solver::HybridCp, Solver::Lop];

    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Greedy => "greedy",
            Solver::Rko => "rko",
            Solver::Cp => "cp",
            Solver::HybridRko => "hybrid-rko",
            Solver::HybridCp => "hybrid-cp",
            Solver::Lop => "lop",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Solver::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown solver `{s}` (greedy, rko, cp, hybrid-rko, hybrid-cp, lop)"))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Status {
    Optimal,
    Feasible,
    /// No feasible plan: proven by CP, or the returned plan still has violations.
    Infeasible,
    /// Stopped before any plan was found.
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "OPTIMAL",
            Status::Feasible => "FEASIBLE",
            Status::Infeasible => "INFEASIBLE",
            Status::Unknown => "UNKNOWN",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Status::Optimal | Status::Feasible => 0,
            Status::Infeasible => 2,
            Status::Unknown => 3,
        }
    }

    fn of_cp(s: CpStatus) -> Status {
        match s {
            CpStatus::Optimal => Status::Optimal,
            CpStatus::Feasible => Status::Feasible,
            CpStatus::Infeasible => Status::Infeasible,
            CpStatus::Unknown => Status::Unknown,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AnnealOptions {
    pub iterations: u64,
    pub t0_fraction: f64,
    pub cooling: f64,
    pub moves_per_step: usize,
    pub penalty_fraction: f64,
    pub null_width: Option<f64>,
    pub trace_stride: u64,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions {
            iterations: 200_000,
            t0_fraction: 0.05,
            cooling: 0.9995,
            moves_per_step: 1,
            penalty_fraction: 0.01,
            null_width: None,
            trace_stride: 1000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub solver: Solver,
    pub seed: u64,
    pub jobs: usize,
    pub time_limit: Option<Duration>,
    pub anneal: AnnealOptions,
    pub local_search: LocalSearchConfig,
    pub cp: CpConfig,
    pub promise_weights: PromiseWeights,
    /// Initial plan for the annealer.
    pub warm_start: Option<TdtPlan>,
    /// Restricts the annealer's bins to these slot domains.
    pub domains: Option<Vec<SlotSet>>,
}

impl SolveOptions {
    pub fn new(solver: Solver) -> SolveOptions {
        SolveOptions {
            solver,
            seed: 0,
            jobs: 1,
            time_limit: None,
            anneal: AnnealOptions::default(),
            local_search: LocalSearchConfig::default(),
            cp: CpConfig { lns: Some(Default::default()), node_limit: Some(DEFAULT_CP_NODES), ..CpConfig::default() },
            promise_weights: PromiseWeights::default(),
            warm_start: None,
            domains: None,
        }
    }

    pub fn anneal_config(&self, net: &Network, seed: u64) -> AnnealConfig {
        let n = net.total_demand();
        let mut cfg = AnnealConfig::for_network(net);
        cfg.t_max = self.anneal.iterations;
        cfg.t0 = (self.anneal.t0_fraction * n).max(f64::MIN_POSITIVE);
        cfg.cooling = self.anneal.cooling;
        cfg.moves_per_step = self.anneal.moves_per_step;
        cfg.fitness.penalty = self.anneal.penalty_fraction * n;
        cfg.fitness.target_weights = self.local_search.target_weights;
        cfg.trace_stride = self.anneal.trace_stride;
        cfg.seed = seed;
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct AnnealSummary {
    pub iterations: u64,
    pub best_fitness: f64,
    pub restarts: usize,
    pub best_restart: usize,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub kpis: KpiReport,
    pub violations: ViolationReport,
    pub totals: [f64; 4],
    pub blackbox: f64,
    pub package_speed: f64,
}

pub fn evaluate(net: &Network, plan: &TdtPlan, opts: &SolveOptions) -> Result<Evaluation> {
    let prop = propagate(net, plan)?;
    let totals = blackbox_total(net, &prop);
    Ok(Evaluation {
        kpis: kpis(net, plan, &prop),
        violations: count_violations(net, plan),
        totals,
        blackbox: opts.local_search.target_weights.combine(&totals),
        package_speed: package_speed(net, &prop, &opts.promise_weights),
    })
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub plan: Option<TdtPlan>,
    pub evaluation: Option<Evaluation>,
    pub cp: Option<CpResult>,
    pub anneal: Option<AnnealSummary>,
    pub local_search: Option<SearchStats>,
    /// Trace of the winning anneal run.
    pub trace: Vec<TracePoint>,
}

struct Deadline(Option<Instant>);

impl Deadline {
    fn passed(&self) -> bool {
        self.0.is_some_and(|t| Instant::now() >= t)
    }
}

pub fn solve(net: &Network, opts: &SolveOptions) -> Result<Outcome> {
    if opts.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let deadline = Deadline(opts.time_limit.map(|d| Instant::now() + d));
    let mut out = Outcome {
        status: Status::Unknown,
        plan: None,
        evaluation: None,
        cp: None,
        anneal: None,
        local_search: None,
        trace: Vec::new(),
    };
    let plan = match opts.solver {
        Solver::Greedy => Some(greedy(net)),
        Solver::Lop => Some(lop_solution(net)),
        Solver::Rko | Solver::HybridRko => {
            let (r, summary) = run_anneal(net, opts, &deadline)?;
            out.anneal = Some(summary);
            out.trace = r.trace;
            Some(r.best.plan)
        }
        Solver::Cp | Solver::HybridCp => {
            let r = run_cp(net, opts, &deadline);
            info!("cp {} after {} nodes, bound {:.6}", r.status.as_str(), r.nodes, r.bound);
            out.status = Status::of_cp(r.status);
            let plan = r.plan.clone();
            out.cp = Some(r);
            plan
        }
    };
    let Some(mut plan) = plan else {
        return Ok(out);
    };
    if matches!(opts.solver, Solver::HybridRko | Solver::HybridCp) {
        plan = repair(net, plan)?;
        let mut log_move = |m: &tdt_core::heuristics::Improvement| {
            debug!("local search: evaluation {} objective {:.6}", m.evaluations, m.objective);
        };
        let (p, stats) = local_search_with(net, plan, &opts.local_search, &mut log_move)?;
        info!("local search: {} evaluations, {} improvements", stats.evaluations, stats.improvements);
        out.local_search = Some(stats);
        plan = p;
        if out.status == Status::Optimal {
            // Optimal for package speed only; local search optimizes coverage.
            out.status = Status::Feasible;
        }
    }
    let ev = evaluate(net, &plan, opts)?;
    out.status = match (out.status, ev.violations.total) {
        (_, v) if v > 0 => Status::Infeasible,
        (Status::Optimal, _) => Status::Optimal,
        _ => Status::Feasible,
    };
    out.evaluation = Some(ev);
    out.plan = Some(plan);
    Ok(out)
}

fn run_anneal(net: &Network, opts: &SolveOptions, deadline: &Deadline) -> Result<(AnnealResult, AnnealSummary)> {
    let bin_cfg = BinMapConfig { null_width: opts.anneal.null_width };
    bin_cfg.check()?;
    let mut map = build_bin_map_with(net, bin_cfg);
    if let Some(d) = &opts.domains {
        if d.len() != net.total_waves() {
            bail!("domains list {} waves, instance has {}", d.len(), net.total_waves());
        }
        map = apply_pruned_domains(&map, d)?;
    }
    let chi0 = match &opts.warm_start {
        Some(p) => Some(encode_plan(net, p, &map)?),
        None => None,
    };
    let run = |i: usize| {
        let cfg = opts.anneal_config(net, opts.seed.wrapping_add(i as u64));
        anneal(net, &map, &cfg, chi0.clone(), &mut || deadline.passed())
    };
    let results: Vec<Result<AnnealResult>> = if opts.jobs == 1 {
        vec![run(0).map_err(Into::into)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..opts.jobs).map(|i| s.spawn(move || run(i))).collect();
            handles.into_iter().map(|h| h.join().expect("anneal thread panicked").map_err(Into::into)).collect()
        })
    };
    let mut best: Option<(usize, AnnealResult)> = None;
    let mut iterations = 0;
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        iterations += r.iterations;
        debug!("restart {i}: fitness {:.6}", r.best.fitness);
        if best.as_ref().is_none_or(|(_, b)| r.best.fitness > b.best.fitness) {
            best = Some((i, r));
        }
    }
    let (best_restart, r) = best.expect("at least one restart");
    let summary = AnnealSummary { iterations, best_fitness: r.best.fitness, restarts: opts.jobs, best_restart };
    Ok((r, summary))
}

fn run_cp(net: &Network, opts: &SolveOptions, deadline: &Deadline) -> CpResult {
    let config = |i: usize| {
        let mut c = opts.cp.clone();
        c.weights = opts.promise_weights.clone();
        if i % 2 == 1 {
            c.value_order = match c.value_order {
                ValueOrder::LatestFirst => ValueOrder::BestBound,
                ValueOrder::BestBound => ValueOrder::LatestFirst,
            };
        }
        if let Some(l) = &mut c.lns {
            l.seed = opts.seed.wrapping_add(i as u64);
        }
        c
    };
    if opts.jobs == 1 {
        return cp::solve(net, &config(0), &mut || deadline.passed(), None);
    }
    let shared = AtomicI64::new(-1);
    let done = AtomicBool::new(false);
    let results: Vec<CpResult> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..opts.jobs)
            .map(|i| {
                let (shared, done, cfg) = (&shared, &done, config(i));
                s.spawn(move || {
                    let r = cp::solve(net, &cfg, &mut || done.load(Ordering::Relaxed) || deadline.passed(), Some(shared));
                    if matches!(r.status, CpStatus::Optimal | CpStatus::Infeasible) {
                        done.store(true, Ordering::Relaxed);
                    }
                    r
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("cp thread panicked")).collect()
    });
    merge_portfolio(results)
}

/// Combines portfolio members that shared one incumbent bound. A member whose
/// search completed proves that nothing beats the shared incumbent, even if
/// it holds no plan itself.
fn merge_portfolio(results: Vec<CpResult>) -> CpResult {
    let nodes = results.iter().map(|r| r.nodes).sum();
    let completed = results.iter().any(|r| matches!(r.status, CpStatus::Optimal | CpStatus::Infeasible));
    let bound = results.iter().map(|r| r.bound).fold(f64::INFINITY, f64::min);
    let best = results
        .into_iter()
        .filter(|r| r.plan.is_some())
        .reduce(|a, b| if b.objective > a.objective { b } else { a });
    match best {
        Some(mut r) => {
            r.status = if completed { CpStatus::Optimal } else { CpStatus::Feasible };
            if completed {
                r.bound = r.objective.unwrap();
            } else {
                r.bound = bound.max(r.objective.unwrap());
            }
            r.nodes = nodes;
            r
        }
        None => CpResult {
            plan: None,
            objective: None,
            bound: if completed { 0.0 } else { bound },
            status: if completed { CpStatus::Infeasible } else { CpStatus::Unknown },
            nodes,
        },
    }
}
