use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::json;
use tdt_core::constraints::count_violations;
use tdt_core::cp::{prune_domains, LnsConfig, ValueOrder};
use tdt_core::objective::{PromiseWeights, TargetWeights};
use tdt_core::{GeneratorConfig, Network, TdtPlan};

use tdt::config::Config;
use tdt::instance_io::{kind_counts, load_instance, render_instance};
use tdt::pipeline::{self, Outcome, SolveOptions, Solver, Status};
use tdt::plan_io::{parse_domains, parse_plan, render_domains};
use tdt::result::{
    plan_from_doc, plan_to_doc, AnnealDoc, CpDoc, KpiDoc, LocalSearchDoc, ObjectivesDoc, ResultDoc, ViolationDoc,
    RESULT_FORMAT_VERSION,
};
use tdt::report;

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 64;

/// Truck departure time placement for middle-mile networks.
#[derive(Parser, Debug)]
#[command(name = "tdt", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Solver configuration file (TOML).
    #[arg(long, env = "TDT_CONFIG", global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic instance.
    Generate(GenerateArgs),
    /// Check an instance and optionally a plan against it.
    Validate(ValidateArgs),
    /// Run a solver and write a result document.
    Solve(Box<SolveArgs>),
    /// Compare result files against a baseline result.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sourcing warehouses.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    sw: u32,
    /// Number of sort centers.
    #[arg(long, default_value_t = 0)]
    sc: u32,
    /// Number of delivery stations.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    ds: u32,
    /// Probability that a (warehouse, station) pair gets each kind of path.
    #[arg(long, default_value_t = 0.5)]
    connectivity: f64,
    #[arg(long, default_value_t = 2)]
    transit_min: u32,
    #[arg(long, default_value_t = 60)]
    transit_max: u32,
    /// One wave per leg everywhere.
    #[arg(long)]
    single_wave: bool,
    #[arg(long, default_value_t = tdt_core::instance::DEFAULT_ROLLING_WINDOW)]
    rolling_window: u32,
    /// Output path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    instance: PathBuf,
    /// Plan file (text plan or result JSON).
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderArg {
    Latest,
    BestBound,
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(Solver))]
    solver: Solver,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel annealing restarts or CP portfolio members.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,
    /// Wall-clock limit in seconds for the anneal or CP phase.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Annealing iterations per restart.
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    cooling: Option<f64>,
    /// Initial temperature as a fraction of total demand.
    #[arg(long)]
    t0_fraction: Option<f64>,
    /// Penalty per violation as a fraction of total demand.
    #[arg(long)]
    penalty_fraction: Option<f64>,
    /// Fixed width of the NULL bin in (0, 1).
    #[arg(long)]
    null_width: Option<f64>,
    /// Local search evaluation budget.
    #[arg(long)]
    ls_budget: Option<u64>,
    /// Largest single-wave slot shift tried by local search.
    #[arg(long)]
    ls_radius: Option<u8>,
    /// Search node limit for CP [default: 1500000].
    #[arg(long)]
    cp_nodes: Option<u64>,
    /// Disable large-neighborhood improvement after the complete CP search.
    #[arg(long)]
    no_lns: bool,
    #[arg(long, value_enum)]
    value_order: Option<OrderArg>,
    /// Starting plan for the annealer (text plan or result JSON).
    #[arg(long)]
    warm_start: Option<PathBuf>,
    /// Slot domains restricting the annealer.
    #[arg(long)]
    domains: Option<PathBuf>,
    /// Write the CP-pruned domains of the instance here.
    #[arg(long)]
    export_domains: Option<PathBuf>,
    /// Write the anneal trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the plan in text form.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Result path; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write `wall_time_s` as null, making results byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    baseline: PathBuf,
    results: Vec<PathBuf>,
    /// Also write the comparison as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Validate(a) => validate(a),
        Command::Solve(a) => solve(*a, &config),
        Command::Report(a) => report_cmd(a),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Network> {
    let loaded = load_instance(path)?;
    for w in &loaded.warnings {
        warn!("{}: {w}", path.display());
    }
    Ok(loaded.network)
}

fn summary(net: &Network) -> String {
    let (sw, sc, ds) = kind_counts(net);
    format!(
        "nodes {} (SW {sw}, SC {sc}, DS {ds}), legs {}, paths {}, waves {}",
        net.nodes().len(),
        net.legs().len(),
        net.paths().len(),
        net.total_waves()
    )
}

fn generate(a: GenerateArgs) -> Result<u8> {
    let mut cfg = GeneratorConfig::new(a.sw as usize, a.sc as usize, a.ds as usize, a.connectivity);
    cfg.transit_min = a.transit_min;
    cfg.transit_max = a.transit_max;
    cfg.multi_wave = !a.single_wave;
    cfg.rolling_window = a.rolling_window;
    let net = cfg.generate(a.seed)?;
    write_output(a.output.as_deref(), &render_instance(&net))?;
    if a.output.is_some() {
        println!("{}", summary(&net));
    } else {
        eprintln!("{}", summary(&net));
    }
    Ok(0)
}

/// Reads a text plan or the plan inside a result document.
fn load_plan(net: &Network, path: &Path) -> Result<TdtPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let plan = if text.trim_start().starts_with('{') {
        let doc = ResultDoc::parse(&text)?;
        match &doc.plan {
            Some(p) => plan_from_doc(net, p),
            None => bail!("result has no plan (status {})", doc.status),
        }
    } else {
        parse_plan(net, &text)
    };
    plan.with_context(|| format!("loading plan {}", path.display()))
}

fn validate(a: ValidateArgs) -> Result<u8> {
    let net = load(&a.instance)?;
    println!("{}: {}", a.instance.display(), summary(&net));
    let Some(plan_path) = a.plan else {
        return Ok(0);
    };
    let plan = load_plan(&net, &plan_path)?;
    let v = count_violations(&net, &plan);
    let rows = [
        ("shifts", v.shifts),
        ("slot capacity", v.slot_capacity),
        ("rolling capacity", v.rolling_capacity),
        ("labor", v.labor),
        ("dispatch spacing", v.dispatch_spacing),
        ("total", v.total),
    ];
    println!("{:<18}{:>10}", "constraint", "violations");
    for (name, n) in rows {
        println!("{name:<18}{n:>10}");
    }
    Ok(if v.total == 0 { 0 } else { Status::Infeasible.exit_code() })
}

fn solve_options(a: &SolveArgs, config: &Config) -> Result<SolveOptions> {
    let mut o = SolveOptions::new(a.solver);
    o.seed = a.seed;
    o.jobs = a.jobs as usize;
    if let Some(t) = a.time_limit {
        if !(t >= 0.0 && t.is_finite()) {
            bail!("--time-limit must be a non-negative number of seconds");
        }
        o.time_limit = Some(Duration::from_secs_f64(t));
    }
    let an = &config.anneal;
    let ao = &mut o.anneal;
    ao.iterations = a.iterations.or(an.iterations).unwrap_or(ao.iterations);
    ao.cooling = a.cooling.or(an.cooling).unwrap_or(ao.cooling);
    ao.t0_fraction = a.t0_fraction.or(an.t0_fraction).unwrap_or(ao.t0_fraction);
    ao.penalty_fraction = a.penalty_fraction.or(an.penalty_fraction).unwrap_or(ao.penalty_fraction);
    ao.moves_per_step = an.moves_per_step.unwrap_or(ao.moves_per_step);
    ao.trace_stride = an.trace_stride.unwrap_or(ao.trace_stride);
    ao.null_width = a.null_width.or(an.null_width);

    let ls = &config.local_search;
    o.local_search.budget = a.ls_budget.or(ls.budget).unwrap_or(o.local_search.budget);
    o.local_search.radius = a.ls_radius.or(ls.radius).unwrap_or(o.local_search.radius);
    if let Some(w) = config.objective.target_weights {
        o.local_search.target_weights = TargetWeights(w);
    }
    if let Some(w) = &config.objective.promise_weights {
        o.promise_weights = PromiseWeights::new(w.clone()).map_err(anyhow::Error::msg)?;
    }

    let cp = &config.cp;
    o.cp.node_limit = a.cp_nodes.or(cp.node_limit).or(o.cp.node_limit);
    o.cp.lns = if a.no_lns || cp.lns == Some(false) {
        None
    } else {
        let d = LnsConfig::default();
        Some(LnsConfig {
            seed: a.seed,
            complete_nodes: cp.complete_nodes.unwrap_or(d.complete_nodes),
            free_waves: cp.free_waves.unwrap_or(d.free_waves),
            nodes_per_round: cp.nodes_per_round.unwrap_or(d.nodes_per_round),
        })
    };
    o.cp.value_order = match a.value_order {
        Some(OrderArg::BestBound) => ValueOrder::BestBound,
        _ => ValueOrder::LatestFirst,
    };
    Ok(o)
}

fn config_echo(o: &SolveOptions) -> serde_json::Value {
    let uses_anneal = matches!(o.solver, Solver::Rko | Solver::HybridRko);
    let uses_cp = matches!(o.solver, Solver::Cp | Solver::HybridCp);
    let uses_ls = matches!(o.solver, Solver::HybridRko | Solver::HybridCp);
    let mut v = json!({
        "solver": o.solver.as_str(),
        "seed": o.seed,
        "jobs": o.jobs,
        "time_limit_s": o.time_limit.map(|d| d.as_secs_f64()),
        "target_weights": o.local_search.target_weights.0,
        "promise_weights": o.promise_weights.as_slice(),
    });
    let m = v.as_object_mut().unwrap();
    if uses_anneal {
        let a = &o.anneal;
        m.insert(
            "anneal".into(),
            json!({
                "iterations": a.iterations,
                "t0_fraction": a.t0_fraction,
                "cooling": a.cooling,
                "moves_per_step": a.moves_per_step,
                "penalty_fraction": a.penalty_fraction,
                "null_width": a.null_width,
                "warm_start": o.warm_start.is_some(),
                "domains": o.domains.is_some(),
            }),
        );
    }
    if uses_ls {
        m.insert(
            "local_search".into(),
            json!({ "budget": o.local_search.budget, "radius": o.local_search.radius }),
        );
    }
    if uses_cp {
        m.insert(
            "cp".into(),
            json!({
                "node_limit": o.cp.node_limit,
                "value_order": match o.cp.value_order {
                    ValueOrder::LatestFirst => "latest",
                    ValueOrder::BestBound => "best-bound",
                },
                "lns": o.cp.lns.map(|l| json!({
                    "complete_nodes": l.complete_nodes,
                    "free_waves": l.free_waves,
                    "nodes_per_round": l.nodes_per_round,
                })),
            }),
        );
    }
    v
}

fn result_doc(net: &Network, instance: &Path, o: &SolveOptions, out: &Outcome, wall: Option<f64>) -> ResultDoc {
    let ev = out.evaluation.as_ref();
    ResultDoc {
        format_version: RESULT_FORMAT_VERSION,
        solver: o.solver.as_str().into(),
        status: out.status.as_str().into(),
        instance: instance.display().to_string(),
        plan: out.plan.as_ref().map(|p| plan_to_doc(net, p)),
        kpis: ev.map(|e| KpiDoc::from(&e.kpis)),
        violations: ev.map(|e| ViolationDoc::from(&e.violations)),
        objectives: ev.map(|e| ObjectivesDoc {
            blackbox_totals: e.totals,
            blackbox: e.blackbox,
            package_speed: e.package_speed,
        }),
        cp: out.cp.as_ref().map(|r| CpDoc {
            status: r.status.as_str().into(),
            objective: r.objective,
            bound: r.bound,
            nodes: r.nodes,
        }),
        anneal: out.anneal.as_ref().map(|a| AnnealDoc {
            iterations: a.iterations,
            best_fitness: a.best_fitness,
            restarts: a.restarts,
            best_restart: a.best_restart,
        }),
        local_search: out.local_search.map(|s| LocalSearchDoc {
            evaluations: s.evaluations,
            improvements: s.improvements,
            sweeps: s.sweeps,
        }),
        wall_time_s: wall,
        config: config_echo(o),
    }
}

fn write_trace(path: &Path, out: &Outcome) -> Result<()> {
    let mut text = String::from("iteration,temperature,fitness,violations,best_fitness\n");
    for t in &out.trace {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            t.iteration, t.temperature, t.fitness, t.violations, t.best_fitness
        ));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve(a: SolveArgs, config: &Config) -> Result<u8> {
    let net = load(&a.instance)?;
    let mut opts = solve_options(&a, config)?;
    if let Some(p) = &a.warm_start {
        opts.warm_start = Some(load_plan(&net, p)?);
    }
    if let Some(p) = &a.domains {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        opts.domains = Some(parse_domains(&net, &text).with_context(|| format!("loading {}", p.display()))?);
    }
    if let Some(p) = &a.export_domains {
        let pruned = prune_domains(&net);
        if pruned.infeasible {
            warn!("domain pruning proved the instance infeasible");
        }
        fs::write(p, render_domains(&net, pruned.store.domains()))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    let start = Instant::now();
    let out = pipeline::solve(&net, &opts)?;
    let wall = (!a.no_timing).then(|| start.elapsed().as_secs_f64());
    if let Some(p) = &a.trace {
        write_trace(p, &out)?;
    }
    if let (Some(p), Some(plan)) = (&a.plan_out, &out.plan) {
        fs::write(p, tdt::plan_io::render_plan(&net, plan)).with_context(|| format!("writing {}", p.display()))?;
    }
    let doc = result_doc(&net, &a.instance, &opts, &out, wall);
    write_output(a.output.as_deref(), &doc.render())?;
    let kpi = out.evaluation.as_ref().map(|e| e.kpis.kpi[1]);
    eprintln!(
        "{} {}: {}",
        opts.solver,
        out.status.as_str(),
        kpi.map_or("no plan".into(), |k| format!("1D KPI {k:.4}"))
    );
    Ok(out.status.exit_code())
}

fn report_cmd(a: ReportArgs) -> Result<u8> {
    let r = report::build(&a.baseline, &a.results)?;
    print!("{}", r.render_table());
    if let Some(p) = &a.json {
        fs::write(p, r.render_json()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(0)
}
