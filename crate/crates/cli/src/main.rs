mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use netcover::bench::{render_summary, run_grid, write_outputs, GridConfig};
use netcover::covers::{process_network, process_reduced_network, CoverData};
use netcover::formulations::{build, emit, ModelSpec};
use netcover::instances::{gen_random, InstanceSet, RadiusPolicy};
use netcover::pipeline::{prepare, solve_prepared};
use netcover::preprocess::{preprocess, Mode};
use netcover::solver::{backend, backend_list, default_backend_name, run_lp_file, SolveOptions, Status};
use netcover::verify::{is_cover, Placement};
use netcover::{Network, PointOnNetwork, Variant};

use config::{RunConfig, UsageError};

#[derive(Parser, Debug)]
#[command(name = "netcover", version, about = "Continuous set covering on networks")]
struct Cli {
    /// Log filter such as `info` or `netcover=debug`; overrides NETCOVER_LOG.
    #[arg(long, global = true)]
    log_level: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Contract degree-two nodes and subdivide edges.
    Preprocess(PreprocessArgs),
    /// Compute complete and partial cover sets.
    Covers(CoversArgs),
    /// Write the MILP model of a variant as an LP file.
    Build(BuildArgs),
    /// Preprocess, build, solve, decode and verify.
    Solve(SolveArgs),
    /// Check whether a placement covers the network.
    Verify(VerifyArgs),
    /// Generate a random graph or a random instance set.
    Gen(GenArgs),
    /// Run a variant grid over an instance set.
    Bench(BenchArgs),
    /// Solve an LP file with the linked HiGHS, using HiGHS command-line conventions.
    LpSolve(LpSolveArgs),
    /// List solver backends.
    Backends,
}

#[derive(Args, Debug, Clone, Default)]
struct RadiusArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    /// Derive the radius from the mean edge length instead of giving --delta.
    #[arg(long)]
    radius: Option<RadiusPolicy>,
    /// TOML file with defaults for these options.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RadiusArgs {
    fn run_config(&self, extra: RunConfig) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let cli = RunConfig { graph: self.graph.clone(), delta: self.delta, radius: self.radius, ..extra };
        Ok(file.merge(cli))
    }
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[command(flatten)]
    radius: RadiusArgs,
    #[arg(long, default_value = "assumption")]
    mode: Mode,
    /// Output graph file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the node and edge mapping back to the input as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoversArgs {
    #[command(flatten)]
    radius: RadiusArgs,
    /// Allow edges longer than twice the radius.
    #[arg(long)]
    reduced: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    radius: RadiusArgs,
    #[arg(long)]
    variant: Option<Variant>,
    /// Cover sets for the graph as given; the graph is then not preprocessed.
    #[arg(long)]
    covers: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    radius: RadiusArgs,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    abs_gap: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    seed: Option<u32>,
    /// Write the outcome as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the outcome as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    radius: RadiusArgs,
    /// JSON list of points `{"node": i}` or `{"edge": j, "offset": x}`,
    /// or an object with such a list under `points`.
    #[arg(long)]
    placement: PathBuf,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, required_unless_present = "set")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "set")]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generate an instance set instead: `random_A` or `random_B`.
    #[arg(long, conflicts_with_all = ["n", "p"])]
    set: Option<String>,
    #[arg(long, default_value = "small")]
    radius: RadiusPolicy,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "SF,RF,SFD")]
    variants: Vec<Variant>,
    /// Radii to run; defaults to the set's own policy.
    #[arg(long, value_delimiter = ',')]
    radii: Vec<RadiusPolicy>,
    #[arg(long, default_value_t = 1800.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1.0)]
    abs_gap: f64,
    #[arg(long, default_value_t = 3)]
    workers: usize,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LpSolveArgs {
    #[arg(long = "model_file")]
    model_file: PathBuf,
    #[arg(long = "options_file")]
    options_file: Option<PathBuf>,
    #[arg(long = "solution_file")]
    solution_file: PathBuf,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_graph(cfg: &RunConfig) -> Result<Network> {
    let path = cfg.graph()?;
    Network::read_file(path).with_context(|| format!("loading graph {}", path.display()))
}

fn require_variant(v: Option<Variant>) -> Result<Variant> {
    v.ok_or_else(|| UsageError("no variant given (use --variant or set `variant` in the config)".into()).into())
}

fn cmd_preprocess(args: PreprocessArgs) -> Result<ExitCode> {
    let cfg = args.radius.run_config(RunConfig::default())?;
    let net = load_graph(&cfg)?;
    let delta = cfg.delta_for(&net)?;
    let (out, report) = preprocess(&net, delta, args.mode)?;
    write_or_print(args.out.as_deref(), &out.to_text())?;
    if let Some(p) = &args.report {
        std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
    }
    eprintln!(
        "nodes {} -> {} -> {}, edges {} -> {} -> {}",
        report.original_counts.n,
        report.contracted_counts.n,
        report.subdivided_counts.n,
        report.original_counts.m,
        report.contracted_counts.m,
        report.subdivided_counts.m
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_covers(args: CoversArgs) -> Result<ExitCode> {
    let cfg = args.radius.run_config(RunConfig::default())?;
    let net = load_graph(&cfg)?;
    let delta = cfg.delta_for(&net)?;
    let covers = if args.reduced { process_reduced_network(&net, delta)? } else { process_network(&net, delta)? };
    write_or_print(args.out.as_deref(), &serde_json::to_string_pretty(&covers)?)?;
    Ok(ExitCode::SUCCESS)
}

fn size_line(model: &ModelSpec) -> String {
    let s = model.size();
    format!("{}: {} variables ({} binary), {} constraints", model.variant, s.variables, s.binaries, s.constraints)
}

fn cmd_build(args: BuildArgs) -> Result<ExitCode> {
    let cfg = args.radius.run_config(RunConfig { variant: args.variant, ..RunConfig::default() })?;
    let variant = require_variant(cfg.variant)?;
    let net = load_graph(&cfg)?;
    let delta = cfg.delta_for(&net)?;
    let model = match &args.covers {
        Some(path) => {
            let covers = CoverData::load(path)?;
            build(&net, delta, Some(&covers), variant)?
        }
        None => prepare(&net, delta, variant)?.model,
    };
    write_or_print(args.out.as_deref().or(cfg.output.as_deref()), &emit(&model))?;
    eprintln!("{}", size_line(&model));
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let extra = RunConfig {
        variant: args.variant,
        backend: args.backend.clone(),
        time_limit: args.time_limit,
        abs_gap: args.abs_gap,
        seed: args.seed,
        output: args.out.clone(),
        ..RunConfig::default()
    };
    let cfg = args.radius.run_config(extra)?;
    let variant = require_variant(cfg.variant)?;
    let net = load_graph(&cfg)?;
    let delta = cfg.delta_for(&net)?;
    let defaults = SolveOptions::default();
    let options = SolveOptions {
        time_limit: cfg.time_limit.unwrap_or(defaults.time_limit),
        abs_gap: cfg.abs_gap.unwrap_or(defaults.abs_gap),
        threads: args.threads,
        seed: cfg.seed.unwrap_or(0),
    };
    let solver = backend(cfg.backend.as_deref().unwrap_or(default_backend_name()))?;
    let prepared = prepare(&net, delta, variant)?;
    log::info!("{}", size_line(&prepared.model));
    let outcome = solve_prepared(&prepared, &net, solver.as_ref(), &options)?;
    if let Some(p) = &cfg.output {
        std::fs::write(p, serde_json::to_string_pretty(&outcome)?)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&outcome)?);
    } else {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v}"));
        println!("variant     {variant}");
        println!("delta       {delta}");
        println!("backend     {}", solver.name());
        println!("status      {}", outcome.status);
        println!("objective   {}", fmt(outcome.incumbent));
        println!("bound       {}", fmt(outcome.bound));
        println!("gap         {}", fmt(outcome.incumbent.zip(outcome.bound).map(|(a, b)| (a - b).max(0.0))));
        println!("time        {:.3} s (preprocessing {:.3} s)", outcome.solve_time, outcome.prep_time);
        if let Some(placement) = &outcome.placement {
            println!("facilities  {}", placement.points.len());
            for p in &placement.points {
                println!("  {p}");
            }
        }
        match &outcome.verification {
            Some(v) if v.covered => println!("VERIFIED"),
            Some(v) => println!("NOT VERIFIED: {:?}", v.witness),
            None => {}
        }
    }
    let ok = outcome.verified() && matches!(outcome.status, Status::Optimal | Status::Feasible | Status::Timeout);
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn read_placement(path: &Path) -> Result<Vec<PointOnNetwork>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(points) = serde_json::from_str::<Vec<PointOnNetwork>>(&text) {
        return Ok(points);
    }
    #[derive(serde::Deserialize)]
    struct Wrapped {
        points: Vec<PointOnNetwork>,
    }
    if let Ok(w) = serde_json::from_str::<Wrapped>(&text) {
        return Ok(w.points);
    }
    let p: Placement = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(p.points)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let cfg = args.radius.run_config(RunConfig::default())?;
    let net = load_graph(&cfg)?;
    let delta = cfg.delta_for(&net)?;
    let points = read_placement(&args.placement)?;
    let report = is_cover(&net, delta, &points)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.covered { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    let text = match args.set.as_deref() {
        Some(name) => {
            let set = match name.to_ascii_lowercase().as_str() {
                "random_a" => InstanceSet::random_a(args.radius, args.seed),
                "random_b" => InstanceSet::random_b(args.radius, args.seed),
                other => return Err(UsageError(format!("unknown set {other:?}; use random_A or random_B")).into()),
            };
            serde_json::to_string_pretty(&set)?
        }
        None => {
            let (n, p) = (args.n.expect("clap requires n"), args.p.expect("clap requires p"));
            gen_random(n, p, args.seed)?.to_text()
        }
    };
    write_or_print(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let set = InstanceSet::load(&args.set).with_context(|| format!("loading {}", args.set.display()))?;
    let config = GridConfig {
        time_limit: args.time_limit,
        abs_gap: args.abs_gap,
        workers: args.workers,
        backend: args.backend.unwrap_or_else(|| default_backend_name().to_string()),
        radii: args.radii,
        seed: args.seed,
    };
    let report = run_grid(&set, &args.variants, &config)?;
    write_outputs(&report, &args.out)?;
    print!("{}", render_summary(&report.summary));
    Ok(ExitCode::SUCCESS)
}

fn cmd_lp_solve(args: LpSolveArgs) -> Result<ExitCode> {
    let run = run_lp_file(&args.model_file, args.options_file.as_deref(), &args.solution_file)?;
    println!("Model status        : {}", run.status);
    if let Some(obj) = run.objective {
        println!("Objective value     : {obj}");
    }
    if let Some(b) = run.dual_bound {
        println!("Dual bound          {b}");
    }
    Ok(if run.status == Status::Unread { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn cmd_backends() -> Result<ExitCode> {
    let default = default_backend_name();
    for b in backend_list() {
        let mark = if b.name == default { "*" } else { " " };
        let state = if b.available { "available" } else { "unavailable" };
        println!("{mark} {:<9} {:<12} {}", b.name, state, b.description);
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<netcover::Error>() {
        Some(netcover::Error::Backend(_) | netcover::Error::UnknownBackend(_)) => 3,
        Some(netcover::Error::InconsistentSolution(_)) => 3,
        _ => 2,
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    if err.downcast_ref::<UsageError>().is_some() {
        return "usage";
    }
    match err.downcast_ref::<netcover::Error>() {
        Some(netcover::Error::Backend(_) | netcover::Error::UnknownBackend(_)) => "backend",
        Some(netcover::Error::InconsistentSolution(_)) => "solution",
        Some(netcover::Error::Parse { .. }) => "parse",
        Some(netcover::Error::Io(_)) => "io",
        Some(_) => "input",
        None => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = cli.log_level.clone().or_else(|| std::env::var("NETCOVER_LOG").ok()).unwrap_or_else(|| "warn".into());
    env_logger::Builder::new().parse_filters(&filter).format_timestamp(None).init();
    let result = match cli.command {
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Covers(a) => cmd_covers(a),
        Command::Build(a) => cmd_build(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::LpSolve(a) => cmd_lp_solve(a),
        Command::Backends => cmd_backends(),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            let message = serde_json::json!({ "error": error_kind(&err), "message": format!("{err:#}") });
            eprintln!("{message}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
