//! Command-line front end.
//!
//! Exit codes: `0` success, `1` usage, parse or I/O error, `2` construction
//! failure (a partial tower is still written).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::graph::{Graph, GraphFamily, TailRule};
use crate::iepg::SolverParams;
use crate::linalg::eigh_dense;
use crate::spectrum::SpectrumSpec;
use crate::tower::{build_tower, Tower, TowerError, TowerParams};
use crate::verify::{verify_tower_with, VerifyOptions};

pub const SEED_ENV: &str = "SPECTRAL_TOWER_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONSTRUCTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "spectral-tower", version, about = "Build and verify graph-constrained spectral towers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a tower and write it to a directory.
    Build(BuildArgs),
    /// Verify a tower directory and write report.json.
    Verify(VerifyArgs),
    /// Emit truncation spectra as CSV.
    Spectrum(SpectrumArgs),
    /// Write the prefix of a graph family in edge-list format.
    GenGraph(GenGraphArgs),
    /// Build, verify and dump spectra for a small fixture.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct GraphSource {
    /// Graph family: path, star, complete, empty, binary_tree, random.
    #[arg(long, conflicts_with = "graph")]
    pub family: Option<String>,
    /// Edge-list file, extended past its last vertex by --tail.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value = "isolated")]
    pub tail: String,
    /// Edge probability of the random family.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Spectrum DSL text, or a path to a file containing it.
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_spec: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tau_edge: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Tower directory.
    #[arg(long)]
    pub tower: PathBuf,
    /// Truncation order; defaults to the number of steps plus 10.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_parser = parse_window, default_value = "-10,10")]
    pub window: (f64, f64),
    /// Report path; defaults to <tower>/report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub tower: PathBuf,
    /// Steps to emit (comma separated); defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Truncation order; defaults to the number of steps.
    #[arg(long)]
    pub k: Option<usize>,
    /// CSV path; defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("window must be `lo,hi`")?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("invalid window bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("invalid window bound `{hi}`"))?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("window needs lo < hi, got [{lo}, {hi}]"))
    }
}

#[derive(Debug)]
struct CliError {
    code: i32,
    msg: String,
}

impl CliError {
    fn usage(msg: impl ToString) -> Self {
        Self { code: EXIT_USAGE, msg: msg.to_string() }
    }
}

impl From<TowerError> for CliError {
    fn from(e: TowerError) -> Self {
        Self::usage(e)
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Build(args) => cmd_build(&args),
        Command::Verify(args) => cmd_verify(&args).and_then(|pass| {
            if pass {
                Ok(())
            } else {
                Err(CliError::usage("verification failed"))
            }
        }),
        Command::Spectrum(args) => cmd_spectrum(&args),
        Command::GenGraph(args) => cmd_gen_graph(&args),
        Command::Demo(args) => cmd_demo(&args),
    }
}

fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::usage(format!("{SEED_ENV}=`{v}` is not an integer"))),
        Err(_) => Ok(flag),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn resolve_family(src: &GraphSource, seed: u64) -> Result<GraphFamily, CliError> {
    match (&src.family, &src.graph) {
        (Some(name), None) => {
            check_probability(src.p)?;
            GraphFamily::from_name(name, seed, src.p).map_err(CliError::usage)
        }
        (None, Some(path)) => {
            let graph = Graph::parse(&read_file(path)?)
                .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            let tail: TailRule = src.tail.parse().map_err(CliError::usage)?;
            Ok(GraphFamily::Explicit { graph, tail })
        }
        _ => Err(CliError::usage("exactly one of --family or --graph is required")),
    }
}

fn check_probability(p: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(CliError::usage(format!("--p must lie in [0, 1], got {p}")))
    }
}

fn resolve_spec(text: &str) -> Result<SpectrumSpec, CliError> {
    let path = Path::new(text);
    let dsl = if path.is_file() { read_file(path)? } else { text.to_string() };
    SpectrumSpec::parse(&dsl).map_err(CliError::usage)
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::usage(format!("--{name} must be positive, got {v}")))
    }
}

fn build_config(args: &BuildArgs) -> Result<(GraphFamily, SpectrumSpec, TowerParams), CliError> {
    if args.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    positive("epsilon", args.epsilon)?;
    positive("tol-spec", args.tol_spec)?;
    positive("tau-edge", args.tau_edge)?;
    if args.max_iter == 0 {
        return Err(CliError::usage("--max-iter must be at least 1"));
    }
    let seed = effective_seed(args.seed)?;
    let family = resolve_family(&args.source, seed)?;
    let spec = resolve_spec(&args.spec)?;
    let params = TowerParams {
        solver: SolverParams {
            tol_spec: args.tol_spec,
            tau_edge: args.tau_edge,
            max_iter: args.max_iter,
            seed,
        },
    };
    Ok((family, spec, params))
}

fn cmd_build(args: &BuildArgs) -> Result<(), CliError> {
    let (family, spec, params) = build_config(args)?;
    match build_tower(&family, &spec, args.n, args.epsilon, &params) {
        Ok(tower) => {
            tower.save(&args.out)?;
            eprintln!("built {} steps into {}", tower.steps.len(), args.out.display());
            Ok(())
        }
        Err(TowerError::StepFailed { n, reason, partial }) => {
            partial.save(&args.out)?;
            Err(CliError {
                code: EXIT_CONSTRUCTION,
                msg: format!(
                    "step {n} failed after retries: {reason}; partial tower of {} steps written to {}",
                    partial.steps.len(),
                    args.out.display()
                ),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn load_tower(dir: &Path) -> Result<Tower, CliError> {
    Ok(Tower::load(dir)?)
}

/// Returns whether the report passed.
fn cmd_verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let tower = load_tower(&args.tower)?;
    let built = tower.steps.len();
    let extra_order = match args.k {
        Some(k) if k < built => {
            return Err(CliError::usage(format!("--k {k} is smaller than the {built} built steps")))
        }
        Some(k) => k - built,
        None => 10,
    };
    let opts = VerifyOptions { extra_order, window: args.window, grid_step: None };
    let report = verify_tower_with(&tower, &opts);
    let out = args.out.clone().unwrap_or_else(|| args.tower.join("report.json"));
    report.save(&out)?;
    for c in report.failures() {
        eprintln!("FAIL {}: measured {:e} vs bound {:e} ({})", c.name, c.measured, c.bound, c.context);
    }
    eprintln!(
        "{} of {} checks passed; report written to {}",
        report.summary.passed,
        report.summary.total,
        out.display()
    );
    Ok(report.pass())
}

/// CSV rows `n,K,index,eigenvalue,distance` for the requested truncations.
pub fn spectrum_csv(tower: &Tower, steps: &[usize], k: usize) -> Result<String, TowerError> {
    let mut out = String::from("n,K,index,eigenvalue,distance\n");
    for &n in steps {
        let m = tower.assemble_truncation(n, k)?;
        for (idx, mu) in eigh_dense(&m.to_dense()).values.iter().enumerate() {
            let dist = tower.spec.distance_to_set(*mu);
            writeln!(out, "{n},{k},{},{:.16e},{:.16e}", idx + 1, mu, dist).unwrap();
        }
    }
    Ok(out)
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), CliError> {
    let tower = load_tower(&args.tower)?;
    let built = tower.steps.len();
    let steps: Vec<usize> = if args.n.is_empty() { (1..=built).collect() } else { args.n.clone() };
    if let Some(&bad) = steps.iter().find(|&&n| n == 0 || n > built) {
        return Err(CliError::usage(format!("--n {bad} outside 1..={built}")));
    }
    let k = args.k.unwrap_or(built);
    if k < built {
        return Err(CliError::usage(format!("--k {k} must be at least the {built} built steps")));
    }
    let csv = spectrum_csv(&tower, &steps, k)?;
    match &args.out {
        Some(path) => write_file(path, &csv),
        None => {
            std::io::stdout().write_all(csv.as_bytes()).map_err(|e| CliError::usage(format!("stdout: {e}")))
        }
    }
}

fn cmd_gen_graph(args: &GenGraphArgs) -> Result<(), CliError> {
    if args.size == 0 {
        return Err(CliError::usage("--size must be at least 1"));
    }
    check_probability(args.p)?;
    let seed = effective_seed(args.seed)?;
    let family = GraphFamily::from_name(&args.family, seed, args.p).map_err(CliError::usage)?;
    let text = family.prefix(args.size).render();
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_demo(args: &DemoArgs) -> Result<(), CliError> {
    let seed = effective_seed(args.seed)?;
    let family = GraphFamily::Star;
    let spec = SpectrumSpec::parse("interval 0 1; rayup 2").expect("fixture spec");
    let params = TowerParams { solver: SolverParams { seed, ..SolverParams::default() } };
    let tower = match build_tower(&family, &spec, 8, 1.0, &params) {
        Ok(t) => t,
        Err(e) => return Err(CliError { code: EXIT_CONSTRUCTION, msg: e.to_string() }),
    };
    tower.save(&args.out)?;
    let report = verify_tower_with(&tower, &VerifyOptions::default());
    report.save(&args.out.join("report.json"))?;
    let steps: Vec<usize> = (1..=tower.steps.len()).collect();
    write_file(&args.out.join("spectrum.csv"), &spectrum_csv(&tower, &steps, 18)?)?;
    eprintln!(
        "demo: star graph, Λ = [0, 1] ∪ [2, ∞), 8 steps; {} of {} checks passed; output in {}",
        report.summary.passed,
        report.summary.total,
        args.out.display()
    );
    if report.pass() {
        Ok(())
    } else {
        Err(CliError::usage("demo verification failed"))
    }
}
