//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when the data admit no answer (infeasible cap,
//! unreachable floor, detected non-monotonicity), 2 for usage and input errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use crate::cap::Cap;
use crate::error::{Error, Result};
use crate::frontier::{run_frontier, write_frontier_csv, Algorithm, DEFAULT_ETA_GRID};
use crate::instance::{
    generate_blockwise, generate_random_discrete, BlockwiseSpec, ProblemInstance, RandomDiscreteSpec,
};
use crate::io::{
    dense_rows, load_assignment_csv, load_bids, load_similarity_csv, write_assignment_csv, write_similarity_csv,
    LevelMap, RunConfig, RunReport, SimilarityTable,
};
use crate::metrics::compute_metrics;
use crate::perturbation::{make_perturbation, PerturbationSpec};
use crate::sampling::{decompose, sample_assignment};
use crate::solvers::{solve_plra_detailed, solve_pm_exact_detailed, solve_pm_flow_detailed, SolverConfig};
use crate::tuning::{tune_plra, tune_pm_exponential, tune_pm_quadratic, QualityFloor, TuningConfig};

#[derive(Parser, Debug)]
#[command(name = "randmatch", version, about = "Randomized reviewer-paper assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a fractional assignment.
    Solve(SolveArgs),
    /// Search Q (and beta or alpha) against a quality floor.
    Tune(TuneArgs),
    /// Decompose an assignment and draw one deterministic outcome.
    Sample(SampleArgs),
    /// Quality and randomness metrics of an assignment.
    Metrics(MetricsArgs),
    /// Tune and solve over a grid of quality fractions.
    Frontier(FrontierArgs),
    /// Write a synthetic similarity matrix.
    Generate(GenerateArgs),
    /// Write the lottery over deterministic assignments as JSON.
    Decompose(DecomposeArgs),
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// Dense similarity CSV.
    #[arg(long, conflicts_with = "bids", required_unless_present = "bids")]
    sim: Option<PathBuf>,
    /// Bid triples CSV (paper, reviewer, level).
    #[arg(long)]
    bids: Option<PathBuf>,
    /// Bid level map, e.g. "yes=1,maybe=0.5,no=0.25,conflict=0".
    #[arg(long, requires = "bids")]
    levels: Option<String>,
    /// Reviewers per paper.
    #[arg(long)]
    lp: u32,
    /// Papers per reviewer.
    #[arg(long)]
    lr: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Plra,
    Flow,
    Exact,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Probability cap, exact decimal or a/b.
    #[arg(short = 'Q', long = "cap", default_value = "1")]
    cap: Cap,
    #[arg(long, default_value = "linear")]
    perturb: PerturbationSpec,
    #[arg(long, value_enum, default_value = "flow")]
    method: Method,
    /// Flow precision; defaults to a multiple of the cap denominator >= 100.
    #[arg(long)]
    w: Option<u64>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Skip the dual Newton start of the exact method.
    #[arg(long)]
    no_dual_start: bool,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the assignment matrix as CSV.
    #[arg(long)]
    assignment: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "pm-q")]
    algorithm: Algorithm,
    /// Absolute quality floor.
    #[arg(long, conflicts_with = "eta", required_unless_present = "eta")]
    floor: Option<f64>,
    /// Floor as a fraction of the maximum quality.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    search_tol: f64,
    #[arg(long, default_value_t = 64.0)]
    alpha_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Fractional assignment CSV.
    #[arg(long)]
    assignment: PathBuf,
    #[arg(long, required = true)]
    seed: Option<u64>,
    /// Output CSV of the sampled 0/1 matrix (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    assignment: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    assignment: PathBuf,
    /// Also report the perturbed quality under this perturbation.
    #[arg(long)]
    perturb: Option<PerturbationSpec>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FrontierArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Comma-separated quality fractions.
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "plra,pm-q,pm-e")]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 0.02)]
    delta: f64,
    #[arg(long, default_value_t = 1e-3)]
    search_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Blockwise,
    Random,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Block identity rows separated by ';', entries by ',' (blockwise).
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long, value_delimiter = ',')]
    paper_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    reviewer_sizes: Option<Vec<usize>>,
    /// Papers (random).
    #[arg(long)]
    np: Option<usize>,
    /// Reviewers (random).
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_domain() {
                1
            } else {
                2
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Tune(a) => tune(a),
        Command::Sample(a) => sample(a),
        Command::Metrics(a) => metrics(a),
        Command::Frontier(a) => frontier(a),
        Command::Generate(a) => generate(a),
        Command::Decompose(a) => decompose_cmd(a),
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn load(args: &InstanceArgs) -> Result<(SimilarityTable, ProblemInstance, String)> {
    let (table, input) = match (&args.sim, &args.bids) {
        (Some(p), _) => (load_similarity_csv(p)?, p.display().to_string()),
        (None, Some(p)) => {
            let levels = match &args.levels {
                Some(s) => LevelMap::parse(s)?,
                None => LevelMap::default(),
            };
            (load_bids(p, &levels)?, p.display().to_string())
        }
        (None, None) => return Err(Error::InvalidParameter("one of --sim or --bids is required".into())),
    };
    let inst = table.clone().into_instance(args.lp, args.lr)?;
    Ok((table, inst, input))
}

fn base_config(command: &str, args: &InstanceArgs, input: String) -> RunConfig {
    RunConfig {
        command: command.into(),
        input: Some(input),
        paper_load: args.lp,
        reviewer_load: args.lr,
        ..RunConfig::default()
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let (table, inst, input) = load(&a.instance)?;
    let mut cfg = SolverConfig::new(a.cap, a.perturb)
        .with_tol(a.tol)
        .with_max_iters(a.max_iters)
        .with_dual_start(!a.no_dual_start);
    if let Some(w) = a.w {
        cfg = cfg.with_w(w);
    }
    let start = Instant::now();
    let sol = match a.method {
        Method::Plra => solve_plra_detailed(&inst, a.cap)?,
        Method::Flow => solve_pm_flow_detailed(&inst, &cfg)?,
        Method::Exact => solve_pm_exact_detailed(&inst, &cfg)?,
    };
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let f = make_perturbation(a.perturb)?;
    let metrics = compute_metrics(&sol.assignment, &inst, Some(&f))?;
    let mut config = base_config("solve", &a.instance, input);
    config.method = Some(format!("{:?}", a.method).to_lowercase());
    config.cap = Some(a.cap.to_string());
    config.perturbation = Some(a.perturb.to_string());
    if a.method != Method::Plra {
        config.w = Some(cfg.w);
        config.tol = Some(cfg.tol);
        config.max_iters = Some(cfg.max_iters);
    }
    if let Some(p) = &a.assignment {
        write_assignment_csv(File::create(p)?, &sol.assignment, &table.paper_ids, &table.reviewer_ids)?;
    }
    let report = RunReport {
        config,
        paper_ids: table.paper_ids,
        reviewer_ids: table.reviewer_ids,
        assignment: dense_rows(&sol.assignment),
        metrics,
        stats: sol.stats,
        wall_time_ms: wall,
    };
    let mut out = output(&a.out)?;
    report.write_json(&mut out)?;
    writeln!(out)?;
    Ok(())
}

fn tune(a: TuneArgs) -> Result<()> {
    let (_, inst, _) = load(&a.instance)?;
    let floor = match (a.floor, a.eta) {
        (Some(v), _) => QualityFloor::Absolute(v),
        (None, Some(eta)) => QualityFloor::Fraction(eta),
        (None, None) => return Err(Error::InvalidParameter("--floor or --eta is required".into())),
    };
    let mut cfg = TuningConfig::new(floor).with_delta(a.delta);
    cfg.search_tol = a.search_tol;
    cfg.alpha_max = a.alpha_max;
    let tuned = match a.algorithm {
        Algorithm::Plra => tune_plra(&inst, &cfg)?,
        Algorithm::PmQuadratic => tune_pm_quadratic(&inst, &cfg)?,
        Algorithm::PmExponential => tune_pm_exponential(&inst, &cfg)?,
    };
    let mut out = output(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &serde_json::json!({
        "algorithm": a.algorithm,
        "config": cfg,
        "result": tuned,
    }))?;
    writeln!(out)?;
    Ok(())
}

fn read_checked_assignment(path: &Path, inst: &ProblemInstance) -> Result<crate::metrics::FractionalAssignment> {
    let x = load_assignment_csv(path)?;
    if x.dims() != inst.dims() {
        return Err(Error::DimensionMismatch {
            expected: inst.dims(),
            got: x.dims(),
        });
    }
    Ok(x)
}

fn sample(a: SampleArgs) -> Result<()> {
    let (table, inst, _) = load(&a.instance)?;
    let x = read_checked_assignment(&a.assignment, &inst)?;
    let dist = decompose(&x, &inst)?;
    let seed = a.seed.expect("clap requires --seed");
    let drawn = sample_assignment(&dist, seed)?;
    write_assignment_csv(output(&a.out)?, &drawn.to_fractional(), &table.paper_ids, &table.reviewer_ids)
}

fn decompose_cmd(a: DecomposeArgs) -> Result<()> {
    let (_, inst, _) = load(&a.instance)?;
    let x = read_checked_assignment(&a.assignment, &inst)?;
    let dist = decompose(&x, &inst)?;
    let mut out = output(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &dist)?;
    writeln!(out)?;
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let (_, inst, _) = load(&a.instance)?;
    let x = read_checked_assignment(&a.assignment, &inst)?;
    let f = a.perturb.map(make_perturbation).transpose()?;
    let m = compute_metrics(&x, &inst, f.as_ref())?;
    let mut out = output(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &m)?;
    writeln!(out)?;
    Ok(())
}

fn frontier(a: FrontierArgs) -> Result<()> {
    let (_, inst, _) = load(&a.instance)?;
    let grid = a.eta.unwrap_or_else(|| DEFAULT_ETA_GRID.to_vec());
    let mut cfg = TuningConfig::new(QualityFloor::Fraction(1.0)).with_delta(a.delta);
    cfg.search_tol = a.search_tol;
    let rows = run_frontier(&inst, &grid, &a.algorithms, &cfg)?;
    write_frontier_csv(output(&a.out)?, &rows)
}

fn parse_blocks(s: &str) -> Result<Array2<f64>> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("block entry `{v}`")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("block identity must be square".into()));
    }
    Ok(Array2::from_shape_vec((k, k), rows.concat()).expect("square"))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let missing = |flag: &str| Error::InvalidParameter(format!("--{flag} is required for this kind"));
    let sim = match a.kind {
        Kind::Blockwise => {
            let spec = BlockwiseSpec {
                block_identity: parse_blocks(a.blocks.as_deref().ok_or_else(|| missing("blocks"))?)?,
                paper_sizes: a.paper_sizes.ok_or_else(|| missing("paper-sizes"))?,
                reviewer_sizes: a.reviewer_sizes.ok_or_else(|| missing("reviewer-sizes"))?,
            };
            let nr = spec.reviewer_sizes.iter().sum::<usize>().max(1);
            generate_blockwise(&spec, 1, nr as u32)?.similarities().clone()
        }
        Kind::Random => {
            let np = a.np.ok_or_else(|| missing("np"))?;
            let nr = a.nr.ok_or_else(|| missing("nr"))?;
            let spec = RandomDiscreteSpec {
                levels: a.levels,
                seed: a.seed,
            };
            generate_random_discrete(np, nr, 1, np.max(1) as u32, &spec)?.similarities().clone()
        }
    };
    write_similarity_csv(output(&a.out)?, &SimilarityTable::unlabelled(sim))
}
