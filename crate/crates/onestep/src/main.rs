use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use onestep::cache::TableCache;
use onestep::core::efficiency::{alpha_grid, are, AreTable};
use onestep::core::harness::{Bench, BenchConfig, EstimatorSpec, Model};
use onestep::core::linear_model::{fit_lad, fit_ols, preprocess, residuals};
use onestep::core::onestep::{fit_hodges_lehmann_from, fit_onestep_from, NelderMeadConfig, OneStepConfig};
use onestep::core::scores::{label, ScoreFunction, ScoreSpec};
use onestep::core::stable::StableParams;
use onestep::io;
use onestep::parallel::{par_map, run_parallel, threads_from_env};
use onestep::{Error, Result};

#[derive(Parser)]
#[command(name = "onestep", version, about = "One-step R-estimation for linear models with stable errors")]
struct Cli {
    /// Directory of cached stable score tables.
    #[arg(long, global = true, env = "ONESTEP_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    /// Keep score tables in memory only.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a regression read from CSV (response first, then regressors).
    Fit(FitArgs),
    /// Asymptotic relative efficiencies.
    Are(AreArgs),
    /// Monte Carlo comparison of estimators.
    Bench(BenchArgs),
    /// Export a score function as (u, J(u)) CSV.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum EstimatorKind {
    Ols,
    Lad,
    Onestep,
    Hl,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    estimator: EstimatorKind,
    /// vdw, wilcoxon, laplace, cauchy or stable:ALPHA,B.
    #[arg(long, default_value = "vdw")]
    score: ScoreSpec,
    /// Line-search grid constant.
    #[arg(long, default_value_t = 100.0)]
    grid_c: f64,
    /// Fit without an intercept.
    #[arg(long)]
    no_intercept: bool,
    /// Start the Nelder–Mead search of `hl` at zero instead of at LAD.
    #[arg(long)]
    hl_from_origin: bool,
    /// JSON report; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV of the line-search evaluations (v, h).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// CSV of residual ranks and their scores at the final estimate.
    #[arg(long)]
    ranks: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct AreArgs {
    #[command(subcommand)]
    curve: Option<AreCommand>,
    /// CSV of `score,reference` pairs.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// CSV of `alpha,b` densities.
    #[arg(long)]
    densities: Option<PathBuf>,
    #[arg(long, default_value = "are_table.csv")]
    output: PathBuf,
}

#[derive(Subcommand)]
enum AreCommand {
    /// ARE along a grid of tail indices.
    Curve(CurveArgs),
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    score: ScoreSpec,
    #[arg(long, default_value = "laplace")]
    against: ScoreSpec,
    /// Skewness values; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
    b: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha_from: f64,
    #[arg(long, default_value_t = 2.0)]
    alpha_to: f64,
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Defaults to are_curve_<score>.csv.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// k2, k4 or kN.
    #[arg(long, default_value = "k2")]
    model: String,
    /// Number of regressors for `--model kn`.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Replications per cell; 200 unless --full.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Run 1000 replications per cell.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    design_seed: u64,
    /// Comma separated: ols, lad, onestep:SCORE, hl:SCORE.
    #[arg(long, default_value = "ols,lad,onestep:vdw,onestep:wilcoxon,onestep:laplace")]
    estimators: String,
    /// Error laws as `alpha,b` separated by `;`.
    #[arg(long, default_value = "2,0;1.8,0;1.8,0.5;1.2,0;1.2,0.5;0.5,0.5")]
    errors: String,
    #[arg(long, default_value_t = 100.0)]
    grid_c: f64,
    #[arg(long)]
    hl_from_origin: bool,
    #[arg(long, default_value = "bench.json")]
    output: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    score: ScoreSpec,
    #[arg(long, default_value_t = 999)]
    points: usize,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    match execute(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("{message}");
            ExitCode::from(code)
        }
    }
}

/// Runs one command line. Failures carry the exit code and the JSON error for stderr.
fn execute<I, T>(args: I) -> std::result::Result<(), (u8, String)>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err((2, Error::Usage(e.to_string().trim_end().to_string()).to_json())),
    };
    run(cli).map_err(|e| {
        let code = if matches!(e, Error::Usage(_)) { 2 } else { 1 };
        (code, e.to_json())
    })
}

fn run(cli: Cli) -> Result<()> {
    let cache = if cli.no_cache {
        TableCache::in_memory()
    } else {
        TableCache::new(Some(cli.cache_dir.unwrap_or_else(onestep::cache::default_dir)))
    };
    match cli.command {
        Command::Fit(a) => fit(&cache, a),
        Command::Are(a) => match a.curve {
            Some(AreCommand::Curve(c)) => curve(&cache, c),
            None => are_grid(&cache, a),
        },
        Command::Bench(a) => bench(&cache, a),
        Command::Score(a) => {
            let j = cache.score(&a.score)?;
            io::write_score_csv(&a.output, &j, a.points)
        }
    }
}

fn fit(cache: &TableCache, a: FitArgs) -> Result<()> {
    let data = io::read_regression_csv(&a.input)?;
    let (problem, summary) = preprocess(data.y, data.c, !a.no_intercept)?;
    let lad = fit_lad(&problem)?;
    let score = match a.estimator {
        EstimatorKind::Onestep | EstimatorKind::Hl => Some(cache.score(&a.score)?),
        _ => None,
    };
    let mut report = match a.estimator {
        EstimatorKind::Ols => fit_ols(&problem)?,
        EstimatorKind::Lad => lad,
        EstimatorKind::Onestep => {
            let cfg = OneStepConfig::new(score.clone().expect("score")).with_c(a.grid_c);
            fit_onestep_from(&problem, &summary, &cfg, &lad)?
        }
        EstimatorKind::Hl => {
            let mut nm = NelderMeadConfig::default();
            if a.hl_from_origin {
                nm.start = onestep::core::onestep::HlStart::Origin;
            }
            fit_hodges_lehmann_from(&problem, &summary, score.as_ref().expect("score"), &nm, &lad)?
        }
    };
    report.flags.extend(summary.warnings.iter().cloned());
    report.flags.dedup();
    if let Some(path) = &a.trace {
        match &report.trace {
            Some(t) => io::write_trace_csv(path, t)?,
            None => return Err(Error::Usage("--trace needs --estimator onestep".into())),
        }
    }
    if let Some(path) = &a.ranks {
        let j = match &score {
            Some(j) => j.clone(),
            None => cache.score(&a.score)?,
        };
        let z = residuals(&problem, report.intercept_hat.unwrap_or(0.0), &report.beta_hat)?;
        io::write_ranks_csv(path, &z, &j)?;
    }
    match &a.output {
        Some(path) => io::write_json(path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn are_grid(cache: &TableCache, a: AreArgs) -> Result<()> {
    let (Some(pairs), Some(dens)) = (&a.pairs, &a.densities) else {
        return Err(Error::Usage("are needs --pairs and --densities, or the curve subcommand".into()));
    };
    let pairs = io::read_pairs(pairs)?;
    let densities = io::read_densities(dens)?;
    let mut specs: Vec<ScoreSpec> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    specs.extend(densities.iter().map(|d| ScoreSpec::Stable { alpha: d.alpha(), b: d.b() }));
    // Build tables up front, in parallel, so the grid below only integrates.
    for r in par_map(&specs, |s| cache.score(s)) {
        r?;
    }
    let gs = densities
        .iter()
        .map(|d| cache.score(&ScoreSpec::Stable { alpha: d.alpha(), b: d.b() }))
        .collect::<Result<Vec<_>>>()?;
    let rows = par_map(&pairs, |(x, y)| -> Result<Vec<f64>> {
        let (j1, j2) = (cache.score(x)?, cache.score(y)?);
        gs.iter().map(|g| Ok(are(&j1, &j2, g)?)).collect()
    });
    let table = AreTable {
        reference: "reference".into(),
        scores: pairs.iter().map(|(x, y)| format!("{x}/{y}")).collect(),
        densities: densities.iter().map(|d| format!("{}/{}", d.alpha(), d.b())).collect(),
        values: rows.into_iter().collect::<Result<_>>()?,
    };
    io::write_are_table_csv(&a.output, &table)
}

fn curve(cache: &TableCache, c: CurveArgs) -> Result<()> {
    let alphas = alpha_grid(c.alpha_from, c.alpha_to, c.step)?;
    let j1 = cache.score(&c.score)?;
    let j2 = cache.score(&c.against)?;
    let points: Vec<(f64, f64)> = c.b.iter().flat_map(|&b| alphas.iter().map(move |&a| (a, b))).collect();
    let values = par_map(&points, |&(alpha, b)| -> Result<f64> {
        let g = cache.score(&ScoreSpec::Stable { alpha, b })?;
        Ok(are(&j1, &j2, &g)?)
    });
    let path = c.output.unwrap_or_else(|| {
        let tag = label(&j1).replace([':', ','], "_");
        PathBuf::from(format!("are_curve_{tag}.csv"))
    });
    let mut rows = Vec::with_capacity(points.len());
    for (&(alpha, b), v) in points.iter().zip(values) {
        rows.push((alpha, b, v?));
    }
    io::write_are_curve_csv(&path, &rows)
}

fn parse_estimators(text: &str) -> Result<Vec<EstimatorSpec>> {
    let mut out = Vec::new();
    let mut pending = String::new();
    for tok in text.split(',') {
        if !pending.is_empty() {
            pending.push(',');
        }
        pending.push_str(tok.trim());
        if let Ok(e) = EstimatorSpec::parse(&pending) {
            out.push(e);
            pending.clear();
        }
    }
    if !pending.is_empty() {
        return Err(Error::Usage(format!("unknown estimator {pending:?}")));
    }
    if out.is_empty() {
        return Err(Error::Usage("no estimators".into()));
    }
    Ok(out)
}

fn parse_errors(text: &str) -> Result<Vec<StableParams>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let v: Vec<&str> = s.split([',', '/']).map(str::trim).collect();
            let bad = || Error::Usage(format!("error law {s:?} is not alpha,b"));
            if v.len() != 2 {
                return Err(bad());
            }
            let alpha = v[0].parse().map_err(|_| bad())?;
            let b = v[1].parse().map_err(|_| bad())?;
            Ok(StableParams::standard(alpha, b)?)
        })
        .collect()
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    #[serde(flatten)]
    result: &'a onestep::core::harness::BenchResult,
    seconds: f64,
    threads: usize,
}

fn bench(cache: &TableCache, a: BenchArgs) -> Result<()> {
    let model = match (Model::parse(&a.model)?, a.k) {
        (Model::Kn(_), Some(k)) => Model::Kn(k),
        (m, Some(k)) if m.k() != k => {
            return Err(Error::Usage(format!("--K {k} contradicts --model {}", a.model)))
        }
        (m, _) => m,
    };
    let m = match (a.m, a.full) {
        (Some(m), false) => m,
        (None, false) => 200,
        (_, true) => {
            eprintln!("warning: --full runs 1000 replications per cell; this can take a long time");
            1000
        }
    };
    let mut config = BenchConfig::new(model, a.n, m);
    config.estimators = parse_estimators(&a.estimators)?;
    config.error_params = parse_errors(&a.errors)?;
    config.master_seed = a.seed;
    config.design_seed = a.design_seed;
    config.grid_c = a.grid_c;
    config.hl_from_origin = a.hl_from_origin;
    let threads = threads_from_env()?;
    let start = Instant::now();
    let mut resolved: Vec<(ScoreSpec, ScoreFunction)> = Vec::new();
    for spec in config.estimators.iter().filter_map(EstimatorSpec::score) {
        resolved.push((spec, cache.score(&spec)?));
    }
    let bench = Bench::with_scores(config, |s| {
        resolved
            .iter()
            .find(|(r, _)| r == s)
            .map(|(_, j)| j.clone())
            .ok_or(onestep::core::Error::InvalidScore("unresolved score"))
    })?;
    let result = run_parallel(&bench, threads)?;
    for c in result.cells.iter().filter(|c| c.flagged) {
        eprintln!(
            "warning: {} under {} failed in {} of {} replications",
            c.estimator, c.error_params, c.failures, c.replications
        );
    }
    io::write_json(
        &a.output,
        &BenchOutput {
            result: &result,
            seconds: start.elapsed().as_secs_f64(),
            threads: threads.unwrap_or_else(rayon::current_num_threads),
        },
    )
}
