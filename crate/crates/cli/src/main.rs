use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcurve::curves::{self, CurveSpec, DistortionSpec};
use pcurve::{config, harness, output, plot, pool_io, CliError};
use pcurve_core::analytic::{Scenario, Sided};
use pcurve_core::battery::{BinomialBins, HistogramSpec, TestKind};
use pcurve_core::numkit::EffectDistribution;
use pcurve_core::power::{Battery, BatteryConfig, LcmCache};
use serde_json::json;

const OUTPUT_ENV: &str = "PCURVE_OUTPUT_DIR";

/// Simulate p-hacking, compute analytic p-curves and run tests for p-hacking.
///
/// Output files go to --output-dir, else the study file's output_dir, else
/// $PCURVE_OUTPUT_DIR, else the current directory.
///
/// Exit status: 0 on success, 2 on invalid configuration or input, 3 when a
/// numerical routine fails or the failure budget is exceeded, 1 on I/O errors.
#[derive(Parser)]
#[command(name = "pcurve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a pool of honest and p-hacked p-values for a study file.
    SimulatePool(SimulatePool),
    /// Run a power study and write its table (and optionally a plot).
    Power(Power),
    /// Export analytic p-curves and bin masses as CSV.
    AnalyticCurves(AnalyticCurves),
    /// Export size distortions and biases as CSV.
    SizeBias(SizeBias),
    /// Run the test battery on a one-column CSV of p-values.
    Test(TestCmd),
}

#[derive(Args)]
struct Parallel {
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct SimulatePool {
    /// Study file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Pool file; `.csv` writes text, anything else binary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replications, overriding pool_reps.
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[command(flatten)]
    parallel: Parallel,
}

#[derive(Args)]
struct Power {
    /// Study file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Pool file from `simulate-pool`; simulated on the fly when absent.
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Also write an SVG of the power curves.
    #[arg(long)]
    plot: bool,
    /// Largest tolerated share of replications with a failed Cox-Shi QP.
    #[arg(long, default_value_t = 0.05)]
    max_failure_rate: f64,
    /// Override mc_reps.
    #[arg(long)]
    mc_reps: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    parallel: Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Covariate,
    Iv,
    Dataset,
    Variance,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Covariate => Scenario::CovariateSelection,
            ScenarioArg::Iv => Scenario::IvSelection,
            ScenarioArg::Dataset => Scenario::DatasetSelection,
            ScenarioArg::Variance => Scenario::VarianceBandwidth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    NoHack,
    Threshold,
    Minimum,
}

impl From<StrategyArg> for pcurve_core::analytic::Strategy {
    fn from(s: StrategyArg) -> Self {
        use pcurve_core::analytic::Strategy;
        match s {
            StrategyArg::NoHack => Strategy::NoHack,
            StrategyArg::Threshold => Strategy::Threshold,
            StrategyArg::Minimum => Strategy::Minimum,
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Observations per study.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Kernel weight of the variance scenario.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    /// Simulations behind the residual autocorrelation law.
    #[arg(long, default_value_t = 200_000)]
    law_draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct AnalyticCurves {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "no-hack,threshold,minimum")]
    strategies: Vec<StrategyArg>,
    /// Point-mass effect; ignored when a gamma mixture is given.
    #[arg(long, default_value_t = 0.0)]
    h: f64,
    /// Gamma mixture over effects as shape,rate.
    #[arg(long, value_delimiter = ',')]
    gamma_mixture: Option<Vec<f64>>,
    /// Correlation of the two covariate-selection statistics.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Number of datasets.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[command(flatten)]
    model: ModelArgs,
    /// Grid step of the density export.
    #[arg(long, default_value_t = 0.001)]
    step: f64,
    /// Density CSV; `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Bin width of the bin-mass export.
    #[arg(long, default_value_t = 0.01)]
    bin_width: f64,
    /// Bin-mass CSV; skipped when absent.
    #[arg(long)]
    bins_out: Option<PathBuf>,
}

#[derive(Args)]
struct SizeBias {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "covariate,iv,variance")]
    scenarios: Vec<ScenarioArg>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    h: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.75")]
    rho: Vec<f64>,
    /// First-stage coefficients of the IV scenario.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    gamma: Vec<f64>,
    #[command(flatten)]
    model: ModelArgs,
    /// CSV; `-` for stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SidedArg {
    One,
    Two,
}

#[derive(Args)]
struct TestCmd {
    /// One-column CSV of p-values; `-` for stdin.
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "binomial,fisher,lcm,cs1,csub,cs2b,discontinuity")]
    tests: Vec<String>,
    /// Analysis window as lower,upper.
    #[arg(long, value_delimiter = ',', default_value = "0,0.15")]
    window: Vec<f64>,
    /// Histogram bins on the window.
    #[arg(long, default_value_t = 15)]
    bins: usize,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Discontinuity location.
    #[arg(long, default_value_t = 0.05)]
    cutoff: f64,
    /// Fixed discontinuity bandwidth.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Binomial bins as far_lo,far_hi,near_lo,near_hi.
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.045,0.045,0.05")]
    binomial_bins: Vec<f64>,
    #[arg(long, value_enum, default_value = "two")]
    sided: SidedArg,
    /// Uniform draws behind the LCM critical value.
    #[arg(long, default_value_t = 10_000)]
    lcm_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON-lines diagnostics; stderr when absent.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::SimulatePool(a) => simulate_pool(a),
        Command::Power(a) => power(a),
        Command::AnalyticCurves(a) => analytic_curves(a),
        Command::SizeBias(a) => size_bias(a),
        Command::Test(a) => test(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pcurve: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn output_dir(flag: Option<PathBuf>, from_config: Option<&str>) -> Result<PathBuf, CliError> {
    let dir = flag
        .or_else(|| from_config.map(PathBuf::from))
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn thread_pool(p: &Parallel) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(p.threads)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn sink(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn simulate_pool(a: SimulatePool) -> Result<(), CliError> {
    let cfg = config::load(&a.config)?;
    let reps = a.reps.unwrap_or(cfg.pool_reps);
    let out = match a.out {
        Some(p) => p,
        None => output_dir(a.output_dir, cfg.output_dir.as_deref())?
            .join(format!("pool{}.bin", &output::study_stem(&cfg)["power".len()..])),
    };
    let pool = thread_pool(&a.parallel)?.install(|| harness::simulate_pool(&cfg.dgp, cfg.strategy, reps, cfg.seed))?;
    pool_io::write(&pool_io::PoolFile::of(&pool), &out)?;
    eprintln!(
        "pcurve: {} entries ({} dropped) written to {}",
        pool.len(),
        pool.dropped,
        out.display()
    );
    Ok(())
}

fn power(a: Power) -> Result<(), CliError> {
    let mut cfg = config::load(&a.config)?;
    if let Some(m) = a.mc_reps {
        cfg.mc_reps = m;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if !(0.0..=1.0).contains(&a.max_failure_rate) {
        return Err(CliError::Config("--max-failure-rate must lie in [0, 1]".into()));
    }
    let pool = match &a.pool {
        Some(p) => Some(pool_io::read(p)?.into_pool(&cfg.dgp, cfg.strategy, p)?),
        None => None,
    };
    let dir = output_dir(a.output_dir, cfg.output_dir.as_deref())?;
    let run = thread_pool(&a.parallel)?.install(|| harness::run_power_study(&cfg, pool))?;
    let stem = output::study_stem(&cfg);
    let csv_path = dir.join(format!("{stem}.csv"));
    output::write_power_table(&run.table, sink(&csv_path)?)?;
    if a.plot {
        plot::write(&run.table, cfg.level, &dir.join(format!("{stem}.svg")))?;
    }
    eprintln!("pcurve: wrote {}", csv_path.display());
    let rate = run.qp_failure_rate(cfg.mc_reps);
    if rate > a.max_failure_rate {
        return Err(CliError::Budget(format!(
            "Cox-Shi QP failed in {:.1}% of replications in some cell (limit {:.1}%)",
            100.0 * rate,
            100.0 * a.max_failure_rate
        )));
    }
    Ok(())
}

fn arity(flag: &str, values: &[f64], n: usize) -> Result<(), CliError> {
    if values.len() == n {
        Ok(())
    } else {
        Err(CliError::Config(format!("--{flag} takes {n} comma-separated numbers")))
    }
}

fn effect(h: f64, gamma: Option<Vec<f64>>) -> Result<EffectDistribution, CliError> {
    match gamma {
        Some(g) => {
            arity("gamma-mixture", &g, 2)?;
            Ok(EffectDistribution::Gamma { alpha: g[0], beta: g[1] })
        }
        None => Ok(EffectDistribution::point(h)),
    }
}

fn analytic_curves(a: AnalyticCurves) -> Result<(), CliError> {
    let spec = CurveSpec {
        scenario: a.scenario.into(),
        strategies: a.strategies.iter().map(|&s| s.into()).collect(),
        effect: effect(a.h, a.gamma_mixture)?,
        alpha: a.model.alpha,
        rho: a.rho,
        k: a.k,
        kappa: a.model.kappa,
        n: a.model.n,
        law_draws: a.model.law_draws,
        seed: a.model.seed,
    };
    let points = curves::curve(&spec, a.step)?;
    output::write_rows(&points, sink(&a.out)?)?;
    if let Some(path) = &a.bins_out {
        let bins = curves::bin_masses(&spec, a.bin_width)?;
        output::write_rows(&bins, sink(path)?)?;
    }
    Ok(())
}

fn size_bias(a: SizeBias) -> Result<(), CliError> {
    let spec = DistortionSpec {
        scenarios: a.scenarios.iter().map(|&s| s.into()).collect(),
        alpha: a.model.alpha,
        h: a.h,
        rho: a.rho,
        gamma: a.gamma,
        n: a.model.n,
        kappa: a.model.kappa,
        law_draws: a.model.law_draws,
        seed: a.model.seed,
    };
    let reports = curves::distortions(&spec)?;
    output::write_distortions(&reports, sink(&a.out)?)
}

fn test(a: TestCmd) -> Result<(), CliError> {
    let pvalues = if a.input == Path::new("-") {
        output::read_pvalues(io::stdin().lock(), &a.input)?
    } else {
        let f = File::open(&a.input).map_err(|e| CliError::io(&a.input, e))?;
        output::read_pvalues(f, &a.input)?
    };
    arity("window", &a.window, 2)?;
    arity("binomial-bins", &a.binomial_bins, 4)?;
    let kinds = a
        .tests
        .iter()
        .map(|t| TestKind::from_name(t.trim()).ok_or_else(|| CliError::Config(format!("unknown test {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let window = HistogramSpec {
        lower: a.window[0],
        upper: a.window[1],
        bins: a.bins,
    };
    let b = &a.binomial_bins;
    let mut battery_cfg = BatteryConfig {
        kinds,
        window,
        binomial: BinomialBins {
            far: [b[0], b[1]],
            near: [b[2], b[3]],
        },
        lcm_crit_reps: a.lcm_reps,
        ..BatteryConfig::default()
    };
    battery_cfg.discontinuity.cutoff = a.cutoff;
    battery_cfg.discontinuity.bandwidth = a.bandwidth;
    let sided = match a.sided {
        SidedArg::One => Sided::One,
        SidedArg::Two => Sided::Two,
    };
    let battery = Battery::new(battery_cfg, sided)?;
    let mut cache = LcmCache::new(a.level, a.lcm_reps, a.seed);
    let results = battery.run(&pvalues, a.level, |n| cache.get(n))?;

    let mut diag: Box<dyn Write> = match &a.diagnostics {
        Some(p) => sink(p)?,
        None => Box::new(io::stderr().lock()),
    };
    let diag_err = |e: io::Error| CliError::Io {
        path: "<diagnostics>".into(),
        source: e,
    };
    let input = json!({
        "event": "input",
        "n_read": pvalues.len(),
        "n_window": pvalues.iter().filter(|&&p| window.contains(p)).count(),
        "window": [window.lower, window.upper],
        "bins": window.bins,
        "level": a.level,
    });
    writeln!(diag, "{input}").map_err(diag_err)?;
    for r in &results {
        let mut v = json!({ "event": "result" });
        v.as_object_mut()
            .unwrap()
            .extend(serde_json::to_value(r).expect("result serializes").as_object().unwrap().clone());
        let note = match r.kind {
            TestKind::Discontinuity => Some("local quadratic density fit with rule-of-thumb bandwidth"),
            TestKind::Csub | TestKind::Cs2b => Some("bounds from the sup over single effects conditional on the window"),
            _ => None,
        };
        if let Some(n) = note {
            v["method"] = json!(n);
        }
        writeln!(diag, "{v}").map_err(diag_err)?;
    }
    diag.flush().map_err(diag_err)?;
    output::write_test_results(&results, io::stdout().lock())
}
