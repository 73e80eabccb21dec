//! `tsoracle` command-line interface.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tsoracle::bounds::{self, BoundInputs, ModelTerms, OracleBound, SparseSupport};
use tsoracle::gibbs::{default_lambda, gibbs_mcmc, gibbs_rjmcmc, GibbsConfig, PosteriorSample, Prior};
use tsoracle::harness::{backtest_quantile, fanchart_export, BacktestConfig, ExperimentTable};
use tsoracle::risk::{empirical_risk, erm_fit, SolverConfig};
use tsoracle::series::{self, GeneratorSpec, Innovation, Model, GAUSSIAN_SIGMA, UNIFORM_A};
use tsoracle::{Basis, LossSpec, PredictorFamily, TimeSeries};

#[derive(Parser)]
#[command(name = "tsoracle", version, about = "ERM and Gibbs forecasters for time series")]
struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 2013)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a series from one of the simulation models.
    Simulate(SimulateArgs),
    /// Fit an ERM or Gibbs estimator to a CSV series.
    Fit(FitArgs),
    /// Reproduce one of the simulation tables.
    Experiment(ExperimentArgs),
    /// Rolling quantile backtest on (growth, indicator) data.
    Backtest(BacktestArgs),
    /// Evaluate an oracle-inequality remainder.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SimModel {
    Ar1,
    Sinar1,
    Ar2,
    Sparse48,
    Cossin,
    /// Two-column growth/indicator stand-in.
    Gdp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Uniform,
    Gaussian,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: SimModel,
    #[arg(long, value_enum, default_value_t = Law::Uniform)]
    innovation: Law,
    /// Uniform half-width or Gaussian standard deviation.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, short)]
    n: usize,
    #[arg(long, default_value_t = series::DEFAULT_BURN_IN)]
    burn_in: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Ar,
    Dict,
    Gdp,
    Sparse,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossArg {
    Abs,
    Quad,
    Quantile,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Erm,
    Gibbs,
}

#[derive(Args)]
struct FitArgs {
    /// Headed CSV file; every column except --date-column is used.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    date_column: Option<String>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Ar)]
    family: FamilyArg,
    /// Window length k (largest lag for `sparse`).
    #[arg(long, default_value_t = 1)]
    lags: usize,
    /// Add an intercept to `ar`.
    #[arg(long)]
    intercept: bool,
    /// Active lags of `sparse`, e.g. `4,8`.
    #[arg(long, value_delimiter = ',')]
    support: Vec<usize>,
    /// Basis functions of `dict`, e.g. `const,lag1,sin1`.
    #[arg(long, value_delimiter = ',')]
    basis: Vec<String>,
    /// ℓ1 radius D of the parameter set.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, value_enum, default_value_t = LossArg::Quad)]
    loss: LossArg,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Erm)]
    estimator: EstimatorArg,
    /// Inverse temperature; defaults to n / empirical variance.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Steps per chain, burn-in included.
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    #[arg(long, default_value_t = 2_000)]
    burnin: usize,
    #[arg(long, default_value_t = 0.1)]
    proposal_scale: f64,
    #[arg(long, default_value_t = 10_000)]
    prior_draws: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=4))]
    table: u8,
    /// Defaults to 100 for table 3 and 20 for table 4.
    #[arg(long)]
    replications: Option<usize>,
}

#[derive(Args)]
struct BacktestArgs {
    /// Headed CSV with growth and indicator columns; a synthetic stand-in is
    /// used when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "gdp")]
    gdp_column: String,
    #[arg(long, default_value = "climate")]
    indicator_column: String,
    #[arg(long)]
    date_column: Option<String>,
    /// Length of the synthetic stand-in.
    #[arg(long, default_value_t = 95)]
    standin_length: usize,
    #[arg(long, default_value_t = 3)]
    learn_start: usize,
    /// First test date, 1-based; defaults to row 49.
    #[arg(long)]
    test_start: Option<usize>,
    /// Last test date, 1-based; defaults to the last row.
    #[arg(long)]
    test_end: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.25, 0.5, 0.75, 0.95])]
    taus: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    radius: f64,
    /// Also write the fan chart CSV here.
    #[arg(long)]
    fanchart: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Theorem {
    FiniteGibbs,
    FiniteErm,
    ParamGibbs,
    ParamErm,
    Select,
    Fast,
    Sparse,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum)]
    theorem: Theorem,
    #[arg(long, short)]
    n: usize,
    #[arg(long, short, default_value_t = 1)]
    k: usize,
    /// Loss Lipschitz constant K.
    #[arg(long, default_value_t = 1.0)]
    loss_lip: f64,
    /// Predictor Lipschitz budget L.
    #[arg(long, default_value_t = 1.0)]
    pred_lip: f64,
    /// Almost-sure bound B on the observations.
    #[arg(long, default_value_t = 1.0)]
    bound_b: f64,
    /// Weak-dependence (or φ-mixing) constant C.
    #[arg(long, default_value_t = 1.0)]
    dep_c: f64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of candidates M.
    #[arg(long)]
    candidates: Option<usize>,
    /// Dimension d.
    #[arg(long)]
    dim: Option<usize>,
    /// Diameter D.
    #[arg(long)]
    diameter: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    /// κ_j for `select`; defaults to κ computed from K, L, B, C.
    #[arg(long)]
    kappa_j: Option<f64>,
    /// Prior model weight p_j.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Excess risk of the model over the best one (fast rate).
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    /// Number of candidate lags p (sparse).
    #[arg(long)]
    p_lags: Option<usize>,
    /// Support sizes |J| to consider (sparse), e.g. `0,1,2`.
    #[arg(long, value_delimiter = ',')]
    support_sizes: Vec<usize>,
}

type CliResult<T> = Result<T, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let bytes = match &cli.command {
        Command::Simulate(a) => simulate(cli, a)?,
        Command::Fit(a) => fit(cli, a)?,
        Command::Experiment(a) => experiment(cli, a)?,
        Command::Backtest(a) => backtest(cli, a)?,
        Command::Bounds(a) => bound(cli, a)?,
    };
    match &cli.output {
        Some(path) => std::fs::write(path, bytes).map_err(err),
        None => io::stdout().write_all(&bytes).map_err(err),
    }
}

fn to_json(value: &impl serde::Serialize) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(err)?;
    out.push(b'\n');
    Ok(out)
}

/// Flat `key,value` CSV for scalar reports; vectors are `;`-joined.
fn to_key_value_csv(value: &Value) -> Vec<u8> {
    let mut out = String::from("key,value\n");
    if let Value::Object(map) = value {
        for (k, v) in map {
            let cell = match v {
                Value::Array(items) => items.iter().map(Value::to_string).collect::<Vec<_>>().join(";"),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k},{cell}\n"));
        }
    }
    out.into_bytes()
}

fn emit(cli: &Cli, value: Value) -> CliResult<Vec<u8>> {
    match cli.format {
        Format::Json => to_json(&value),
        Format::Csv => Ok(to_key_value_csv(&value)),
    }
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> CliResult<Vec<u8>> {
    let series = match a.model {
        SimModel::Gdp => series::gdp_standin(a.n, cli.seed).map_err(err)?,
        m => {
            let model = match m {
                SimModel::Ar1 => Model::Ar1,
                SimModel::Sinar1 => Model::SinAr1,
                SimModel::Ar2 => Model::Ar2,
                SimModel::Sparse48 => Model::Sparse48,
                _ => Model::CosSin,
            };
            let innovation = match a.innovation {
                Law::Uniform => Innovation::Uniform {
                    a: a.scale.unwrap_or(UNIFORM_A),
                },
                Law::Gaussian => Innovation::Gaussian {
                    sigma: a.scale.unwrap_or(GAUSSIAN_SIGMA),
                },
            };
            let spec = GeneratorSpec {
                burn_in: a.burn_in,
                ..GeneratorSpec::new(model, innovation, a.n, cli.seed)
            };
            series::generate(&spec)
                .and_then(|s| s.with_labels(vec!["x".into()]))
                .map_err(err)?
        }
    };
    match cli.format {
        Format::Csv => {
            let mut out = Vec::new();
            series::save_csv(&series, &mut out).map_err(err)?;
            Ok(out)
        }
        Format::Json => {
            let columns = series::column_names(&series);
            let mut map = serde_json::Map::new();
            for (j, name) in columns.iter().enumerate() {
                map.insert(name.clone(), json!(series.column(j)));
            }
            to_json(&Value::Object(map))
        }
    }
}

fn read_series(path: &PathBuf, date_column: Option<&str>) -> CliResult<TimeSeries> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    series::load_csv_all(BufReader::new(file), date_column).map_err(err)
}

fn build_family(a: &FitArgs) -> CliResult<PredictorFamily> {
    match a.family {
        FamilyArg::Ar => PredictorFamily::linear_ar(a.lags, a.intercept, a.radius),
        FamilyArg::Gdp => PredictorFamily::gdp_climate(a.radius),
        FamilyArg::Sparse => PredictorFamily::sparse_ar(a.lags, a.support.clone(), a.radius),
        FamilyArg::Dict => {
            let basis = a
                .basis
                .iter()
                .map(|name| Basis::named(name))
                .collect::<tsoracle::Result<Vec<_>>>()
                .map_err(err)?;
            PredictorFamily::dictionary(a.lags, basis, a.radius)
        }
    }
    .map_err(err)
}

fn fit(cli: &Cli, a: &FitArgs) -> CliResult<Vec<u8>> {
    let series = read_series(&a.input, a.date_column.as_deref())?;
    let family = build_family(a)?;
    let loss = match a.loss {
        LossArg::Abs => LossSpec::Absolute,
        LossArg::Quad => LossSpec::Quadratic,
        LossArg::Quantile => LossSpec::quantile(a.tau).map_err(err)?,
    };
    let mut out = serde_json::Map::new();
    out.insert("family".into(), json!(family.name()));
    out.insert("loss".into(), json!(loss.name()));
    out.insert("estimator".into(), json!(if a.estimator == EstimatorArg::Erm { "erm" } else { "gibbs" }));
    let theta = match a.estimator {
        EstimatorArg::Erm => erm_fit(&series, &family, loss, &SolverConfig::default()).map_err(err)?.theta,
        EstimatorArg::Gibbs => {
            let lambda = match a.lambda {
                Some(l) => l,
                None => default_lambda(&series).map_err(err)?,
            };
            let config = GibbsConfig {
                lambda,
                chain_length: a.length,
                burn_in: a.burnin,
                proposal_scale: a.proposal_scale,
                seed: cli.seed,
                chains: a.chains,
                prior_draws: a.prior_draws,
                adapt: true,
            };
            let sample = if a.family == FamilyArg::Sparse && a.support.is_empty() {
                // no fixed support: sample supports over lags 1..=k
                gibbs_rjmcmc(&series, a.lags, a.radius, loss, &config).map_err(err)?
            } else {
                let prior = Prior::BallUniform {
                    dim: family.dim(),
                    radius: a.radius,
                };
                gibbs_mcmc(&series, &family, &prior, loss, &config).map_err(err)?
            };
            insert_gibbs(&mut out, lambda, &sample);
            if a.family == FamilyArg::Sparse && a.support.is_empty() {
                // θ̂ is a full lag vector; report the risk of the dense family
                let dense = PredictorFamily::linear_ar(a.lags, false, a.radius).map_err(err)?;
                let report = empirical_risk(&series, &dense, &sample.theta_hat, loss).map_err(err)?;
                let inclusion: Vec<Option<f64>> = (1..=a.lags).map(|j| sample.inclusion_probability(j)).collect();
                out.insert("family".into(), json!(format!("sparse(lags 1..={}, sampled support)", a.lags)));
                out.insert("inclusion_probability".into(), json!(inclusion));
                out.insert("theta".into(), json!(sample.theta_hat));
                out.insert("empirical_risk".into(), json!(report.empirical_risk));
                out.insert("n_effective".into(), json!(report.n_effective));
                return emit(cli, Value::Object(out));
            }
            sample.theta_hat
        }
    };
    let report = empirical_risk(&series, &family, &theta, loss).map_err(err)?;
    out.insert("theta".into(), json!(theta));
    out.insert("empirical_risk".into(), json!(report.empirical_risk));
    out.insert("n_effective".into(), json!(report.n_effective));
    emit(cli, Value::Object(out))
}

fn insert_gibbs(out: &mut serde_json::Map<String, Value>, lambda: f64, s: &PosteriorSample) {
    out.insert("lambda".into(), json!(lambda));
    out.insert("acceptance_rate".into(), json!(s.acceptance_rate));
    out.insert("kl_estimate".into(), json!(s.kl_estimate));
    out.insert("kl_std_error".into(), json!(s.kl_std_error));
    out.insert("log_Z".into(), json!(s.log_z));
    out.insert("mean_emp_risk".into(), json!(s.mean_emp_risk));
    if !s.warnings.is_empty() {
        out.insert("warnings".into(), json!(s.warnings));
    }
}

fn experiment(cli: &Cli, a: &ExperimentArgs) -> CliResult<Vec<u8>> {
    let table = if a.table == 3 {
        ExperimentTable::run_table3(a.replications.unwrap_or(100), cli.seed)
    } else {
        ExperimentTable::run_table4(a.replications.unwrap_or(20), cli.seed)
    }
    .map_err(err)?;
    match cli.format {
        Format::Json => to_json(&table),
        Format::Csv => {
            let mut out = Vec::new();
            table.write_csv(&mut out).map_err(err)?;
            Ok(out)
        }
    }
}

fn backtest(cli: &Cli, a: &BacktestArgs) -> CliResult<Vec<u8>> {
    let series = match &a.input {
        Some(path) => {
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut schema = series::CsvSchema::new([a.gdp_column.clone(), a.indicator_column.clone()]);
            if let Some(d) = &a.date_column {
                schema = schema.with_date_column(d.clone());
            }
            series::load_csv(BufReader::new(file), &schema).map_err(err)?
        }
        None => series::gdp_standin(a.standin_length, cli.seed).map_err(err)?,
    };
    let mut config = BacktestConfig::new(a.test_start.unwrap_or(49), a.test_end.unwrap_or(series.len()));
    config.taus = a.taus.clone();
    config.learn_start = a.learn_start;
    config.radius = a.radius;
    let report = backtest_quantile(&series, &config).map_err(err)?;
    if let Some(path) = &a.fanchart {
        let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        fanchart_export(&report, file).map_err(err)?;
    }
    match cli.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut out = String::from("tau,frequency\n");
            for c in &report.coverage {
                out.push_str(&format!("{},{}\n", c.tau, c.frequency));
            }
            Ok(out.into_bytes())
        }
    }
}

fn bound(cli: &Cli, a: &BoundsArgs) -> CliResult<Vec<u8>> {
    let mut inputs = BoundInputs::new(a.n, a.k, a.loss_lip, a.pred_lip, a.bound_b, a.dep_c, a.epsilon);
    inputs.lambda = a.lambda;
    inputs.candidates = a.candidates;
    inputs.dim = a.dim;
    inputs.diameter = a.diameter;
    inputs.psi = a.psi;
    let terms = || -> CliResult<ModelTerms> {
        let dim = a.dim.ok_or("--dim is required")?;
        let diameter = a.diameter.ok_or("--diameter is required")?;
        Ok(ModelTerms {
            dim,
            diameter,
            weight: a.weight,
            gap: a.gap,
        })
    };
    let result: OracleBound = match a.theorem {
        Theorem::FiniteGibbs => bounds::slow_bound_finite_gibbs(&inputs).map_err(err)?,
        Theorem::FiniteErm => bounds::slow_bound_finite_erm(&inputs).map_err(err)?,
        Theorem::ParamGibbs => bounds::slow_bound_parametric_gibbs(&inputs).map_err(err)?,
        Theorem::ParamErm => bounds::slow_bound_parametric_erm(&inputs).map_err(err)?,
        Theorem::Select => {
            let kappa = match a.kappa_j {
                Some(k) => k,
                None => bounds::kappa(&inputs).map_err(err)?,
            };
            bounds::model_selection_bound(&inputs, kappa, &terms()?).map_err(err)?
        }
        Theorem::Fast => bounds::fast_bound(&inputs, &[terms()?]).map_err(err)?,
        Theorem::Sparse => {
            let p = a.p_lags.ok_or("--p-lags is required")?;
            let sizes: Vec<usize> = if a.support_sizes.is_empty() { (0..=p).collect() } else { a.support_sizes.clone() };
            let supports: Vec<SparseSupport> = sizes.iter().map(|&size| SparseSupport { size, gap: a.gap }).collect();
            bounds::sparse_bound(&inputs, p, &supports).map_err(err)?
        }
    };
    emit(
        cli,
        json!({
            "delta": result.delta,
            "lambda": result.lambda_used,
            "theorem": result.theorem_tag,
            "regime": result.regime,
        }),
    )
}
