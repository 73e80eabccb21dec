//! Replicated simulation studies: one-step prediction with ERM estimators
//! (single held-out point) and sparse autoregression with a Gibbs estimator
//! (held-out second half).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aic::{aic_select, ar_forecast, cls_fit};
use crate::error::{Error, Result};
use crate::gibbs::{default_lambda, gibbs_rjmcmc, GibbsConfig};
use crate::losses::LossSpec;
use crate::predictors::PredictorFamily;
use crate::risk::{erm_fit, SolverConfig};
use crate::rng::replication_seed;
use crate::series::{generate, GeneratorSpec, Innovation, Model, TimeSeries, GAUSSIAN_SIGMA, UNIFORM_A};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// ERM, absolute loss, AR(1) with intercept.
    ErmAbs,
    /// ERM, quadratic loss, AR(1) with intercept.
    ErmQuad,
    /// Gibbs estimator over sparse AR(q) supports, sampled by reversible jumps.
    GibbsSparse,
    /// Least-squares AR(p) with `p ≤ q` chosen by AIC.
    Aic,
    /// Least-squares AR of the full order (1 for the one-step study, `q` for
    /// the sparse one).
    FullLs,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::ErmAbs => "erm_abs",
            Estimator::ErmQuad => "erm_quad",
            Estimator::GibbsSparse => "gibbs_sparse",
            Estimator::Aic => "aic",
            Estimator::FullLs => "full_ls",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Model and innovation law; `n` and `seed` are set per replication.
    pub generator: GeneratorSpec,
    pub estimators: Vec<Estimator>,
    /// Nominal sample size: the series length of the one-step study, the
    /// training length of the sparse one.
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub replications: usize,
    pub seed: u64,
    /// Largest lag `q` considered by the sparse study.
    pub max_lag: usize,
    /// ℓ1 radius of the ERM parameter set.
    pub erm_radius: f64,
    /// ℓ1 radius `L` of the sparse prior.
    pub sparse_radius: f64,
    pub chain_length: usize,
    pub burn_in: usize,
}

impl ExperimentSpec {
    /// One-step study: fit on `n-1` points, predict the `n`-th.
    pub fn parametric(model: Model, innovation: Innovation, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            generator: GeneratorSpec::new(model, innovation, n, seed),
            estimators: vec![Estimator::ErmAbs, Estimator::ErmQuad, Estimator::FullLs],
            n,
            n_train: n - 1,
            n_test: 1,
            replications,
            seed,
            max_lag: 1,
            erm_radius: 10.0,
            sparse_radius: 1.0,
            chain_length: 0,
            burn_in: 0,
        }
    }

    /// Sparse study: train on `n` points, test on the next `n`.
    pub fn sparse(model: Model, innovation: Innovation, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            generator: GeneratorSpec::new(model, innovation, 2 * n, seed),
            estimators: vec![Estimator::GibbsSparse, Estimator::Aic, Estimator::FullLs],
            n,
            n_train: n,
            n_test: n,
            replications,
            seed,
            max_lag: 10,
            erm_radius: 10.0,
            sparse_radius: 1.0,
            chain_length: 10_000,
            burn_in: 2_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("need at least one replication"));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("need at least one estimator"));
        }
        if self.n_train <= self.max_lag + 1 {
            return Err(Error::invalid(format!(
                "n_train = {} must exceed max lag + 1 = {}",
                self.n_train,
                self.max_lag + 1
            )));
        }
        if self.n_test == 0 {
            return Err(Error::invalid("need at least one test point"));
        }
        Ok(())
    }

    fn generate(&self, replication: usize) -> Result<TimeSeries> {
        let spec = GeneratorSpec {
            n: self.n_train + self.n_test,
            seed: replication_seed(self.seed, replication),
            ..self.generator
        };
        generate(&spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub mean: f64,
    /// Sample standard deviation (divisor `r - 1`) over retained replications.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub model: Model,
    pub innovation: Innovation,
    pub n: usize,
    pub summaries: Vec<EstimatorSummary>,
    /// Per retained replication, errors in estimator order.
    pub errors: Vec<Vec<f64>>,
    /// Replications dropped because an estimator failed.
    pub failures: Vec<ReplicationFailure>,
}

impl ExperimentResult {
    pub fn summary(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }

    /// Fraction of retained replications with `error(a) ≤ error(b)`.
    pub fn fraction_not_worse(&self, a: Estimator, b: Estimator) -> Option<f64> {
        let ia = self.summaries.iter().position(|s| s.estimator == a)?;
        let ib = self.summaries.iter().position(|s| s.estimator == b)?;
        if self.errors.is_empty() {
            return None;
        }
        let hits = self.errors.iter().filter(|e| e[ia] <= e[ib]).count();
        Some(hits as f64 / self.errors.len() as f64)
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

fn collect(spec: &ExperimentSpec, outcomes: Vec<Result<Vec<f64>>>) -> Result<ExperimentResult> {
    let mut errors = Vec::new();
    let mut failures = Vec::new();
    for (replication, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(e) => errors.push(e),
            Err(err) => failures.push(ReplicationFailure {
                replication,
                message: err.to_string(),
            }),
        }
    }
    if errors.is_empty() {
        return Err(Error::Degenerate(format!(
            "all {} replications failed; first: {}",
            failures.len(),
            failures[0].message
        )));
    }
    let summaries = spec
        .estimators
        .iter()
        .enumerate()
        .map(|(i, &estimator)| {
            let column: Vec<f64> = errors.iter().map(|e| e[i]).collect();
            let (mean, sd) = mean_sd(&column);
            EstimatorSummary { estimator, mean, sd }
        })
        .collect();
    Ok(ExperimentResult {
        model: spec.generator.model,
        innovation: spec.generator.innovation,
        n: spec.n,
        summaries,
        errors,
        failures,
    })
}

fn parametric_replication(spec: &ExperimentSpec, replication: usize) -> Result<Vec<f64>> {
    let series = spec.generate(replication)?;
    let n = series.len();
    let train = series.slice(0, n - 1)?;
    let actual = series.row(n - 1)[0];
    let last = [series.row(n - 2)];
    let family = PredictorFamily::linear_ar(1, true, spec.erm_radius)?;
    spec.estimators
        .iter()
        .map(|e| {
            let forecast = match e {
                Estimator::ErmAbs | Estimator::ErmQuad => {
                    let loss = if *e == Estimator::ErmAbs { LossSpec::Absolute } else { LossSpec::Quadratic };
                    let fit = erm_fit(&train, &family, loss, &SolverConfig::default())?;
                    family.forecast(&fit.theta, &last)?[0]
                }
                Estimator::FullLs => {
                    let fit = cls_fit(&train, 1, 2)?;
                    ar_forecast(&fit.coefficients, series.as_flat(), n)
                }
                Estimator::Aic => {
                    let sel = aic_select(&train, spec.max_lag)?;
                    ar_forecast(&sel.fit.coefficients, series.as_flat(), n)
                }
                Estimator::GibbsSparse => {
                    return Err(Error::invalid("the one-step study has no Gibbs estimator"))
                }
            };
            Ok((forecast - actual).powi(2))
        })
        .collect()
}

/// Fits every estimator on `X_1..X_{n-1}` and records `(X̂_n - X_n)²`.
pub fn run_parametric_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    if spec.n_test != 1 {
        return Err(Error::invalid("the one-step study predicts exactly one point"));
    }
    let outcomes: Vec<Result<Vec<f64>>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| parametric_replication(spec, r))
        .collect();
    collect(spec, outcomes)
}

/// Mean squared one-step error over targets `from..=to` (1-based).
fn test_error(values: &[f64], from: usize, to: usize, forecast: impl Fn(usize) -> f64) -> f64 {
    let total: f64 = (from..=to).map(|t| (forecast(t) - values[t - 1]).powi(2)).sum();
    total / (to + 1 - from) as f64
}

fn sparse_replication(spec: &ExperimentSpec, replication: usize) -> Result<Vec<f64>> {
    let series = spec.generate(replication)?;
    let values = series.as_flat();
    let (n, total) = (spec.n_train, series.len());
    let q = spec.max_lag;
    let train = series.slice(0, n)?;
    let lagged = |coefs: &[f64], t: usize| -> f64 { coefs.iter().enumerate().map(|(j, c)| c * values[t - 2 - j]).sum() };
    spec.estimators
        .iter()
        .map(|e| match e {
            Estimator::GibbsSparse => {
                let config = GibbsConfig {
                    lambda: default_lambda(&train)?,
                    chain_length: spec.chain_length,
                    burn_in: spec.burn_in,
                    proposal_scale: 0.1,
                    seed: replication_seed(spec.seed, replication),
                    chains: 1,
                    prior_draws: 1,
                    adapt: true,
                };
                let post = gibbs_rjmcmc(&train, q, spec.sparse_radius, LossSpec::Quadratic, &config)?;
                Ok(test_error(values, n + 1, total, |t| lagged(&post.theta_hat, t)))
            }
            Estimator::Aic => {
                let sel = aic_select(&train, q)?;
                Ok(test_error(values, n + 1, total, |t| ar_forecast(&sel.fit.coefficients, values, t)))
            }
            Estimator::FullLs => {
                let fit = cls_fit(&train, q, q + 1)?;
                Ok(test_error(values, n + 1, total, |t| ar_forecast(&fit.coefficients, values, t)))
            }
            Estimator::ErmAbs | Estimator::ErmQuad => {
                let loss = if *e == Estimator::ErmAbs { LossSpec::Absolute } else { LossSpec::Quadratic };
                let family = PredictorFamily::linear_ar(q, true, spec.erm_radius)?;
                let fit = erm_fit(&train, &family, loss, &SolverConfig::default())?;
                Ok(test_error(values, n + 1, total, |t| {
                    fit.theta[0] + lagged(&fit.theta[1..], t)
                }))
            }
        })
        .collect()
}

/// Trains on `X_1..X_n`, reports the mean squared one-step error on
/// `X_{n+1}..X_{2n}`.
pub fn run_sparse_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let outcomes: Vec<Result<Vec<f64>>> = (0..spec.replications)
        .into_par_iter()
        .map(|r| sparse_replication(spec, r))
        .collect();
    collect(spec, outcomes)
}

fn innovations() -> [Innovation; 2] {
    [Innovation::Gaussian { sigma: GAUSSIAN_SIGMA }, Innovation::Uniform { a: UNIFORM_A }]
}

/// The eight one-step configurations: n ∈ {100, 1000} × {AR1, SinAR1} ×
/// {Gaussian, uniform}.
pub fn table3_specs(replications: usize, seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for n in [100, 1000] {
        for model in [Model::Ar1, Model::SinAr1] {
            for innovation in innovations() {
                specs.push(ExperimentSpec::parametric(model, innovation, n, replications, seed));
            }
        }
    }
    specs
}

/// The twelve sparse configurations: n ∈ {100, 1000} × {AR2, Sparse48,
/// CosSin} × {uniform, Gaussian}.
pub fn table4_specs(replications: usize, seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    for n in [100, 1000] {
        for model in [Model::Ar2, Model::Sparse48, Model::CosSin] {
            for innovation in [Innovation::Uniform { a: UNIFORM_A }, Innovation::Gaussian { sigma: GAUSSIAN_SIGMA }] {
                specs.push(ExperimentSpec::sparse(model, innovation, n, replications, seed));
            }
        }
    }
    specs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentResult>,
}

impl ExperimentTable {
    pub fn run_table3(replications: usize, seed: u64) -> Result<Self> {
        let rows = table3_specs(replications, seed)
            .iter()
            .map(run_parametric_experiment)
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn run_table4(replications: usize, seed: u64) -> Result<Self> {
        let rows = table4_specs(replications, seed)
            .iter()
            .map(run_sparse_experiment)
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    pub fn find(&self, model: Model, innovation: &str, n: usize) -> Option<&ExperimentResult> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.innovation.name() == innovation && r.n == n)
    }

    /// One row per (configuration, estimator).
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["n", "model", "innovation", "estimator", "mean", "sd", "replications", "failures"])?;
        for row in &self.rows {
            for s in &row.summaries {
                w.write_record([
                    row.n.to_string(),
                    row.model.name().to_string(),
                    row.innovation.name().to_string(),
                    s.estimator.name().to_string(),
                    format!("{:.6}", s.mean),
                    format!("{:.6}", s.sd),
                    row.errors.len().to_string(),
                    row.failures.len().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
