//! Rolling quantile forecasts of growth from its own lag and a climate
//! indicator, refitted at every test date on all earlier observations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::predictors::PredictorFamily;
use crate::risk::{minimize, Design, EmpiricalRisk, SolverConfig};
use crate::series::{lag_window, TimeSeries};

pub const DEFAULT_TAUS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];
pub const MIN_TRAINING_POINTS: usize = 10;

/// Published accuracy of the official flash estimates over the same period,
/// copied by hand; it cannot be recomputed from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub mean_abs_error: f64,
    pub mean_quad_error: f64,
}

pub fn insee_reference() -> ReferenceRow {
    ReferenceRow {
        label: "INSEE flash estimate (transcribed)".into(),
        mean_abs_error: 0.2579,
        mean_quad_error: 0.0967,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub taus: Vec<f64>,
    /// First target date (1-based) of every training window.
    pub learn_start: usize,
    /// Test dates `test_start..=test_end`, 1-based.
    pub test_start: usize,
    pub test_end: usize,
    pub radius: f64,
    /// Settings of the first fit for each τ; later dates warm-start from the
    /// previous date's estimate.
    pub solver: SolverConfig,
    /// Initial step (θ units) of the warm-started refits.
    pub warm_step: f64,
}

impl BacktestConfig {
    pub fn new(test_start: usize, test_end: usize) -> Self {
        Self {
            taus: DEFAULT_TAUS.to_vec(),
            learn_start: 3,
            test_start,
            test_end,
            radius: 100.0,
            solver: SolverConfig {
                certificate_grid: None,
                min_step: 1e-9,
                ..SolverConfig::default()
            },
            warm_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub tau: f64,
    /// Fraction of test dates with `actual ≤ forecast`.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub taus: Vec<f64>,
    pub dates: Vec<String>,
    pub actual: Vec<f64>,
    /// `forecasts[date][τ index]`, non-decreasing in τ.
    pub forecasts: Vec<Vec<f64>>,
    /// Dates at which the raw per-τ forecasts crossed and were re-sorted.
    pub crossings: usize,
    /// Median forecast errors; absent when 0.5 is not among the τ.
    pub mean_abs_error: Option<f64>,
    pub mean_quad_error: Option<f64>,
    pub coverage: Vec<Coverage>,
    pub reference: ReferenceRow,
}

impl BacktestReport {
    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

fn validate(series: &TimeSeries, config: &BacktestConfig) -> Result<()> {
    if series.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: series.dim(),
        });
    }
    if config.taus.is_empty() {
        return Err(Error::invalid("need at least one τ"));
    }
    if let Some(t) = config.taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::invalid(format!("τ must lie in (0, 1), got {t}")));
    }
    if config.taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("τ values must be strictly increasing"));
    }
    let n = series.len();
    if config.test_start > config.test_end || config.test_end > n || config.test_start == 0 {
        return Err(Error::OutOfRange(format!(
            "test range {}..={} outside 1..={n}",
            config.test_start, config.test_end
        )));
    }
    let first_target = config.learn_start.max(3);
    let available = config.test_start.saturating_sub(first_target);
    if available < MIN_TRAINING_POINTS {
        return Err(Error::invalid(format!(
            "first test date {} leaves {available} training points (< {MIN_TRAINING_POINTS})",
            config.test_start
        )));
    }
    Ok(())
}

/// Forecasts of one τ at every test date.
fn forecasts_for_tau(series: &TimeSeries, family: &PredictorFamily, tau: f64, config: &BacktestConfig) -> Result<Vec<f64>> {
    // ℓ_τ(actual, forecast) is the evaluation-convention quantile loss at 1 - τ
    let loss = LossSpec::quantile(1.0 - tau)?;
    let first_target = config.learn_start.max(3);
    let mut previous: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(config.test_end + 1 - config.test_start);
    for t in config.test_start..=config.test_end {
        let past = series.slice(0, t - 1)?;
        let risk = EmpiricalRisk::from_design(Design::starting_at(&past, family, first_target)?, loss)?;
        let solver = match &previous {
            Some(theta) => config.solver.warm(theta.clone(), config.warm_step),
            None => config.solver.clone(),
        };
        let fit = minimize(&risk, config.radius, &solver)?;
        let window = lag_window(series, t, 2)?;
        out.push(family.forecast(&fit.theta, &window)?[0]);
        previous = Some(fit.theta.into_inner());
    }
    Ok(out)
}

/// Runs the rolling quantile backtest on a two-column (growth, indicator)
/// series.
pub fn backtest_quantile(series: &TimeSeries, config: &BacktestConfig) -> Result<BacktestReport> {
    validate(series, config)?;
    let family = PredictorFamily::gdp_climate(config.radius)?;
    let per_tau: Vec<Vec<f64>> = config
        .taus
        .par_iter()
        .map(|&tau| forecasts_for_tau(series, &family, tau, config))
        .collect::<Result<_>>()?;

    let dates_range = config.test_start..=config.test_end;
    let mut forecasts = Vec::new();
    let mut crossings = 0;
    for i in 0..per_tau[0].len() {
        let mut row: Vec<f64> = per_tau.iter().map(|f| f[i]).collect();
        if row.windows(2).any(|w| w[0] > w[1]) {
            crossings += 1;
            row.sort_by(f64::total_cmp);
        }
        forecasts.push(row);
    }
    let actual: Vec<f64> = dates_range.clone().map(|t| series.row(t - 1)[0]).collect();
    let dates: Vec<String> = match series.row_labels() {
        Some(labels) => dates_range.map(|t| labels[t - 1].clone()).collect(),
        None => dates_range.map(|t| t.to_string()).collect(),
    };
    let m = actual.len() as f64;
    let coverage = config
        .taus
        .iter()
        .enumerate()
        .map(|(j, &tau)| Coverage {
            tau,
            frequency: forecasts.iter().zip(&actual).filter(|(f, a)| **a <= f[j]).count() as f64 / m,
        })
        .collect();
    let median = config.taus.iter().position(|t| (t - 0.5).abs() < 1e-12);
    let (mean_abs_error, mean_quad_error) = match median {
        Some(j) => {
            let errs: Vec<f64> = forecasts.iter().zip(&actual).map(|(f, a)| a - f[j]).collect();
            (
                Some(errs.iter().map(|e| e.abs()).sum::<f64>() / m),
                Some(errs.iter().map(|e| e * e).sum::<f64>() / m),
            )
        }
        None => (None, None),
    };
    Ok(BacktestReport {
        taus: config.taus.clone(),
        dates,
        actual,
        forecasts,
        crossings,
        mean_abs_error,
        mean_quad_error,
        coverage,
        reference: insee_reference(),
    })
}
