use serde::{Deserialize, Serialize};

use super::mcmc::{metropolis_ball, GibbsConfig, PosteriorSample};
use crate::bounds::{model_selection_lambda, BoundInputs, ModelTerms};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::predictors::PredictorFamily;
use crate::risk::{Design, EmpiricalRisk};
use crate::series::TimeSeries;

/// One entry of the model list: a family with a uniform prior on its ℓ1
/// ball, prior model weight `p_j`, and the user-supplied constants `κ_j`
/// and `D_j`.
#[derive(Debug, Clone)]
pub struct ModelCandidate {
    pub family: PredictorFamily,
    /// Radius of the ball-uniform prior; usually `D + 1`.
    pub prior_radius: f64,
    pub weight: f64,
    pub kappa: f64,
    pub diameter: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    /// 0-based index of the selected model.
    pub index: usize,
    pub criteria: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub posterior: PosteriorSample,
}

/// Fits the Gibbs estimator of every model at its own `λ_j` and keeps the
/// one minimizing `∫ r dρ̂_j + λ_j κ_j/(n(1-k/n)²) + (KL(ρ̂_j, π_j) + log(2/(ε p_j)))/λ_j`.
///
/// All models are scored on the same prediction steps, starting after the
/// longest lag window `k`, and `k` in the formulas is that longest window.
/// Ties go to the earliest model.
pub fn select_model(
    series: &TimeSeries,
    models: &[ModelCandidate],
    loss: LossSpec,
    epsilon: f64,
    config: &GibbsConfig,
) -> Result<Selection> {
    if models.is_empty() {
        return Err(Error::invalid("need at least one model"));
    }
    let total: f64 = models.iter().map(|m| m.weight).sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::invalid(format!("model weights sum to {total} > 1")));
    }
    if let Some(m) = models.iter().find(|m| !(m.kappa > 0.0)) {
        return Err(Error::invalid(format!("κ_j must be > 0, got {}", m.kappa)));
    }
    let k = models.iter().map(|m| m.family.lags()).max().unwrap_or(0);
    let n = series.len();
    let eff = n as f64 * (1.0 - k as f64 / n as f64).powi(2);

    let mut criteria = Vec::with_capacity(models.len());
    let mut lambdas = Vec::with_capacity(models.len());
    let mut best: Option<(usize, PosteriorSample)> = None;
    for (j, m) in models.iter().enumerate() {
        let inputs = BoundInputs::new(n, k, 1.0, 0.0, 1.0, 1.0, epsilon);
        let terms = ModelTerms::new(m.family.dim(), m.diameter, m.weight);
        let lambda = model_selection_lambda(&inputs, m.kappa, &terms)?;
        let risk = EmpiricalRisk::from_design(Design::starting_at(series, &m.family, k + 1)?, loss)?;
        let cfg = GibbsConfig {
            lambda,
            ..config.clone()
        };
        let sample = metropolis_ball(|t: &[f64]| risk.value(t), m.family.dim(), m.prior_radius, &cfg)?;
        let criterion = sample.mean_emp_risk
            + lambda * m.kappa / eff
            + (sample.kl_estimate + (2.0 / (epsilon * m.weight)).ln()) / lambda;
        let improves = best
            .as_ref()
            .map_or(true, |(i, _)| criterion < criteria[*i]);
        criteria.push(criterion);
        lambdas.push(lambda);
        if improves {
            best = Some((j, sample));
        }
    }
    let (index, posterior) = best.expect("at least one model");
    Ok(Selection {
        index,
        criteria,
        lambdas,
        posterior,
    })
}
