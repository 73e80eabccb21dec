use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{empirical_variance, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    pub kl: f64,
    pub log_z: f64,
    /// Monte-Carlo standard error of `log_z` (delta method), which is also
    /// the error `kl` inherits from the prior draws.
    pub std_error: f64,
}

/// `KL(ρ̂_λ, π) = -λ ∫ r dρ̂ - log ∫ e^{-λ r} dπ`, the second integral
/// estimated from risks at independent prior draws.
pub fn estimate_kl(mean_emp_risk: f64, lambda: f64, prior_draw_risks: &[f64]) -> Result<KlEstimate> {
    if prior_draw_risks.is_empty() {
        return Err(Error::invalid("need at least one prior draw"));
    }
    if lambda == 0.0 {
        return Ok(KlEstimate {
            kl: 0.0,
            log_z: 0.0,
            std_error: 0.0,
        });
    }
    let s = prior_draw_risks.len() as f64;
    let shift = prior_draw_risks
        .iter()
        .map(|r| -lambda * r)
        .fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = prior_draw_risks.iter().map(|r| (-lambda * r - shift).exp()).collect();
    let mean = terms.iter().sum::<f64>() / s;
    let log_z = shift + mean.ln();
    let std_error = if terms.len() > 1 {
        let var = terms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (s - 1.0);
        (var / s).sqrt() / mean
    } else {
        f64::INFINITY
    };
    Ok(KlEstimate {
        kl: -lambda * mean_emp_risk - log_z,
        log_z,
        std_error,
    })
}

/// `λ = n / var̂(X)`.
pub fn default_lambda(series: &TimeSeries) -> Result<f64> {
    let var = empirical_variance(series)?;
    if var <= 0.0 {
        return Err(Error::Degenerate("series has zero empirical variance".into()));
    }
    Ok(series.len() as f64 / var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let ln3 = 3f64.ln();
        // posterior (3/4, 1/4) on risks (0, ln 3); prior draws cover both points equally
        let mean_risk = 0.25 * ln3;
        let k = estimate_kl(mean_risk, 1.0, &[0.0, ln3, 0.0, ln3]).unwrap();
        let oracle = 0.75 * (0.75f64 / 0.5).ln() + 0.25 * (0.25f64 / 0.5).ln();
        assert!((k.kl - oracle).abs() < 1e-14);
        assert!((k.kl - 0.1308).abs() < 1e-4);
    }

    #[test]
    fn zero_lambda_is_exactly_zero() {
        assert_eq!(estimate_kl(0.7, 0.0, &[0.1, 5.0]).unwrap().kl, 0.0);
        assert!(estimate_kl(0.7, 1.0, &[]).is_err());
    }

    #[test]
    fn default_lambda_examples() {
        // 100 alternating ±0.5 values have variance 0.25
        let s = TimeSeries::from_scalars((0..100).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect()).unwrap();
        assert!((default_lambda(&s).unwrap() - 400.0).abs() < 1e-9);
        let c = TimeSeries::from_scalars(vec![2.0; 10]).unwrap();
        assert!(default_lambda(&c).is_err());
    }
}
