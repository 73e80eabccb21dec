use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact Gibbs posterior on a finite parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteGibbs {
    pub weights: Vec<f64>,
    /// `∫ r dρ̂`.
    pub mean_risk: f64,
    /// `log Σ_i p_i e^{-λ r_i}`.
    pub log_normalizer: f64,
    /// `KL(ρ̂, π) = Σ_i w_i log(w_i / p_i)`.
    pub kl: f64,
}

impl FiniteGibbs {
    /// Posterior mean of the candidates.
    pub fn mean(&self, candidates: &[Vec<f64>]) -> Result<Vec<f64>> {
        if candidates.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: candidates.len(),
            });
        }
        let d = candidates.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; d];
        for (c, w) in candidates.iter().zip(&self.weights) {
            for (m, v) in mean.iter_mut().zip(c) {
                *m += w * v;
            }
        }
        Ok(mean)
    }
}

/// `w_i ∝ p_i e^{-λ r_i}`, normalized, computed after subtracting the
/// smallest active exponent.
pub fn gibbs_finite(risks: &[f64], lambda: f64, prior_weights: &[f64]) -> Result<FiniteGibbs> {
    if risks.len() != prior_weights.len() {
        return Err(Error::DimensionMismatch {
            expected: risks.len(),
            got: prior_weights.len(),
        });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("λ must be ≥ 0 and finite, got {lambda}")));
    }
    if let Some(r) = risks.iter().find(|r| !r.is_finite()) {
        return Err(Error::invalid(format!("risks must be finite, got {r}")));
    }
    if prior_weights.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::invalid("prior weights must be finite and ≥ 0"));
    }
    let mass: f64 = prior_weights.iter().sum();
    if mass <= 0.0 {
        return Err(Error::invalid("all prior weights are zero"));
    }
    if mass > 1.0 + 1e-9 {
        return Err(Error::invalid(format!("prior weights sum to {mass} > 1")));
    }
    let shift = risks
        .iter()
        .zip(prior_weights)
        .filter(|(_, p)| **p > 0.0)
        .map(|(r, _)| -lambda * r)
        .fold(f64::NEG_INFINITY, f64::max);
    let unnormalized: Vec<f64> = risks
        .iter()
        .zip(prior_weights)
        .map(|(r, p)| if *p > 0.0 { p * (-lambda * r - shift).exp() } else { 0.0 })
        .collect();
    let total: f64 = unnormalized.iter().sum();
    let weights: Vec<f64> = unnormalized.iter().map(|u| u / total).collect();
    let mean_risk = weights.iter().zip(risks).map(|(w, r)| w * r).sum();
    let kl = weights
        .iter()
        .zip(prior_weights)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, p)| w * (w / p).ln())
        .sum();
    Ok(FiniteGibbs {
        weights,
        mean_risk,
        log_normalizer: shift + total.ln(),
        kl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let g = gibbs_finite(&[0.3, 0.3], 2.7, &[0.5, 0.5]).unwrap();
        assert_eq!(g.weights, vec![0.5, 0.5]);
        let g = gibbs_finite(&[0.0, 3f64.ln()], 1.0, &[0.5, 0.5]).unwrap();
        assert!((g.weights[0] - 0.75).abs() < 1e-15);
        assert!((g.weights[1] - 0.25).abs() < 1e-15);
        let expected_kl = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
        assert!((g.kl - expected_kl).abs() < 1e-15);
        let g = gibbs_finite(&[0.1, 0.2], 1e6, &[0.5, 0.5]).unwrap();
        assert!(g.weights[0] >= 1.0 - 1e-6);
    }

    #[test]
    fn errors() {
        assert!(gibbs_finite(&[0.1, 0.2], 1.0, &[0.0, 0.0]).is_err());
        assert!(gibbs_finite(&[0.1], 1.0, &[0.5, 0.5]).is_err());
        assert!(gibbs_finite(&[f64::NAN], 1.0, &[1.0]).is_err());
    }

    #[test]
    fn no_overflow_at_huge_lambda() {
        let g = gibbs_finite(&[1000.0, 1001.0], 1e8, &[0.5, 0.5]).unwrap();
        assert_eq!(g.weights, vec![1.0, 0.0]);
        assert!((g.log_normalizer - (-1e11 + 0.5f64.ln())).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn shift_invariance(
            risks in proptest::collection::vec(0.0f64..5.0, 1..8),
            lambda in 0.0f64..20.0,
            c in -10.0f64..10.0,
        ) {
            let p = vec![1.0 / risks.len() as f64; risks.len()];
            let a = gibbs_finite(&risks, lambda, &p).unwrap();
            let shifted: Vec<f64> = risks.iter().map(|r| r + c).collect();
            let b = gibbs_finite(&shifted, lambda, &p).unwrap();
            for (x, y) in a.weights.iter().zip(&b.weights) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
