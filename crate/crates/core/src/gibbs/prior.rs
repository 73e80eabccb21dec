use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::ParamVector;
use crate::rng::uniform_l1_ball;

/// Prior π on the parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    FiniteUniform { candidates: Vec<ParamVector> },
    /// Uniform on `{θ ∈ ℝ^d : ‖θ‖₁ ≤ radius}`.
    BallUniform { dim: usize, radius: f64 },
    /// Mixture over lag supports `J ⊆ {1..p}` of uniform laws on
    /// `{θ_J : ‖θ_J‖₁ ≤ radius}` with weights `2^{-|J|-1} / C(p, |J|)`.
    SparseMixture { p_lags: usize, radius: f64 },
}

/// `p_J = 2^{-s-1} / C(p, s)` for a support of size `s`.
pub fn sparse_prior_weight(p_lags: usize, size: usize) -> f64 {
    (-(size as f64 + 1.0) * std::f64::consts::LN_2 - ln_choose(p_lags, size)).exp()
}

pub(crate) fn ln_choose(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `ln Vol{θ ∈ ℝ^s : ‖θ‖₁ ≤ L} = s ln(2L) - ln s!`.
pub(crate) fn ln_ball_volume(size: usize, radius: f64) -> f64 {
    let ln_fact: f64 = (1..=size).map(|i| (i as f64).ln()).sum();
    size as f64 * (2.0 * radius).ln() - ln_fact
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        match self {
            Prior::FiniteUniform { candidates } => {
                let first = candidates.first().ok_or_else(|| Error::invalid("finite prior needs candidates"))?;
                if let Some(c) = candidates.iter().find(|c| c.len() != first.len()) {
                    return Err(Error::DimensionMismatch {
                        expected: first.len(),
                        got: c.len(),
                    });
                }
            }
            Prior::BallUniform { radius, .. } | Prior::SparseMixture { radius, .. } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::invalid(format!("prior radius must be > 0, got {radius}")));
                }
            }
        }
        if let Prior::SparseMixture { p_lags, .. } = self {
            if *p_lags == 0 || *p_lags > 64 {
                return Err(Error::invalid(format!("p_lags must lie in 1..=64, got {p_lags}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::FiniteUniform { candidates } => candidates.first().map_or(0, |c| c.len()),
            Prior::BallUniform { dim, .. } => *dim,
            Prior::SparseMixture { p_lags, .. } => *p_lags,
        }
    }

    /// Total mass: 1, except `1 - 2^{-(p+1)}` for the sparse mixture, whose
    /// weights are used as given rather than renormalized.
    pub fn total_mass(&self) -> f64 {
        match self {
            Prior::SparseMixture { p_lags, .. } => 1.0 - 0.5f64.powi(*p_lags as i32 + 1),
            _ => 1.0,
        }
    }

    /// Per-candidate weights of the finite prior.
    pub fn finite_weights(&self) -> Option<Vec<f64>> {
        match self {
            Prior::FiniteUniform { candidates } => {
                Some(vec![1.0 / candidates.len() as f64; candidates.len()])
            }
            _ => None,
        }
    }

    /// Draws from the prior normalized to a probability measure, as a full
    /// `dim()`-vector (zeros off the support for the sparse mixture).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Prior::FiniteUniform { candidates } => {
                out.copy_from_slice(&candidates[rng.gen_range(0..candidates.len())]);
            }
            Prior::BallUniform { dim, radius } => uniform_l1_ball(rng, *dim, *radius, out),
            Prior::SparseMixture { p_lags, radius } => {
                let p = *p_lags;
                // size s has probability 2^{-s-1} / mass
                let u: f64 = rng.gen::<f64>() * self.total_mass();
                let mut acc = 0.0;
                let mut size = p;
                for s in 0..=p {
                    acc += 0.5f64.powi(s as i32 + 1);
                    if u < acc {
                        size = s;
                        break;
                    }
                }
                out.iter_mut().for_each(|v| *v = 0.0);
                // uniform subset of the given size (partial Fisher-Yates)
                let mut lags: Vec<usize> = (0..p).collect();
                for i in 0..size {
                    let j = rng.gen_range(i..p);
                    lags.swap(i, j);
                }
                let mut coords = vec![0.0; size];
                uniform_l1_ball(rng, size, *radius, &mut coords);
                for (&lag, v) in lags[..size].iter().zip(coords) {
                    out[lag] = v;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn sparse_weights_sum_below_one() {
        for p in 1..=12 {
            let total: f64 = (0..=p)
                .map(|s| sparse_prior_weight(p, s) * (ln_choose(p, s).exp()))
                .sum();
            let prior = Prior::SparseMixture { p_lags: p, radius: 1.0 };
            assert!((total - prior.total_mass()).abs() < 1e-12);
            assert!(total < 1.0);
        }
        assert!((sparse_prior_weight(4, 2) - 1.0 / (8.0 * 6.0)).abs() < 1e-15);
    }

    #[test]
    fn ball_volume_matches_simplex_formula() {
        // the ℓ1 ball in ℝ² with radius 1 is a square of side √2
        assert!((ln_ball_volume(2, 1.0).exp() - 2.0).abs() < 1e-12);
        assert_eq!(ln_ball_volume(0, 3.0), 0.0);
    }

    #[test]
    fn sparse_sampling_support_sizes() {
        let prior = Prior::SparseMixture { p_lags: 3, radius: 1.0 };
        let mut rng = seeded(5);
        let mut counts = [0usize; 4];
        let mut out = vec![0.0; 3];
        let draws = 80_000;
        for _ in 0..draws {
            prior.sample(&mut rng, &mut out);
            assert!(out.iter().map(|v| v.abs()).sum::<f64>() <= 1.0);
            counts[out.iter().filter(|v| **v != 0.0).count()] += 1;
        }
        let mass = prior.total_mass();
        for (s, c) in counts.iter().enumerate() {
            let expected = 0.5f64.powi(s as i32 + 1) / mass;
            assert!((*c as f64 / draws as f64 - expected).abs() < 0.01, "size {s}");
        }
    }
}
