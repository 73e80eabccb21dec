//! Loss functions of the form `ℓ(x, x') = g(x - x')` with `g` convex,
//! `K`-Lipschitz, `g(0) = 0` and `g ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossSpec {
    /// `‖x - x'‖`
    Absolute,
    /// `‖x - x'‖²`
    Quadratic,
    /// Pinball loss on scalars: with `u = forecast - actual`,
    /// `τ u` if `u > 0` and `-(1 - τ) u` otherwise.
    Quantile { tau: f64 },
}

impl LossSpec {
    pub fn quantile(tau: f64) -> Result<Self> {
        let loss = LossSpec::Quantile { tau };
        loss.validate()?;
        Ok(loss)
    }

    pub fn validate(&self) -> Result<()> {
        if let LossSpec::Quantile { tau } = *self {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::invalid(format!("quantile level must lie in (0, 1), got {tau}")));
            }
        }
        Ok(())
    }

    /// Checks that the loss can be evaluated on vectors of dimension `dim`.
    pub fn check_dim(&self, dim: usize) -> Result<()> {
        self.validate()?;
        if matches!(self, LossSpec::Quantile { .. }) && dim != 1 {
            return Err(Error::invalid(format!(
                "quantile loss is defined for scalar forecasts only, got dimension {dim}"
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, forecast: &[f64], actual: &[f64]) -> Result<f64> {
        if forecast.len() != actual.len() {
            return Err(Error::DimensionMismatch {
                expected: forecast.len(),
                got: actual.len(),
            });
        }
        self.check_dim(forecast.len())?;
        let u: Vec<f64> = forecast.iter().zip(actual).map(|(f, a)| f - a).collect();
        Ok(self.of_residual(&u))
    }

    /// `g(u)` for the residual `u = forecast - actual`; no validation.
    pub(crate) fn of_residual(&self, u: &[f64]) -> f64 {
        match *self {
            LossSpec::Absolute => norm(u),
            LossSpec::Quadratic => u.iter().map(|v| v * v).sum(),
            LossSpec::Quantile { tau } => pinball(tau, u[0]),
        }
    }

    /// `g(u)` and a subgradient `∂g(u)` written into `grad`.
    ///
    /// At a kink the quantile loss returns `τ` and the absolute loss returns 0.
    pub(crate) fn residual_subgradient(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        match *self {
            LossSpec::Absolute => {
                let r = norm(u);
                if r > 0.0 {
                    for (g, v) in grad.iter_mut().zip(u) {
                        *g = v / r;
                    }
                } else {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                }
                r
            }
            LossSpec::Quadratic => {
                for (g, v) in grad.iter_mut().zip(u) {
                    *g = 2.0 * v;
                }
                u.iter().map(|v| v * v).sum()
            }
            LossSpec::Quantile { tau } => {
                grad[0] = if u[0] >= 0.0 { tau } else { tau - 1.0 };
                pinball(tau, u[0])
            }
        }
    }

    /// Lipschitz constant `K` of `g`; the quadratic loss needs the bound `𝓑`
    /// on the observations and gets `4𝓑`.
    pub fn lipschitz_constant(&self, bound_b: Option<f64>) -> Result<f64> {
        self.validate()?;
        match *self {
            LossSpec::Absolute => Ok(1.0),
            LossSpec::Quadratic => match bound_b {
                Some(b) if b > 0.0 && b.is_finite() => Ok(4.0 * b),
                Some(b) => Err(Error::invalid(format!("quadratic loss needs 𝓑 > 0, got {b}"))),
                None => Err(Error::invalid("quadratic loss needs the observation bound 𝓑")),
            },
            LossSpec::Quantile { tau } => Ok(tau.max(1.0 - tau)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            LossSpec::Absolute => "abs".into(),
            LossSpec::Quadratic => "quad".into(),
            LossSpec::Quantile { tau } => format!("quantile({tau})"),
        }
    }
}

fn pinball(tau: f64, u: f64) -> f64 {
    if u > 0.0 {
        tau * u
    } else {
        -(1.0 - tau) * u
    }
}

fn norm(u: &[f64]) -> f64 {
    if u.len() == 1 {
        u[0].abs()
    } else {
        u.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
