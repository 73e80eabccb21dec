//! Empirical risk `r_n(θ) = (n-k)^{-1} Σ_{i=k+1}^{n} ℓ(X̂_i^θ, X_i)` and its minimization.

mod solver;

pub use solver::{erm_finite, erm_fit, l1_project, minimize, ErmFit, SolverConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::predictors::{dot, PredictorFamily};
use crate::series::{lag_window, TimeSeries};

/// Precomputed regression view of a series under a family: since every
/// family is linear in θ, each prediction step is `F_i θ` for a fixed
/// feature matrix `F_i` and target `y_i`.
#[derive(Debug, Clone)]
pub struct Design {
    rows: usize,
    out_dim: usize,
    dim: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
    first_target: usize,
}

impl Design {
    /// Steps `t = k+1..=n`.
    pub fn new(series: &TimeSeries, family: &PredictorFamily) -> Result<Self> {
        Self::starting_at(series, family, family.lags() + 1)
    }

    /// Steps `t = first_target..=n` (1-based), `first_target > k`.
    pub fn starting_at(series: &TimeSeries, family: &PredictorFamily, first_target: usize) -> Result<Self> {
        let k = family.lags();
        let n = series.len();
        family.check_series_dim(series.dim())?;
        if n <= k {
            return Err(Error::invalid(format!("need n > k, got n={n}, k={k}")));
        }
        if first_target <= k || first_target > n {
            return Err(Error::OutOfRange(format!(
                "first target {first_target} must satisfy k < t ≤ n (k={k}, n={n})"
            )));
        }
        let dim = family.dim();
        let out_dim = family.output_dim(series.dim());
        let rows = n + 1 - first_target;
        let mut features = vec![0.0; rows * out_dim * dim];
        let mut targets = Vec::with_capacity(rows * out_dim);
        let block = out_dim * dim;
        for (i, t) in (first_target..=n).enumerate() {
            let window = lag_window(series, t, k)?;
            family.features(&window, &mut features[i * block..(i + 1) * block]);
            targets.extend_from_slice(family.target(series.row(t - 1)));
        }
        Ok(Self {
            rows,
            out_dim,
            dim,
            features,
            targets,
            first_target,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// 1-based time index of the first prediction step.
    pub fn first_target(&self) -> usize {
        self.first_target
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.out_dim..(i + 1) * self.out_dim]
    }

    /// Feature matrix of step `i`, `out_dim × dim` row-major.
    pub fn features(&self, i: usize) -> &[f64] {
        let block = self.out_dim * self.dim;
        &self.features[i * block..(i + 1) * block]
    }

    pub fn forecast_into(&self, i: usize, theta: &[f64], out: &mut [f64]) {
        let f = self.features(i);
        for (o, v) in out.iter_mut().enumerate() {
            *v = if self.dim == 0 {
                0.0
            } else {
                dot(&f[o * self.dim..(o + 1) * self.dim], theta)
            };
        }
    }

    /// Root-mean-square of each feature column; 1 for all-zero columns.
    pub(crate) fn column_scales(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for chunk in self.features.chunks_exact(self.dim.max(1)) {
            for (s, v) in sums.iter_mut().zip(chunk) {
                *s += v * v;
            }
        }
        let count = (self.rows * self.out_dim) as f64;
        sums.into_iter()
            .map(|s| {
                let rms = (s / count).sqrt();
                if rms > 1e-300 && rms.is_finite() {
                    rms
                } else {
                    1.0
                }
            })
            .collect()
    }
}

/// `r(θ) = (θᵀGθ - 2bᵀθ + c) / m` for the quadratic loss.
#[derive(Debug, Clone)]
struct QuadraticForm {
    gram: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
    rows: f64,
}

impl QuadraticForm {
    fn new(design: &Design) -> Self {
        let d = design.dim;
        let mut gram = vec![0.0; d * d];
        let mut linear = vec![0.0; d];
        let mut constant = 0.0;
        for i in 0..design.rows {
            let f = design.features(i);
            let y = design.target(i);
            for o in 0..design.out_dim {
                let row = &f[o * d..(o + 1) * d];
                for a in 0..d {
                    linear[a] += row[a] * y[o];
                    for b in a..d {
                        gram[a * d + b] += row[a] * row[b];
                    }
                }
                constant += y[o] * y[o];
            }
        }
        for a in 0..d {
            for b in 0..a {
                gram[a * d + b] = gram[b * d + a];
            }
        }
        Self {
            gram,
            linear,
            constant,
            rows: design.rows as f64,
        }
    }

    fn value_and_gradient(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let d = theta.len();
        let mut quad = 0.0;
        let mut lin = 0.0;
        let mut g_theta = vec![0.0; d];
        for a in 0..d {
            let ga = dot(&self.gram[a * d..(a + 1) * d], theta);
            g_theta[a] = ga;
            quad += theta[a] * ga;
            lin += self.linear[a] * theta[a];
        }
        if let Some(grad) = grad {
            for a in 0..d {
                grad[a] = 2.0 * (g_theta[a] - self.linear[a]) / self.rows;
            }
        }
        ((quad - 2.0 * lin + self.constant) / self.rows).max(0.0)
    }
}

/// Empirical risk of a family on a series under a loss, ready for repeated
/// evaluation. The quadratic loss is evaluated through its Gram matrix in
/// `O(d²)` per call.
#[derive(Debug, Clone)]
pub struct EmpiricalRisk {
    design: Design,
    loss: LossSpec,
    quadratic: Option<QuadraticForm>,
}

impl EmpiricalRisk {
    pub fn new(series: &TimeSeries, family: &PredictorFamily, loss: LossSpec) -> Result<Self> {
        Self::from_design(Design::new(series, family)?, loss)
    }

    pub fn from_design(design: Design, loss: LossSpec) -> Result<Self> {
        loss.check_dim(design.out_dim)?;
        let quadratic = matches!(loss, LossSpec::Quadratic).then(|| QuadraticForm::new(&design));
        Ok(Self {
            design,
            loss,
            quadratic,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn loss(&self) -> LossSpec {
        self.loss
    }

    pub fn dim(&self) -> usize {
        self.design.dim
    }

    pub fn n_effective(&self) -> usize {
        self.design.rows
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        if let Some(q) = &self.quadratic {
            return q.value_and_gradient(theta, None);
        }
        let mut forecast = vec![0.0; self.design.out_dim];
        let mut total = 0.0;
        for i in 0..self.design.rows {
            self.design.forecast_into(i, theta, &mut forecast);
            for (f, y) in forecast.iter_mut().zip(self.design.target(i)) {
                *f -= y;
            }
            total += self.loss.of_residual(&forecast);
        }
        total / self.design.rows as f64
    }

    /// `r(θ)` and a subgradient with respect to θ.
    pub fn value_and_subgradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        if let Some(q) = &self.quadratic {
            return q.value_and_gradient(theta, Some(grad));
        }
        let d = self.design.dim;
        let p = self.design.out_dim;
        let mut residual = vec![0.0; p];
        let mut g_res = vec![0.0; p];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for i in 0..self.design.rows {
            self.design.forecast_into(i, theta, &mut residual);
            for (r, y) in residual.iter_mut().zip(self.design.target(i)) {
                *r -= y;
            }
            total += self.loss.residual_subgradient(&residual, &mut g_res);
            let f = self.design.features(i);
            for o in 0..p {
                if g_res[o] != 0.0 {
                    for (g, x) in grad.iter_mut().zip(&f[o * d..(o + 1) * d]) {
                        *g += g_res[o] * x;
                    }
                }
            }
        }
        let m = self.design.rows as f64;
        grad.iter_mut().for_each(|g| *g /= m);
        total / m
    }

    /// Per-step losses, summed directly (no Gram shortcut).
    pub fn per_step_losses(&self, theta: &[f64]) -> Vec<f64> {
        let mut residual = vec![0.0; self.design.out_dim];
        (0..self.design.rows)
            .map(|i| {
                self.design.forecast_into(i, theta, &mut residual);
                for (r, y) in residual.iter_mut().zip(self.design.target(i)) {
                    *r -= y;
                }
                self.loss.of_residual(&residual)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub empirical_risk: f64,
    pub per_step_losses: Vec<f64>,
    pub n_effective: usize,
}

pub fn empirical_risk(
    series: &TimeSeries,
    family: &PredictorFamily,
    theta: &[f64],
    loss: LossSpec,
) -> Result<RiskReport> {
    if theta.len() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: theta.len(),
        });
    }
    let risk = EmpiricalRisk::new(series, family, loss)?;
    let per_step_losses = risk.per_step_losses(theta);
    let n_effective = per_step_losses.len();
    let empirical_risk = per_step_losses.iter().sum::<f64>() / n_effective as f64;
    Ok(RiskReport {
        empirical_risk,
        per_step_losses,
        n_effective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalars(v: &[f64]) -> TimeSeries {
        TimeSeries::from_scalars(v.to_vec()).unwrap()
    }

    #[test]
    fn perfect_predictor_on_constant_series() {
        let s = scalars(&[2.5; 10]);
        let f = PredictorFamily::linear_ar(1, true, 10.0).unwrap();
        let r = empirical_risk(&s, &f, &[2.5, 0.0], LossSpec::Absolute).unwrap();
        assert_eq!(r.empirical_risk, 0.0);
        assert_eq!(r.n_effective, 9);
    }

    #[test]
    fn alternating_series_quadratic() {
        // steps t = 2, 3, 4 predict 0 against 1, 0, 1
        let s = scalars(&[0.0, 1.0, 0.0, 1.0]);
        let f = PredictorFamily::linear_ar(1, true, 10.0).unwrap();
        let r = empirical_risk(&s, &f, &[0.0, 0.0], LossSpec::Quadratic).unwrap();
        assert_eq!(r.per_step_losses, vec![1.0, 0.0, 1.0]);
        assert!((r.empirical_risk - 2.0 / 3.0).abs() < 1e-15);
        let fast = EmpiricalRisk::new(&s, &f, LossSpec::Quadratic).unwrap();
        assert!((fast.value(&[0.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = scalars(&[1.0, 2.0]);
        let f = PredictorFamily::linear_ar(2, true, 1.0).unwrap();
        assert!(empirical_risk(&s, &f, &[0.0; 3], LossSpec::Absolute).is_err());
    }

    #[test]
    fn gram_path_matches_direct_sum() {
        let s = scalars(&[0.3, -1.2, 0.8, 0.1, 2.0, -0.4, 0.9, 1.1]);
        let f = PredictorFamily::linear_ar(2, true, 10.0).unwrap();
        let fast = EmpiricalRisk::new(&s, &f, LossSpec::Quadratic).unwrap();
        let theta = [0.2, -0.5, 0.3];
        let direct = empirical_risk(&s, &f, &theta, LossSpec::Quadratic).unwrap();
        assert!((fast.value(&theta) - direct.empirical_risk).abs() < 1e-12);

        // gradient against central differences
        let mut g = [0.0; 3];
        fast.value_and_subgradient(&theta, &mut g);
        for a in 0..3 {
            let mut up = theta;
            let mut dn = theta;
            up[a] += 1e-6;
            dn[a] -= 1e-6;
            let fd = (fast.value(&up) - fast.value(&dn)) / 2e-6;
            assert!((g[a] - fd).abs() < 1e-6, "{a}: {} vs {fd}", g[a]);
        }
    }

    #[test]
    fn gdp_design_targets_growth_column() {
        let s = TimeSeries::from_rows(vec![vec![0.1, 100.0], vec![0.2, 101.0], vec![0.3, 99.0]]).unwrap();
        let f = PredictorFamily::gdp_climate(100.0).unwrap();
        let d = Design::new(&s, &f).unwrap();
        assert_eq!(d.rows(), 1);
        assert_eq!(d.target(0), &[0.3]);
        assert_eq!(d.features(0), &[1.0, 0.2, 101.0, 1.0]);
    }

    proptest::proptest! {
        #[test]
        fn risk_is_the_order_free_mean_of_step_losses(
            x in proptest::collection::vec(-3.0f64..3.0, 8..30),
            theta in proptest::collection::vec(-1.0f64..1.0, 3),
            quad in proptest::bool::ANY,
        ) {
            let s = scalars(&x);
            let f = PredictorFamily::linear_ar(2, true, 10.0).unwrap();
            let loss = if quad { LossSpec::Quadratic } else { LossSpec::Absolute };
            let risk = EmpiricalRisk::new(&s, &f, loss).unwrap();
            let mut steps = risk.per_step_losses(&theta);
            let forward = steps.iter().sum::<f64>() / steps.len() as f64;
            steps.reverse();
            let backward = steps.iter().sum::<f64>() / steps.len() as f64;
            let v = risk.value(&theta);
            proptest::prop_assert!((v - forward).abs() <= 1e-9 * (1.0 + v.abs()));
            proptest::prop_assert!((forward - backward).abs() <= 1e-12 * (1.0 + v.abs()));
        }
    }
}
