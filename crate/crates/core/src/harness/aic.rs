//! Conditional least squares autoregressions and AIC order selection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const RIDGE_JITTER: f64 = 1e-8;

/// AR(p) with intercept, fitted by conditional least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArFit {
    pub order: usize,
    /// Intercept first, then lags `1..=p`; the `LinearAr { intercept: true }`
    /// parameter layout.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    /// Rows used, `m`.
    pub rows: usize,
    /// The normal equations were singular and a ridge jitter was added.
    pub ridge: bool,
}

/// Fits AR(p) with intercept on targets `first_target..=n` (1-based).
pub fn cls_fit(series: &TimeSeries, order: usize, first_target: usize) -> Result<ArFit> {
    if series.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: series.dim(),
        });
    }
    let n = series.len();
    if first_target <= order || first_target > n {
        return Err(Error::OutOfRange(format!(
            "first target {first_target} must satisfy p < t ≤ n (p={order}, n={n})"
        )));
    }
    let x = series.as_flat();
    let m = n + 1 - first_target;
    let d = order + 1;
    let design = DMatrix::from_fn(m, d, |i, j| if j == 0 { 1.0 } else { x[first_target - 1 + i - j] });
    let y = DVector::from_iterator(m, (first_target - 1..n).map(|t| x[t]));
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * &y;
    // rounding can let an exactly singular matrix through the factorization,
    // so tiny pivots relative to the largest diagonal entry count as failure
    let max_diag = gram.diagonal().max();
    let factor = gram.clone().cholesky().filter(|ch| {
        let l = ch.l_dirty();
        (0..d).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * max_diag)
    });
    let (beta, ridge) = match factor {
        Some(ch) => (ch.solve(&rhs), false),
        None => {
            let scale = gram.trace() / d as f64 + 1.0;
            let jittered = gram + DMatrix::identity(d, d) * (RIDGE_JITTER * scale);
            let ch = jittered
                .cholesky()
                .ok_or_else(|| Error::Degenerate("normal equations singular after ridge jitter".into()))?;
            (ch.solve(&rhs), true)
        }
    };
    let residual = y - design * &beta;
    Ok(ArFit {
        order,
        coefficients: beta.iter().copied().collect(),
        rss: residual.norm_squared(),
        rows: m,
        ridge,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AicSelection {
    pub order: usize,
    pub fit: ArFit,
    /// `AIC(p)` for `p = 1..=q`.
    pub aic: Vec<f64>,
    /// Orders whose fit needed the ridge fallback.
    pub ridge_orders: Vec<usize>,
}

/// Selects `p ∈ 1..=q` minimizing `m log(RSS_p/m) + 2(p+1)`, every order
/// fitted on the common rows `q+1..=n`. RSS is floored at machine epsilon
/// times `Σ y²` so exact fits tie, and ties go to the smallest order.
pub fn aic_select(series: &TimeSeries, max_order: usize) -> Result<AicSelection> {
    let n = series.len();
    if max_order == 0 {
        return Err(Error::invalid("max order must be ≥ 1"));
    }
    if n <= max_order + 1 {
        return Err(Error::invalid(format!("need n > q + 1, got n={n}, q={max_order}")));
    }
    let first = max_order + 1;
    let energy: f64 = series.as_flat()[first - 1..].iter().map(|v| v * v).sum();
    let floor = f64::EPSILON * energy.max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, ArFit)> = None;
    let mut aic = Vec::with_capacity(max_order);
    let mut ridge_orders = Vec::new();
    for p in 1..=max_order {
        let fit = cls_fit(series, p, first)?;
        if fit.ridge {
            ridge_orders.push(p);
        }
        let m = fit.rows as f64;
        let value = m * (fit.rss.max(floor) / m).ln() + 2.0 * (p + 1) as f64;
        aic.push(value);
        if best.as_ref().map_or(true, |(b, _)| value < *b) {
            best = Some((value, fit));
        }
    }
    let (_, fit) = best.expect("q ≥ 1");
    Ok(AicSelection {
        order: fit.order,
        fit,
        aic,
        ridge_orders,
    })
}

/// One-step forecast `c + Σ_j φ_j X_{t-j}` for target `t` (1-based).
pub fn ar_forecast(coefficients: &[f64], values: &[f64], t: usize) -> f64 {
    coefficients[0]
        + coefficients[1..]
            .iter()
            .enumerate()
            .map(|(j, c)| c * values[t - 2 - j])
            .sum::<f64>()
}
