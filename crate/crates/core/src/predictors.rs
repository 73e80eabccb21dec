//! Lag-window predictor families `f_θ(X_{t-1}, …, X_{t-k})`, all linear in θ.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameter vector θ of a predictor family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub type BasisFn = Arc<dyn Fn(&[&[f64]]) -> Vec<f64> + Send + Sync>;

/// A dictionary function `φ : (ℝ^p)^k → ℝ^p` with its declared Lipschitz
/// constant (summed over lags).
#[derive(Clone)]
pub struct Basis {
    pub name: String,
    pub lipschitz: Option<f64>,
    max_lag: usize,
    func: BasisFn,
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("max_lag", &self.max_lag)
            .finish()
    }
}

impl Basis {
    /// Custom basis reading lags `1..=max_lag` of the window.
    pub fn new(name: impl Into<String>, max_lag: usize, lipschitz: Option<f64>, func: BasisFn) -> Self {
        Self {
            name: name.into(),
            lipschitz,
            max_lag,
            func,
        }
    }

    /// Built-in bases, applied coordinate-wise:
    /// `const`, `lag<j>`, `sin<j>`, `cos<j>`, `tanh<j>`, `abs<j>` and
    /// `cossin<i>_<j>` = `cos(X_{t-i}) sin(X_{t-j})`.
    pub fn named(name: &str) -> Result<Self> {
        let unknown = || Error::invalid(format!("unknown basis function '{name}'"));
        let lag_of = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(j) if j >= 1 => Ok(j),
                _ => Err(unknown()),
            }
        };
        let unary = |j: usize, f: fn(f64) -> f64| -> BasisFn {
            Arc::new(move |w: &[&[f64]]| w[j - 1].iter().map(|&x| f(x)).collect())
        };
        if name == "const" {
            let func: BasisFn = Arc::new(|w: &[&[f64]]| vec![1.0; w[0].len()]);
            return Ok(Self::new(name, 1, Some(0.0), func));
        }
        if let Some(rest) = name.strip_prefix("cossin") {
            let (i, j) = rest.split_once('_').ok_or_else(unknown)?;
            let (i, j) = (lag_of(i)?, lag_of(j)?);
            let func: BasisFn = Arc::new(move |w: &[&[f64]]| {
                w[i - 1].iter().zip(w[j - 1]).map(|(a, b)| a.cos() * b.sin()).collect()
            });
            return Ok(Self::new(name, i.max(j), Some(2.0), func));
        }
        for (prefix, f) in [
            ("lag", (|x| x) as fn(f64) -> f64),
            ("sin", f64::sin),
            ("cos", f64::cos),
            ("tanh", f64::tanh),
            ("abs", f64::abs),
        ] {
            if let Some(rest) = name.strip_prefix(prefix) {
                let j = lag_of(rest)?;
                return Ok(Self::new(name, j, Some(1.0), unary(j, f)));
            }
        }
        Err(unknown())
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn eval(&self, window: &[&[f64]]) -> Vec<f64> {
        (self.func)(window)
    }
}

#[derive(Debug, Clone)]
pub enum FamilyKind {
    /// `θ_0 + Σ_{j=1..k} θ_j X_{t-j}` (θ_0 dropped without intercept).
    LinearAr { lags: usize, intercept: bool },
    /// `Σ_i θ_i φ_i(X_{t-1}, …, X_{t-k})`.
    Dictionary { lags: usize, basis: Vec<Basis> },
    /// Growth forecaster on `X_t = (ΔGDP_t, I_t)`:
    /// `θ_0 + θ_1 ΔGDP_{t-1} + θ_2 I_{t-1} + θ_3 (I_{t-1} - I_{t-2})|I_{t-1} - I_{t-2}|`.
    ///
    /// `indicator_bound` is `max |I|` over the data, needed for the Lipschitz
    /// coefficient of the quadratic term.
    GdpClimate { indicator_bound: Option<f64> },
    /// `Σ_{j ∈ J} θ_j X_{t-j}` with `J ⊆ {1, …, max_lag}` sorted.
    SparseAr { max_lag: usize, support: Vec<usize> },
}

/// A predictor family together with the ℓ1 radius `D` of its parameter set.
#[derive(Debug, Clone)]
pub struct PredictorFamily {
    pub kind: FamilyKind,
    pub radius: f64,
}

impl PredictorFamily {
    pub fn new(kind: FamilyKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("ℓ1 radius must be > 0, got {radius}")));
        }
        match &kind {
            FamilyKind::LinearAr { lags, .. } if *lags == 0 => {
                return Err(Error::invalid("autoregression needs at least one lag"))
            }
            FamilyKind::Dictionary { lags, basis } => {
                if basis.is_empty() {
                    return Err(Error::invalid("dictionary needs at least one basis function"));
                }
                if let Some(b) = basis.iter().find(|b| b.max_lag() > *lags || b.max_lag() == 0) {
                    return Err(Error::invalid(format!(
                        "basis '{}' reads lag {} outside the window of {lags}",
                        b.name,
                        b.max_lag()
                    )));
                }
            }
            FamilyKind::SparseAr { max_lag, support } => {
                if *max_lag == 0 {
                    return Err(Error::invalid("sparse autoregression needs max_lag ≥ 1"));
                }
                if support.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::invalid("support must be strictly increasing"));
                }
                if support.iter().any(|&j| j == 0 || j > *max_lag) {
                    return Err(Error::invalid(format!("support lags must lie in 1..={max_lag}")));
                }
            }
            _ => {}
        }
        Ok(Self { kind, radius })
    }

    pub fn linear_ar(lags: usize, intercept: bool, radius: f64) -> Result<Self> {
        Self::new(FamilyKind::LinearAr { lags, intercept }, radius)
    }

    pub fn sparse_ar(max_lag: usize, support: Vec<usize>, radius: f64) -> Result<Self> {
        Self::new(FamilyKind::SparseAr { max_lag, support }, radius)
    }

    pub fn gdp_climate(radius: f64) -> Result<Self> {
        Self::new(FamilyKind::GdpClimate { indicator_bound: None }, radius)
    }

    pub fn dictionary(lags: usize, basis: Vec<Basis>, radius: f64) -> Result<Self> {
        Self::new(FamilyKind::Dictionary { lags, basis }, radius)
    }

    /// Records `max |I|` for the growth family; no-op for the others.
    pub fn with_indicator_bound(mut self, bound: f64) -> Self {
        if let FamilyKind::GdpClimate { indicator_bound } = &mut self.kind {
            *indicator_bound = Some(bound.abs());
        }
        self
    }

    /// Window length `k`.
    pub fn lags(&self) -> usize {
        match &self.kind {
            FamilyKind::LinearAr { lags, .. } | FamilyKind::Dictionary { lags, .. } => *lags,
            FamilyKind::GdpClimate { .. } => 2,
            FamilyKind::SparseAr { max_lag, .. } => *max_lag,
        }
    }

    /// Parameter dimension `d`.
    pub fn dim(&self) -> usize {
        match &self.kind {
            FamilyKind::LinearAr { lags, intercept } => lags + usize::from(*intercept),
            FamilyKind::Dictionary { basis, .. } => basis.len(),
            FamilyKind::GdpClimate { .. } => 4,
            FamilyKind::SparseAr { support, .. } => support.len(),
        }
    }

    /// Dimension of the forecast for series of dimension `series_dim`.
    pub fn output_dim(&self, series_dim: usize) -> usize {
        match self.kind {
            FamilyKind::GdpClimate { .. } => 1,
            _ => series_dim,
        }
    }

    pub fn check_series_dim(&self, series_dim: usize) -> Result<()> {
        if matches!(self.kind, FamilyKind::GdpClimate { .. }) && series_dim != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: series_dim,
            });
        }
        Ok(())
    }

    /// The part of `X_t` that the family forecasts.
    pub fn target<'a>(&self, observation: &'a [f64]) -> &'a [f64] {
        match self.kind {
            FamilyKind::GdpClimate { .. } => &observation[..1],
            _ => observation,
        }
    }

    /// Writes the `output_dim × dim` feature matrix (row-major) so that
    /// `f_θ(window) = features · θ`.
    pub(crate) fn features(&self, window: &[&[f64]], out: &mut [f64]) {
        let d = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        match &self.kind {
            FamilyKind::LinearAr { lags, intercept } => {
                let p = window[0].len();
                let offset = usize::from(*intercept);
                for o in 0..p {
                    let row = &mut out[o * d..(o + 1) * d];
                    if *intercept {
                        row[0] = 1.0;
                    }
                    for j in 0..*lags {
                        row[offset + j] = window[j][o];
                    }
                }
            }
            FamilyKind::Dictionary { basis, .. } => {
                for (i, b) in basis.iter().enumerate() {
                    for (o, v) in b.eval(window).into_iter().enumerate() {
                        out[o * d + i] = v;
                    }
                }
            }
            FamilyKind::GdpClimate { .. } => {
                let (x1, x2) = (window[0], window[1]);
                let change = x1[1] - x2[1];
                out[0] = 1.0;
                out[1] = x1[0];
                out[2] = x1[1];
                out[3] = change * change.abs();
            }
            FamilyKind::SparseAr { support, .. } => {
                let p = window[0].len();
                for o in 0..p {
                    for (i, &j) in support.iter().enumerate() {
                        out[o * d + i] = window[j - 1][o];
                    }
                }
            }
        }
    }

    fn check_window(&self, theta: &[f64], window: &[&[f64]]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        if window.len() != self.lags() {
            return Err(Error::DimensionMismatch {
                expected: self.lags(),
                got: window.len(),
            });
        }
        let p = window[0].len();
        if let Some(w) = window.iter().find(|w| w.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: w.len(),
            });
        }
        self.check_series_dim(p)
    }

    /// `f_θ(X_{t-1}, …, X_{t-k})` for a most-recent-first window.
    pub fn forecast(&self, theta: &[f64], window: &[&[f64]]) -> Result<Vec<f64>> {
        self.check_window(theta, window)?;
        let d = self.dim();
        let out_dim = self.output_dim(window[0].len());
        let mut feats = vec![0.0; out_dim * d];
        self.features(window, &mut feats);
        Ok(feats
            .chunks_exact(d.max(1))
            .take(out_dim)
            .map(|row| if d == 0 { 0.0 } else { dot(row, theta) })
            .collect())
    }

    /// Per-lag coefficients `a_j(θ)`, `j = 1..=k`, when the family has them.
    /// Dictionaries only carry a total constant per basis function.
    pub fn lag_coefficients(&self, theta: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_theta(theta)?;
        Ok(match &self.kind {
            FamilyKind::LinearAr { intercept, .. } => {
                Some(theta[usize::from(*intercept)..].iter().map(|v| v.abs()).collect())
            }
            FamilyKind::SparseAr { max_lag, support } => {
                let mut a = vec![0.0; *max_lag];
                for (&j, v) in support.iter().zip(theta) {
                    a[j - 1] = v.abs();
                }
                Some(a)
            }
            FamilyKind::GdpClimate { indicator_bound } => {
                let m = indicator_bound.ok_or_else(|| {
                    Error::invalid("growth family needs the indicator bound max|I| (see with_indicator_bound)")
                })?;
                // |u|u| - v|v|| ≤ 2 max(|u|,|v|) |u - v| and |u|, |v| ≤ 2 max|I|
                let quad = 4.0 * m * theta[3].abs();
                Some(vec![theta[1].abs() + theta[2].abs() + quad, quad])
            }
            FamilyKind::Dictionary { .. } => None,
        })
    }

    /// `L_θ = Σ_j a_j(θ)`; the intercept never contributes.
    pub fn lip_coefficient(&self, theta: &[f64]) -> Result<f64> {
        if let FamilyKind::Dictionary { basis, .. } = &self.kind {
            self.check_theta(theta)?;
            return basis.iter().zip(theta).try_fold(0.0, |acc, (b, t)| {
                let lip = b.lipschitz.ok_or_else(|| Error::MissingLipschitz(b.name.clone()))?;
                Ok(acc + t.abs() * lip)
            });
        }
        Ok(self.lag_coefficients(theta)?.unwrap_or_default().iter().sum())
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Whether `‖θ‖₁ ≤ D` up to rounding.
    pub fn is_feasible(&self, theta: &[f64]) -> bool {
        theta.iter().map(|v| v.abs()).sum::<f64>() <= self.radius * (1.0 + 1e-12) + 1e-12
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FamilyKind::LinearAr { lags, intercept } => {
                format!("ar({lags}{})", if *intercept { ", intercept" } else { "" })
            }
            FamilyKind::Dictionary { basis, .. } => format!(
                "dict({})",
                basis.iter().map(|b| b.name.as_str()).collect::<Vec<_>>().join(",")
            ),
            FamilyKind::GdpClimate { .. } => "gdp".into(),
            FamilyKind::SparseAr { support, .. } => format!("sparse({support:?})"),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
