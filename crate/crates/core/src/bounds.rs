//! Oracle-inequality remainders `Δ(n, Θ)` such that, with probability at
//! least `1 - ε`, `R(θ̂) ≤ inf_Θ R + Δ`.
//!
//! Everything here is arithmetic on user-supplied constants: `K` (loss
//! Lipschitz constant), `L` (predictor Lipschitz budget), `B` (almost-sure
//! bound on `‖X₀‖`), `C` (weak-dependence constant, or the φ-mixing sum for
//! the fast rate). None of them is estimated from data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::sparse_prior_weight;

const LOG_LAMBDA_MIN: f64 = -6.0 * std::f64::consts::LN_10;
const LOG_LAMBDA_MAX: f64 = 9.0 * std::f64::consts::LN_10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    /// `K`.
    pub loss_lipschitz: f64,
    /// `L`.
    pub predictor_lipschitz: f64,
    /// `B`.
    pub bound: f64,
    /// `C`.
    pub dependence: f64,
    pub epsilon: f64,
    pub lambda: Option<f64>,
    /// `M`, the size of a finite parameter set.
    pub candidates: Option<usize>,
    /// `d`.
    pub dim: Option<usize>,
    /// `D`.
    pub diameter: Option<f64>,
    /// `ψ`, the Lipschitz constant of `θ ↦ f_θ` for the parametric ERM bound.
    pub psi: Option<f64>,
}

impl BoundInputs {
    pub fn new(n: usize, k: usize, loss_lipschitz: f64, predictor_lipschitz: f64, bound: f64, dependence: f64, epsilon: f64) -> Self {
        Self {
            n,
            k,
            loss_lipschitz,
            predictor_lipschitz,
            bound,
            dependence,
            epsilon,
            lambda: None,
            candidates: None,
            dim: None,
            diameter: None,
            psi: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_candidates(mut self, m: usize) -> Self {
        self.candidates = Some(m);
        self
    }

    pub fn with_dim(mut self, d: usize, diameter: f64) -> Self {
        self.dim = Some(d);
        self.diameter = Some(diameter);
        self
    }

    pub fn with_psi(mut self, psi: f64) -> Self {
        self.psi = Some(psi);
        self
    }

    /// `k = 0` is accepted here (no lag window); the fast rate needs `k ≥ 1`.
    fn validate(&self) -> Result<()> {
        if self.k >= self.n {
            return Err(Error::invalid(format!("need k < n, got k={}, n={}", self.k, self.n)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("ε must lie in (0, 1), got {}", self.epsilon)));
        }
        for (name, v) in [("K", self.loss_lipschitz), ("B", self.bound), ("C", self.dependence)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.predictor_lipschitz >= 0.0) || !self.predictor_lipschitz.is_finite() {
            return Err(Error::invalid(format!("L must be ≥ 0, got {}", self.predictor_lipschitz)));
        }
        Ok(())
    }

    fn require_lambda(&self) -> Result<f64> {
        match self.lambda {
            Some(l) if l > 0.0 && l.is_finite() => Ok(l),
            Some(l) => Err(Error::invalid(format!("λ must be > 0, got {l}"))),
            None => Err(Error::MissingInput("lambda")),
        }
    }

    fn require_dim(&self) -> Result<(f64, f64)> {
        let d = self.dim.ok_or(Error::MissingInput("dim"))?;
        let big_d = self.diameter.ok_or(Error::MissingInput("diameter"))?;
        if d == 0 || !(big_d > 0.0) {
            return Err(Error::invalid("need d ≥ 1 and D > 0"));
        }
        Ok((d as f64, big_d))
    }

    /// `n (1 - k/n)²`.
    fn effective_n(&self) -> f64 {
        let n = self.n as f64;
        n * (1.0 - self.k as f64 / n).powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Slow,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBound {
    pub delta: f64,
    pub lambda_used: f64,
    pub regime: Regime,
    pub theorem_tag: String,
}

fn finish(delta: f64, lambda_used: f64, regime: Regime, tag: &str) -> Result<OracleBound> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Degenerate(format!("{tag}: remainder {delta} is not finite and positive")));
    }
    Ok(OracleBound {
        delta,
        lambda_used,
        regime,
        theorem_tag: tag.to_string(),
    })
}

/// `κ = K (1 + L) (B + C) / √2`.
pub fn kappa(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(inputs.loss_lipschitz * (1.0 + inputs.predictor_lipschitz) * (inputs.bound + inputs.dependence)
        / std::f64::consts::SQRT_2)
}

/// Golden-section search for the minimum of `f(λ)` over
/// `log λ ∈ [max(lower, 1e-6), 1e9]`; errors when the minimum sits on the
/// generic bracket ends rather than on `lower`.
pub fn minimize_over_lambda<F: Fn(f64) -> f64>(f: F, lower: Option<f64>) -> Result<(f64, f64)> {
    let lo0 = lower.map_or(LOG_LAMBDA_MIN, |l| l.ln().max(LOG_LAMBDA_MIN));
    let (mut a, mut b) = (lo0, LOG_LAMBDA_MAX);
    if a >= b {
        return Err(Error::Degenerate("empty λ range".into()));
    }
    let g = |x: f64| f(x.exp());
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (g(c), g(d));
    while (b - a) > 1e-10 * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = g(d);
        }
    }
    let x = 0.5 * (a + b);
    // compare against the lower endpoint, which golden-section never evaluates
    let (x, value) = if g(lo0) <= g(x) { (lo0, g(lo0)) } else { (x, g(x)) };
    if !value.is_finite() {
        return Err(Error::Degenerate("objective is not finite at the minimizer".into()));
    }
    let edge = 1e-6 * (LOG_LAMBDA_MAX - LOG_LAMBDA_MIN);
    let at_free_lower = lower.is_none() && x - LOG_LAMBDA_MIN < edge;
    if at_free_lower || LOG_LAMBDA_MAX - x < edge {
        return Err(Error::Degenerate(format!(
            "λ minimization hit the bracket edge at λ = {:e}",
            x.exp()
        )));
    }
    Ok((x.exp(), value))
}

/// `Δ = 2λκ² / (n(1-k/n)²) + 2 log(2M/ε) / λ` for the Gibbs estimator on a
/// finite set of `M` candidates.
pub fn slow_bound_finite_gibbs(inputs: &BoundInputs) -> Result<OracleBound> {
    let kap = kappa(inputs)?;
    let lambda = inputs.require_lambda()?;
    let m = inputs.candidates.ok_or(Error::MissingInput("candidates"))?;
    if m == 0 {
        return Err(Error::invalid("need M ≥ 1"));
    }
    let log_term = (2.0 * m as f64 / inputs.epsilon).ln();
    let delta = 2.0 * lambda * kap * kap / inputs.effective_n() + 2.0 * log_term / lambda;
    finish(delta, lambda, Regime::Slow, "finite-gibbs")
}

/// `Δ = 4κ/(1-k/n) · √(log(2M/ε)/n)`, the finite-set ERM remainder, with the
/// λ that attains it in the Gibbs form.
pub fn slow_bound_finite_erm(inputs: &BoundInputs) -> Result<OracleBound> {
    let kap = kappa(inputs)?;
    let m = inputs.candidates.ok_or(Error::MissingInput("candidates"))?;
    if m == 0 {
        return Err(Error::invalid("need M ≥ 1"));
    }
    let n = inputs.n as f64;
    let shrink = 1.0 - inputs.k as f64 / n;
    let log_term = (2.0 * m as f64 / inputs.epsilon).ln();
    let delta = 4.0 * kap / shrink * (log_term / n).sqrt();
    let lambda = shrink * (n * log_term).sqrt() / kap;
    finish(delta, lambda, Regime::Slow, "finite-erm")
}

/// The λ-form behind [`slow_bound_finite_erm`], minimized numerically.
pub fn slow_bound_finite_erm_numeric(inputs: &BoundInputs) -> Result<OracleBound> {
    let kap = kappa(inputs)?;
    let m = inputs.candidates.ok_or(Error::MissingInput("candidates"))?;
    let log_term = (2.0 * m as f64 / inputs.epsilon).ln();
    let eff = inputs.effective_n();
    let (lambda, delta) = minimize_over_lambda(|l| 2.0 * l * kap * kap / eff + 2.0 * log_term / l, None)?;
    finish(delta, lambda, Regime::Slow, "finite-erm")
}

/// `Δ = 2λκ²/(n(1-k/n)²) + 2(d log(D√e λ/d) + log(2/ε))/λ` for the Gibbs
/// estimator with a uniform prior on a `d`-dimensional set of diameter `D`.
pub fn slow_bound_parametric_gibbs(inputs: &BoundInputs) -> Result<OracleBound> {
    let kap = kappa(inputs)?;
    let lambda = inputs.require_lambda()?;
    let (d, big_d) = inputs.require_dim()?;
    let complexity = d * (big_d * std::f64::consts::E.sqrt() * lambda / d).ln() + (2.0 / inputs.epsilon).ln();
    let delta = 2.0 * lambda * kap * kap / inputs.effective_n() + 2.0 * complexity / lambda;
    finish(delta, lambda, Regime::Slow, "param-gibbs")
}

/// `inf_{λ ≥ 2Kψ/d} 2λκ²/(n(1-k/n)²) + (d log(2eKψ(D+1)λ/d) + 2 log(2/ε))/λ`
/// for the ERM over a `d`-dimensional parameter set.
pub fn slow_bound_parametric_erm(inputs: &BoundInputs) -> Result<OracleBound> {
    let kap = kappa(inputs)?;
    let (d, big_d) = inputs.require_dim()?;
    let psi = inputs.psi.ok_or(Error::MissingInput("psi"))?;
    if !(psi > 0.0) {
        return Err(Error::invalid("ψ must be > 0"));
    }
    let k_loss = inputs.loss_lipschitz;
    let eff = inputs.effective_n();
    let log_eps = (2.0 / inputs.epsilon).ln();
    let objective = |l: f64| {
        2.0 * l * kap * kap / eff
            + (d * (2.0 * std::f64::consts::E * k_loss * psi * (big_d + 1.0) * l / d).ln() + 2.0 * log_eps) / l
    };
    let (lambda, delta) = minimize_over_lambda(objective, Some(2.0 * k_loss * psi / d))?;
    finish(delta, lambda, Regime::Slow, "param-erm")
}

/// Per-model quantities for model selection and fast rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelTerms {
    /// `d_j`; 0 is allowed (the empty model), in which case the
    /// `d log(·)` term vanishes.
    pub dim: usize,
    /// `D_j`.
    pub diameter: f64,
    /// Prior weight `p_j`.
    pub weight: f64,
    /// `R(θ̄_j) - R(θ̄)`, a population quantity supplied by the user; 0 for
    /// the best model.
    pub gap: f64,
}

impl ModelTerms {
    pub fn new(dim: usize, diameter: f64, weight: f64) -> Self {
        Self {
            dim,
            diameter,
            weight,
            gap: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::invalid(format!("model weight must lie in (0, 1], got {}", self.weight)));
        }
        if self.dim > 0 && !(self.diameter > 0.0) {
            return Err(Error::invalid("model diameter must be > 0"));
        }
        if !(self.gap >= 0.0) {
            return Err(Error::invalid("model gap must be ≥ 0"));
        }
        Ok(())
    }

    /// `d log(x / d)`, 0 when `d = 0`.
    fn dim_log(&self, x: f64) -> f64 {
        if self.dim == 0 {
            0.0
        } else {
            let d = self.dim as f64;
            d * (x / d).ln()
        }
    }
}

/// `λ_j = argmin_λ 2λκ_j²/(n(1-k/n)²) + 2(d_j log(D_j e λ/d_j) + log(2/(ε p_j)))/λ`
/// over `λ ≥ d_j/D_j`, and the minimum value.
pub fn model_selection_bound(inputs: &BoundInputs, kappa_j: f64, model: &ModelTerms) -> Result<OracleBound> {
    inputs.validate()?;
    model.validate()?;
    if !(kappa_j > 0.0) {
        return Err(Error::invalid("κ_j must be > 0"));
    }
    let eff = inputs.effective_n();
    let log_w = (2.0 / (inputs.epsilon * model.weight)).ln();
    let objective = |l: f64| {
        2.0 * l * kappa_j * kappa_j / eff + 2.0 * (model.dim_log(model.diameter * std::f64::consts::E * l) + log_w) / l
    };
    // the dimension condition only carries information for δ = d/λ ≤ D;
    // below λ = d/D the displayed objective decreases without bound
    let lower = (model.dim > 0).then(|| model.dim as f64 / model.diameter);
    let (lambda, delta) = minimize_over_lambda(objective, lower)?;
    finish(delta, lambda, Regime::Slow, "select")
}

pub fn model_selection_lambda(inputs: &BoundInputs, kappa_j: f64, model: &ModelTerms) -> Result<f64> {
    Ok(model_selection_bound(inputs, kappa_j, model)?.lambda_used)
}

/// Fast-rate remainder under φ-mixing with `C` the mixing sum:
/// `λ = (n-k)/(4kKLBC) ∧ (n-k)/(16kC)` and
/// `Δ = 4 inf_j { gap_j + 4kC(4 ∨ KLB)(d_j log(D_j e (n-k)/(16kC d_j)) + log(2/(ε p_j)))/(n-k) }`.
pub fn fast_bound(inputs: &BoundInputs, models: &[ModelTerms]) -> Result<OracleBound> {
    inputs.validate()?;
    if inputs.k == 0 {
        return Err(Error::invalid("the fast rate needs k ≥ 1"));
    }
    if models.is_empty() {
        return Err(Error::invalid("need at least one model"));
    }
    let k = inputs.k as f64;
    let m = (inputs.n - inputs.k) as f64;
    let c = inputs.dependence;
    let klb = inputs.loss_lipschitz * inputs.predictor_lipschitz * inputs.bound;
    let lambda = if klb > 0.0 {
        (m / (4.0 * k * klb * c)).min(m / (16.0 * k * c))
    } else {
        m / (16.0 * k * c)
    };
    let factor = 4.0 * k * c * klb.max(4.0);
    let mut best = f64::INFINITY;
    for model in models {
        model.validate()?;
        let complexity = model.dim_log(model.diameter * std::f64::consts::E * m / (16.0 * k * c))
            + (2.0 / (inputs.epsilon * model.weight)).ln();
        best = best.min(model.gap + factor * complexity / m);
    }
    finish(4.0 * best, lambda, Regime::Fast, "fast")
}

/// Upper end of the λ range where the fast-rate argument applies,
/// `(n-k)/(2kKLBC)`.
pub fn fast_lambda_cap(inputs: &BoundInputs) -> f64 {
    let klb = inputs.loss_lipschitz * inputs.predictor_lipschitz * inputs.bound;
    (inputs.n - inputs.k) as f64 / (2.0 * inputs.k as f64 * klb * inputs.dependence)
}

/// A candidate support of the sparse autoregression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseSupport {
    pub size: usize,
    pub gap: f64,
}

/// Fast rate for sparse autoregressions with `p_lags` candidate lags:
/// `d_J = |J|`, `D_J = L`, `K = 2B` and `p_J = 2^{-|J|-1}/C(p, |J|)`.
pub fn sparse_bound(inputs: &BoundInputs, p_lags: usize, supports: &[SparseSupport]) -> Result<OracleBound> {
    if let Some(s) = supports.iter().find(|s| s.size > p_lags) {
        return Err(Error::invalid(format!("support size {} exceeds p = {p_lags}", s.size)));
    }
    let mut adjusted = *inputs;
    adjusted.loss_lipschitz = 2.0 * inputs.bound;
    let models: Vec<ModelTerms> = supports
        .iter()
        .map(|s| ModelTerms {
            dim: s.size,
            diameter: inputs.predictor_lipschitz,
            weight: sparse_prior_weight(p_lags, s.size),
            gap: s.gap,
        })
        .collect();
    let mut bound = fast_bound(&adjusted, &models)?;
    bound.theorem_tag = "sparse".into();
    Ok(bound)
}
