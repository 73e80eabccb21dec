use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kl::estimate_kl;
use super::prior::Prior;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::predictors::{ParamVector, PredictorFamily};
use crate::risk::EmpiricalRisk;
use crate::rng::{replication_seed, seeded, BoxMuller, ChaCha8Rng};
use crate::series::TimeSeries;

/// Stream offset for the independent prior draws behind `log_Z`.
const PRIOR_STREAM: u64 = 0x5eed_0f_9a1e_d4a7;
const ADAPT_BATCH: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GibbsConfig {
    /// Inverse temperature λ.
    pub lambda: f64,
    /// Steps per chain, burn-in included.
    pub chain_length: usize,
    pub burn_in: usize,
    /// Initial random-walk standard deviation; adapted during burn-in.
    pub proposal_scale: f64,
    pub seed: u64,
    pub chains: usize,
    /// Prior draws used to estimate `log_Z`.
    pub prior_draws: usize,
    pub adapt: bool,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            chain_length: 10_000,
            burn_in: 2_000,
            proposal_scale: 0.1,
            seed: 0,
            chains: 1,
            prior_draws: 10_000,
            adapt: true,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("λ must be ≥ 0 and finite, got {}", self.lambda)));
        }
        if self.chain_length <= self.burn_in {
            return Err(Error::invalid(format!(
                "chain length {} leaves no draws after burn-in {}",
                self.chain_length, self.burn_in
            )));
        }
        if !(self.proposal_scale > 0.0) || !self.proposal_scale.is_finite() {
            return Err(Error::invalid("proposal scale must be > 0"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("need at least one chain"));
        }
        if self.prior_draws == 0 {
            return Err(Error::invalid("need at least one prior draw"));
        }
        Ok(())
    }
}

/// Post-burn-in output of one or more chains, merged in chain order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub dim: usize,
    /// Draws stored row-major, `dim` values per draw.
    pub draws: Vec<f64>,
    pub theta_hat: ParamVector,
    pub mean_emp_risk: f64,
    /// Batch-means standard error of `mean_emp_risk`.
    pub mean_emp_risk_se: f64,
    pub log_z: f64,
    pub kl_estimate: f64,
    /// Combined standard error of `kl_estimate`.
    pub kl_std_error: f64,
    pub acceptance_rate: f64,
    /// Proposal scale after adaptation (first chain).
    pub proposal_scale: f64,
    /// Support bitmask per draw (bit `j` set when lag `j+1` is active), for
    /// trans-dimensional chains.
    pub supports: Option<Vec<u64>>,
    pub warnings: Vec<String>,
}

impl PosteriorSample {
    pub fn n_draws(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.draws.len() / self.dim
        }
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.dim..(i + 1) * self.dim]
    }

    /// Fraction of draws whose support contains lag `lag` (1-based).
    pub fn inclusion_probability(&self, lag: usize) -> Option<f64> {
        let supports = self.supports.as_ref()?;
        let hits = supports.iter().filter(|m| *m >> (lag - 1) & 1 == 1).count();
        Some(hits as f64 / supports.len() as f64)
    }

    /// Fraction of draws with exactly the support `mask`.
    pub fn support_probability(&self, mask: u64) -> Option<f64> {
        let supports = self.supports.as_ref()?;
        Some(supports.iter().filter(|m| **m == mask).count() as f64 / supports.len() as f64)
    }
}

/// Raw output of one chain.
pub(crate) struct ChainRun {
    pub draws: Vec<f64>,
    pub risks: Vec<f64>,
    pub supports: Option<Vec<u64>>,
    pub accepted: usize,
    pub proposed: usize,
    pub scale: f64,
}

/// Robbins-Monro update of the log proposal scale toward the target rate.
pub(crate) struct Adapter {
    accepted: usize,
    proposed: usize,
    batches: usize,
}

impl Adapter {
    pub fn new() -> Self {
        Self {
            accepted: 0,
            proposed: 0,
            batches: 0,
        }
    }

    pub fn record(&mut self, accepted: bool, scale: &mut f64) {
        self.proposed += 1;
        self.accepted += usize::from(accepted);
        if self.proposed == ADAPT_BATCH {
            let rate = self.accepted as f64 / ADAPT_BATCH as f64;
            self.batches += 1;
            *scale *= ((rate - TARGET_ACCEPTANCE) * 2.0 / (self.batches as f64).sqrt()).exp();
            self.accepted = 0;
            self.proposed = 0;
        }
    }
}

pub(crate) fn log_accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
    log_ratio >= 0.0 || rng.gen::<f64>().ln() < log_ratio
}

fn ball_chain<F>(risk_fn: &F, dim: usize, radius: f64, config: &GibbsConfig, seed: u64) -> ChainRun
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng: ChaCha8Rng = seeded(seed);
    let mut normal = BoxMuller::new();
    let mut theta = vec![0.0; dim];
    let mut risk = risk_fn(&theta);
    let mut scale = config.proposal_scale;
    let mut adapter = Adapter::new();
    let keep = config.chain_length - config.burn_in;
    let mut draws = Vec::with_capacity(keep * dim);
    let mut risks = Vec::with_capacity(keep);
    let (mut accepted, mut proposed) = (0, 0);
    let mut proposal = vec![0.0; dim];
    for step in 0..config.chain_length {
        for (p, t) in proposal.iter_mut().zip(&theta) {
            *p = t + scale * normal.sample(&mut rng);
        }
        let inside = proposal.iter().map(|v| v.abs()).sum::<f64>() <= radius;
        let mut ok = false;
        if inside {
            let new_risk = risk_fn(&proposal);
            if log_accept(&mut rng, -config.lambda * (new_risk - risk)) {
                theta.copy_from_slice(&proposal);
                risk = new_risk;
                ok = true;
            }
        }
        if step < config.burn_in {
            if config.adapt {
                adapter.record(ok, &mut scale);
            }
        } else {
            proposed += 1;
            accepted += usize::from(ok);
            draws.extend_from_slice(&theta);
            risks.push(risk);
        }
    }
    ChainRun {
        draws,
        risks,
        supports: None,
        accepted,
        proposed,
        scale,
    }
}

fn batch_means_se(chains: &[ChainRun]) -> f64 {
    const BATCHES: usize = 20;
    let mut means = Vec::new();
    for c in chains {
        let size = c.risks.len() / BATCHES;
        if size == 0 {
            continue;
        }
        for b in c.risks.chunks_exact(size).take(BATCHES) {
            means.push(b.iter().sum::<f64>() / size as f64);
        }
    }
    if means.len() < 2 {
        return f64::INFINITY;
    }
    let m = means.len() as f64;
    let mu = means.iter().sum::<f64>() / m;
    (means.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
}

/// Runs the chains in parallel and merges them with the `log_Z` estimate
/// from `prior_draws` independent draws of the (normalized) prior.
pub(crate) fn run_and_assemble<F, C>(
    risk_fn: &F,
    prior: &Prior,
    config: &GibbsConfig,
    chain: C,
) -> Result<PosteriorSample>
where
    F: Fn(&[f64]) -> f64 + Sync,
    C: Fn(u64) -> ChainRun + Sync,
{
    config.validate()?;
    prior.validate()?;
    let dim = prior.dim();
    let runs: Vec<ChainRun> = (0..config.chains)
        .into_par_iter()
        .map(|c| chain(replication_seed(config.seed, c)))
        .collect();

    let mut prior_rng = seeded(config.seed ^ PRIOR_STREAM);
    let mut theta = vec![0.0; dim];
    let prior_risks: Vec<f64> = (0..config.prior_draws)
        .map(|_| {
            prior.sample(&mut prior_rng, &mut theta);
            risk_fn(&theta)
        })
        .collect();

    let total: usize = runs.iter().map(|r| r.risks.len()).sum();
    let mean_emp_risk = runs.iter().flat_map(|r| &r.risks).sum::<f64>() / total as f64;
    let mean_emp_risk_se = batch_means_se(&runs);
    let kl = estimate_kl(mean_emp_risk, config.lambda, &prior_risks)?;
    let log_z = if config.lambda == 0.0 {
        prior.total_mass().ln()
    } else {
        kl.log_z + prior.total_mass().ln()
    };
    let kl_estimate = if config.lambda == 0.0 { 0.0 } else { -config.lambda * mean_emp_risk - log_z };
    let kl_std_error = (kl.std_error.powi(2) + (config.lambda * mean_emp_risk_se).powi(2)).sqrt();

    let mut theta_hat = vec![0.0; dim];
    for r in &runs {
        for d in r.draws.chunks_exact(dim.max(1)) {
            for (m, v) in theta_hat.iter_mut().zip(d) {
                *m += v;
            }
        }
    }
    theta_hat.iter_mut().for_each(|m| *m /= total as f64);

    let accepted: usize = runs.iter().map(|r| r.accepted).sum();
    let proposed: usize = runs.iter().map(|r| r.proposed).sum();
    let acceptance_rate = if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 };
    let mut warnings = Vec::new();
    if !(0.05..=0.95).contains(&acceptance_rate) {
        warnings.push(format!("acceptance rate {acceptance_rate:.3} outside [0.05, 0.95]"));
    }
    if kl_estimate < -3.0 * kl_std_error {
        warnings.push(format!("negative KL estimate {kl_estimate:.4} (se {kl_std_error:.4})"));
    }
    let proposal_scale = runs[0].scale;
    let supports = if runs[0].supports.is_some() {
        Some(runs.iter().flat_map(|r| r.supports.clone().unwrap_or_default()).collect())
    } else {
        None
    };
    Ok(PosteriorSample {
        dim,
        draws: runs.into_iter().flat_map(|r| r.draws).collect(),
        theta_hat: ParamVector(theta_hat),
        mean_emp_risk,
        mean_emp_risk_se,
        log_z,
        kl_estimate,
        kl_std_error,
        acceptance_rate,
        proposal_scale,
        supports,
        warnings,
    })
}

/// Random-walk Metropolis for `ρ(dθ) ∝ e^{-λ risk(θ)} dθ` on
/// `{‖θ‖₁ ≤ radius}`; proposals leaving the ball are rejected.
pub fn metropolis_ball<F>(risk_fn: F, dim: usize, radius: f64, config: &GibbsConfig) -> Result<PosteriorSample>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        return Err(Error::invalid("parameter dimension must be ≥ 1"));
    }
    let prior = Prior::BallUniform { dim, radius };
    run_and_assemble(&risk_fn, &prior, config, |seed| {
        ball_chain(&risk_fn, dim, radius, config, seed)
    })
}

/// Gibbs estimator under a uniform prior on an ℓ1 ball.
pub fn gibbs_mcmc(
    series: &TimeSeries,
    family: &PredictorFamily,
    prior: &Prior,
    loss: LossSpec,
    config: &GibbsConfig,
) -> Result<PosteriorSample> {
    let Prior::BallUniform { dim, radius } = *prior else {
        return Err(Error::invalid("random-walk sampler needs a ball-uniform prior"));
    };
    if dim != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            got: dim,
        });
    }
    let risk = EmpiricalRisk::new(series, family, loss)?;
    metropolis_ball(|t: &[f64]| risk.value(t), dim, radius, config)
}
