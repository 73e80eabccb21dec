//! Reversible-jump sampler over sparse lag supports.
//!
//! The state is a support `J ⊆ {1..q}` with coefficients `θ_J`, stored as a
//! full `q`-vector that is zero off `J`. The target is
//! `p_J / Vol_J · e^{-λ r(θ)}` on `{‖θ_J‖₁ ≤ L}`. Moves: birth (activate a
//! uniformly chosen inactive lag with a coefficient uniform on `[-L′, L′]`,
//! `L′ = L - ‖θ‖₁`), death (drop a uniformly chosen active lag), and a
//! Gaussian random walk on the active coefficients.

use rand::Rng;

use super::mcmc::{log_accept, run_and_assemble, Adapter, ChainRun, GibbsConfig, PosteriorSample};
use super::prior::{ln_ball_volume, ln_choose, Prior};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::predictors::PredictorFamily;
use crate::risk::EmpiricalRisk;
use crate::rng::{seeded, BoxMuller};
use crate::series::TimeSeries;

const MOVE_PROB: f64 = 1.0 / 3.0;

struct Target {
    q: usize,
    radius: f64,
    /// `ln p_s - ln Vol_s` for each support size `s`.
    log_density: Vec<f64>,
}

impl Target {
    fn new(q: usize, radius: f64) -> Self {
        let log_density = (0..=q)
            .map(|s| {
                let ln_p = -((s + 1) as f64) * std::f64::consts::LN_2 - ln_choose(q, s);
                ln_p - ln_ball_volume(s, radius)
            })
            .collect();
        Self { q, radius, log_density }
    }

    fn birth_prob(&self, s: usize) -> f64 {
        if s < self.q {
            MOVE_PROB
        } else {
            0.0
        }
    }

    fn death_prob(&self, s: usize) -> f64 {
        if s > 0 {
            MOVE_PROB
        } else {
            0.0
        }
    }

    /// Log Metropolis-Hastings ratio of a birth from size `s` with residual
    /// budget `budget`, excluding the risk term.
    fn log_birth_ratio(&self, s: usize, budget: f64) -> f64 {
        let target = self.log_density[s + 1] - self.log_density[s];
        let reverse = (self.death_prob(s + 1) / (s + 1) as f64).ln();
        let forward = (self.birth_prob(s) / (self.q - s) as f64).ln() - (2.0 * budget).ln();
        target + reverse - forward
    }
}

fn rj_chain<F>(risk_fn: &F, target: &Target, config: &GibbsConfig, seed: u64) -> ChainRun
where
    F: Fn(&[f64]) -> f64,
{
    let q = target.q;
    let mut rng = seeded(seed);
    let mut normal = BoxMuller::new();
    let mut theta = vec![0.0; q];
    let mut mask: u64 = 0;
    let mut risk = risk_fn(&theta);
    let mut scale = config.proposal_scale;
    let mut adapter = Adapter::new();
    let keep = config.chain_length - config.burn_in;
    let mut draws = Vec::with_capacity(keep * q);
    let mut risks = Vec::with_capacity(keep);
    let mut supports = Vec::with_capacity(keep);
    let (mut accepted, mut proposed) = (0, 0);
    let mut proposal = vec![0.0; q];

    for step in 0..config.chain_length {
        let s = mask.count_ones() as usize;
        let u: f64 = rng.gen();
        let b = target.birth_prob(s);
        let d = target.death_prob(s);
        let mut ok = false;
        let mut attempted = true;
        let mut within = false;
        if u < b {
            let budget = target.radius - theta.iter().map(|v| v.abs()).sum::<f64>();
            if budget > 0.0 {
                let pick = rng.gen_range(0..q - s);
                let lag = (0..q).filter(|j| mask >> j & 1 == 0).nth(pick).expect("inactive lag");
                let value = rng.gen_range(-budget..=budget);
                proposal.copy_from_slice(&theta);
                proposal[lag] = value;
                let new_risk = risk_fn(&proposal);
                let log_ratio = target.log_birth_ratio(s, budget) - config.lambda * (new_risk - risk);
                if value != 0.0 && log_accept(&mut rng, log_ratio) {
                    theta.copy_from_slice(&proposal);
                    mask |= 1 << lag;
                    risk = new_risk;
                    ok = true;
                }
            }
        } else if u < b + d {
            let pick = rng.gen_range(0..s);
            let lag = (0..q).filter(|j| mask >> j & 1 == 1).nth(pick).expect("active lag");
            proposal.copy_from_slice(&theta);
            proposal[lag] = 0.0;
            let budget = target.radius - proposal.iter().map(|v| v.abs()).sum::<f64>();
            if budget > 0.0 {
                let new_risk = risk_fn(&proposal);
                let log_ratio = -target.log_birth_ratio(s - 1, budget) - config.lambda * (new_risk - risk);
                if log_accept(&mut rng, log_ratio) {
                    theta.copy_from_slice(&proposal);
                    mask &= !(1 << lag);
                    risk = new_risk;
                    ok = true;
                }
            }
        } else if s > 0 {
            within = true;
            proposal.copy_from_slice(&theta);
            for j in (0..q).filter(|j| mask >> j & 1 == 1) {
                proposal[j] += scale * normal.sample(&mut rng);
            }
            // a coordinate landing exactly on 0 would silently change the support
            let valid = proposal.iter().map(|v| v.abs()).sum::<f64>() <= target.radius
                && (0..q).all(|j| mask >> j & 1 == 0 || proposal[j] != 0.0);
            if valid {
                let new_risk = risk_fn(&proposal);
                if log_accept(&mut rng, -config.lambda * (new_risk - risk)) {
                    theta.copy_from_slice(&proposal);
                    risk = new_risk;
                    ok = true;
                }
            }
        } else {
            attempted = false;
        }

        if step < config.burn_in {
            if config.adapt && within {
                adapter.record(ok, &mut scale);
            }
        } else {
            if attempted {
                proposed += 1;
                accepted += usize::from(ok);
            }
            draws.extend_from_slice(&theta);
            risks.push(risk);
            supports.push(mask);
        }
    }
    ChainRun {
        draws,
        risks,
        supports: Some(supports),
        accepted,
        proposed,
        scale,
    }
}

/// Reversible-jump sampler for an arbitrary risk over full `p_lags`-vectors.
pub fn rjmcmc_with<F>(risk_fn: F, p_lags: usize, radius: f64, config: &GibbsConfig) -> Result<PosteriorSample>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if p_lags == 0 {
        return Err(Error::invalid("p_lags must be ≥ 1"));
    }
    let prior = Prior::SparseMixture { p_lags, radius };
    prior.validate()?;
    let target = Target::new(p_lags, radius);
    run_and_assemble(&risk_fn, &prior, config, |seed| rj_chain(&risk_fn, &target, config, seed))
}

/// Gibbs estimator over sparse autoregressions `X̂_t = Σ_{j∈J} θ_j X_{t-j}`
/// with the sparse mixture prior of radius `radius`.
pub fn gibbs_rjmcmc(
    series: &TimeSeries,
    p_lags: usize,
    radius: f64,
    loss: LossSpec,
    config: &GibbsConfig,
) -> Result<PosteriorSample> {
    if p_lags == 0 {
        return Err(Error::invalid("p_lags must be ≥ 1"));
    }
    let family = PredictorFamily::linear_ar(p_lags, false, radius)?;
    let risk = EmpiricalRisk::new(series, &family, loss)?;
    rjmcmc_with(|t: &[f64]| risk.value(t), p_lags, radius, config)
}
