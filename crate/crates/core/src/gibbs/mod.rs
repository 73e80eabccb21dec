//! Gibbs (exponentially weighted aggregation) estimators
//! `ρ̂_λ(dθ) ∝ e^{-λ r_n(θ)} π(dθ)`, `θ̂_λ = ∫ θ ρ̂_λ(dθ)`.

mod finite;
mod kl;
mod mcmc;
mod prior;
mod rjmcmc;
mod select;

pub use finite::{gibbs_finite, FiniteGibbs};
pub use kl::{default_lambda, estimate_kl, KlEstimate};
pub use mcmc::{gibbs_mcmc, metropolis_ball, GibbsConfig, PosteriorSample};
pub use prior::{sparse_prior_weight, Prior};
pub use rjmcmc::{gibbs_rjmcmc, rjmcmc_with};
pub use select::{select_model, ModelCandidate, Selection};
