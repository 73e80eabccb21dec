//! Statistical-learning forecasters for stationary time series.
//!
//! The crate covers the full pipeline from data to guarantees:
//!
//! - [`series`]: containers, CSV ingestion and seeded simulators;
//! - [`losses`]: Lipschitz losses `ℓ(x, x') = g(x - x')` (absolute, quadratic, quantile);
//! - [`predictors`]: lag-window forecasters that are linear in their parameters;
//! - [`risk`]: empirical risk and the ℓ1-constrained empirical risk minimizer;
//! - [`gibbs`]: exponentially weighted (Gibbs) aggregation, exact and by MCMC;
//! - [`bounds`]: oracle-inequality remainder calculators;
//! - [`harness`]: simulation studies, the AIC baseline and the quantile backtest.

pub mod bounds;
pub mod error;
pub mod gibbs;
pub mod harness;
pub mod losses;
pub mod predictors;
pub mod risk;
pub mod rng;
pub mod series;

pub use error::{Error, Result};
pub use losses::LossSpec;
pub use predictors::{Basis, FamilyKind, ParamVector, PredictorFamily};
pub use series::TimeSeries;
