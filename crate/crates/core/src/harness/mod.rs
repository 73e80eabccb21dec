//! Simulation studies, the least-squares/AIC baseline, and the rolling
//! quantile backtest with fan-chart export.

pub mod aic;
pub mod backtest;
pub mod experiments;
pub mod fanchart;

pub use aic::{aic_select, cls_fit, AicSelection, ArFit};
pub use backtest::{backtest_quantile, insee_reference, BacktestConfig, BacktestReport, Coverage, DEFAULT_TAUS};
pub use experiments::{
    run_parametric_experiment, run_sparse_experiment, Estimator, ExperimentResult, ExperimentSpec, ExperimentTable,
};
pub use fanchart::fanchart_export;
