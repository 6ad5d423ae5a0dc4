//! Ultimate-loss rollup, the chain-ladder baseline, development factors and
//! the percentage-error metrics used to compare models.

mod ldf;
mod mack;
mod metrics;
pub mod published;
pub mod report;
mod ultimate;

pub use ldf::{ldf_from_forecast, LdfEntry, LdfTable};
pub use mack::{development_factors, mack_forecast, mack_point_estimate, MACK_LABEL};
pub use metrics::{evaluate, mape, percentage_errors, rmspe, CompanyResult, EvaluationReport};
pub use ultimate::{actual_ultimates, ultimate_losses, UltimateLoss};
