//! Benchmark models and small oracle models.

mod burgers;
mod fhn;
pub mod toy;

pub use burgers::{
    burgers_drift, burgers_true_cdf, burgers_true_cdf_at, BurgersKernel, BurgersModel,
    BURGERS_SIGMA2,
};
pub use fhn::{FhnModel, FhnParams};
pub use toy::{toy_models, LocalModel};
