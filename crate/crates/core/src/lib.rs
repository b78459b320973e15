//! Simulation of McKean-Vlasov (distribution-dependent) SDEs.
//!
//! Three spatial discretizations of the Euler scheme are provided:
//!
//! * the interacting particle method ([`schemes::particle`]),
//! * the deterministic recursive quantization scheme in dimension one
//!   ([`schemes::recursive`]),
//! * the hybrid particle-quantization scheme ([`schemes::hybrid`]).
//!
//! The crate is `no_std` and only needs `alloc`. Transcendental functions come
//! from `libm`, so results are bitwise reproducible across platforms for a
//! given seed. File formats, reporting and the command line live in the `mvq`
//! companion crate.

#![no_std]
#![deny(unsafe_code)]
#![warn(missing_debug_implementations)]
// `!(a < b)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod grid;
pub mod math;
pub mod measure;
pub mod metrics;
pub mod model;
pub mod models;
pub mod quantization;
pub mod rng;
pub mod schemes;

pub use error::{CoreError, Result};
pub use grid::TimeGrid;
pub use measure::{DiscreteMeasure, MeasureView, ParticleEnsemble};
pub use model::{
    evaluate_diffusion, evaluate_drift, FrozenCoefficients, InitialLaw, MeanFieldModel,
    VlasovKernel,
};
pub use quantization::{GaussianMixture1D, Quantizer, Voronoi1D};
pub use rng::RngStream;
