//! Robust phase retrieval with sparse outliers.
//!
//! The crate implements the l1 objectives `f_p(x) = || |Ax|^p - b ||_1` for
//! `p = 1, 2`, first-order solvers that recover a planted signal from sparsely
//! corrupted measurements, empirical certifiers for the structural properties
//! behind exact recovery (absolute growth, absolute range, sharpness), and a
//! seeded experiment harness for phase-transition sweeps.

pub mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod model;
pub mod props;
pub mod quadrature;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use instance::{
    plant_instance, sample_matrix, sample_signal, CorruptionSpec, NoiseModel, Problem, ProblemInstance, SupportModel,
};
pub use model::{
    dist_to_sign_pair, eval_objective, forward_map, phi, sigma_tail, subgradient, MeasurementModel, MeasurementVector,
    SensingMatrix, Signal,
};

/// Crate version recorded in manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
