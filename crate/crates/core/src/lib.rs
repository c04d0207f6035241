//! Compressive-sensing recovery with generative priors.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. Everything here is pure computation: file IO, the CLI and the
//! experiment runner live in the companion `ganprior` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod generator;
pub mod math;
pub mod metrics;
pub mod numkit;
pub mod operators;
pub mod solvers;
pub mod theory;

pub use generator::{gpw1, synthetic_net, synthetic_net_with_output, Activation, ForwardTape, GeneratorError, GeneratorNet, Layer};
pub use metrics::{evaluate, Metrics, MetricsError};
pub use numkit::{gaussian_matrix, random_orthonormal, sample_standard_normal, GaussianScale, Matrix, RngStream};
pub use operators::{Basis, LinearOperator, OperatorError};
pub use solvers::{
    ista_lasso, latent_gd, pgd_gan, project_to_range, IstaConfig, LatentInit, Projection,
    RecoveryResult, SolverConfig, SolverError, SolverWarning,
};
pub use theory::{
    admissible_step_interval, contraction_factor, estimate_srec, spectral_norm, RatioStats,
    SrecEstimate, TheoryError, TheoryReport,
};
