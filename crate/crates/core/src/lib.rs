//! Numerical solver and regularity diagnostics for stationary nonlocal
//! Bellman-Isaacs equations
//!
//! ```text
//! max_alpha min_beta [ f + c u + b . grad u + a (-Lap)^{1/2} u ] = 0
//! ```
//!
//! on one- and two-dimensional grids with finite control sets.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! and `*F32` aliases below fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod config;
pub mod envelopes;
pub mod error;
pub mod fraclap;
pub mod grid;
pub mod problem;
pub mod regularity;
pub mod scalar;
pub mod solver;

pub use config::{Descriptor, ProblemConfig, Source};
pub use envelopes::{gamma_gap, inf_convolution, sup_convolution, EnvelopeResult};
pub use error::{Error, Result};
pub use fraclap::{
    eval_i_kappa, eval_i_sup_kappa, fraclap, normalization_constant, KernelQuadrature,
};
pub use grid::{DomainGeometry, Extension, GridFunction};
pub use problem::{
    bracket_bounds, effective_constants, reduce_by_diffusion, validate_assumptions,
    AssumptionReport, CoefficientField, ControlGrid, PointCoefficients, ProblemSpec,
    ReducedProblem,
};
pub use scalar::Real;
pub use solver::{
    comparison_check, residual, solve, ComparisonOutcome, SchemeConfig, SolverReport, StepRule,
};

/// Crate version, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type GridFunctionF64 = GridFunction<f64>;
pub type GridFunctionF32 = GridFunction<f32>;
pub type DomainGeometryF64 = DomainGeometry<f64>;
pub type DomainGeometryF32 = DomainGeometry<f32>;
pub type ProblemSpecF64 = ProblemSpec<f64>;
pub type ProblemSpecF32 = ProblemSpec<f32>;
pub type AssumptionReportF64 = AssumptionReport<f64>;
pub type SchemeConfigF64 = SchemeConfig<f64>;
pub type SolverReportF64 = SolverReport<f64>;
pub type SolverReportF32 = SolverReport<f32>;
pub type KernelQuadratureF64 = KernelQuadrature<f64>;
pub type CascadeTableF64 = regularity::CascadeTable<f64>;
pub type LipschitzCertificateF64 = regularity::LipschitzCertificate<f64>;
