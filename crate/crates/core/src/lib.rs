//! Empirical-likelihood goodness-of-fit tests with a growing number of
//! constraints.
//!
//! The crate is organised bottom-up:
//!
//! - [`el_core`]: the dual Newton solver for the empirical likelihood ratio,
//!   with the spectral hull criterion and expansion diagnostics.
//! - [`constraints`]: cosine-basis constraint matrices for each test.
//! - [`distributions`]: chi-square and normal calibration, samplers.
//! - [`gof_tests`]: the tests themselves (fixed distribution, parametric
//!   family, symmetry, independence, regression coefficients).
//! - [`simulation`]: Monte Carlo power and level studies.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constraints;
pub mod distributions;
pub mod el_core;
pub mod error;
pub mod simulation;

pub use constraints::{
    constraints_fixed_dist, constraints_independence, constraints_parametric,
    constraints_regression, constraints_symmetry, empirical_uniform_ranks, phi, BasisSpec,
    MarginSpec, ParametricFamily, ParametricModel, RegressionMethod,
};
pub use distributions::{
    chisq_cdf, chisq_quantile, chisq_sf, normal_cdf, normal_quantile, CalibrationMethod, Cdf, Law,
};
pub use el_core::{
    hull_interior_check, quadratic_approx_gap, solve_dual, spectral_summary, ConstraintMatrix,
    ElSolution, SolverOptions, SpectralSummary,
};
pub use error::{ElError, Result};
pub use gof_tests::{
    default_basis_size, test_fixed_distribution, test_independence, test_parametric,
    test_regression_coef, test_symmetry, TestKind, TestResult,
};
