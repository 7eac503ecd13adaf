//! Inverse spectral problem for three-diagonal Sturm-Liouville (Jacobi) operators on a uniform
//! grid over `[0, π]`, solved with the discrete Gel'fand-Levitan equation.
//!
//! Pipeline: [`eigensolve`] and [`extract_spectral_data`] give levels and weight factors;
//! [`build_q`] and [`solve_gl`] turn a reference system plus target data into the transformation
//! kernel; [`invert`] recovers the new operator by synthesis, by recursion, or both.
//! The [`continuum`] module holds the refinement study and continuum-limit checks.

// `!(x > 0.0)` style comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod continuum;
pub mod error;
pub mod gl;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod recovery;
pub mod spectral;
pub mod tolerances;

pub use continuum::{
    diagonal_derivative, effective_potential, goursat_residual, invert_right_edge,
    run_refinement_study, Perturbation, RefinementStudy, StudyResults,
};
pub use error::{Error, Result};
pub use gl::{
    build_q, gram_schmidt_oracle, k_cross_check, orthonormalize, solve_gl, transformed_solutions,
    DiagonalConvention, InversionProblem, QKernel, TransformKernel,
};
pub use grid::Grid;
pub use operator::{assemble, reflect, reflect_with_edge, DenseMatrix, JacobiOperator};
pub use recovery::{
    intermediate_operator, invert, recover_recursive, synthesize_operator, Diagnostics,
    InvertOptions, Method, RecoveredSystem,
};
pub use spectral::{
    eigensolve, extract_right_spectral_data, extract_spectral_data, parseval_defect,
    regular_solution, regular_solutions, weighted_orthogonality_defect, EigenSystem, Orientation,
    RegularSolutionTable, SpectralData,
};
pub use tolerances::Tolerances;
