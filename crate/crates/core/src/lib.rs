//! Loss factorization for linear-odd margin losses.
//!
//! A margin loss `l` is *linear-odd* when `(l(x) - l(-x)) / 2 = a x`. For such
//! losses the empirical risk of a linear model splits into a label-free term
//! over the doubled sample and a term linear in the mean operator
//! `mu = E[y x]`:
//!
//! ```text
//! R_S(theta) = E_{S2x}[ l(sigma <theta, x>) ] + a <theta, mu>
//! ```
//!
//! Labels enter only through `mu`, so weak supervision (label noise, PU data)
//! reduces to estimating `mu`. [`solver`] implements stochastic and proximal
//! solvers on the factored objective; [`bounds`] computes the matching
//! generalization and robustness bounds.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); aliases for the
//! common instantiations are exported below.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod loss;
pub mod mean_op;
pub mod risk;
pub mod sample;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use loss::{AffineBound, LossSpec};
pub use mean_op::{MeanOperator, Provenance};
pub use risk::Model;
pub use sample::{DoubledSample, NoiseSpec, Sample};
pub use scalar::Scalar;
pub use solver::{SolverConfig, UpdateMode};

pub type LossSpec64 = LossSpec<f64>;
pub type LossSpec32 = LossSpec<f32>;
pub type Sample64 = Sample<f64>;
pub type Sample32 = Sample<f32>;
pub type DoubledSample64 = DoubledSample<f64>;
pub type DoubledSample32 = DoubledSample<f32>;
pub type MeanOperator64 = MeanOperator<f64>;
pub type MeanOperator32 = MeanOperator<f32>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolverConfig32 = SolverConfig<f32>;
