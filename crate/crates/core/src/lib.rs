//! Sequential evidence: construction, certification and stopping analysis
//! of e-processes over finite alphabets.
//!
//! Numeric code is generic over [`scalar::Real`] (`f32`, `f64`); exact
//! enumeration additionally runs over [`Rational`]. Monte Carlo drivers are
//! `f64` only.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod boundary;
pub mod codes;
pub mod eprocess;
pub mod error;
pub mod extras;
pub mod harness;
pub mod prob;
pub mod rng;
pub mod scalar;
pub mod scoring;

pub use error::{EvidenceError, Result};

/// Exact rationals for normalizers, conditionals and liftability masses.
pub type Rational = num_rational::BigRational;

pub type DistributionF64 = prob::Distribution<f64>;
pub type DistributionF32 = prob::Distribution<f32>;
pub type LikelihoodRatioF64 = eprocess::LikelihoodRatio<f64>;
pub type BayesFactorF64 = eprocess::BayesFactor<f64>;
pub type DiscretePriorF64 = eprocess::DiscretePrior<f64>;
pub type DynProcessF64 = Box<dyn eprocess::EvidenceProcess<f64>>;
pub type ExactCodeFamily = codes::CodeLengthFamily<Rational>;
