//! Posterior sampling and optimism-based exploration for finite-horizon
//! tabular MDPs, with the benchmark environments, a Monte Carlo toolkit for
//! stochastic-optimism checks, and an experiment harness.
//!
//! Planning and posterior bookkeeping are generic over [`Scalar`]; the
//! aliases below fix the common instantiations.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod environments;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod optimism;
pub mod posterior;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub use num_rational::Rational64;

pub type Mdp = mdp::TabularMdp<f64>;
pub type Mdp32 = mdp::TabularMdp<f32>;
pub type ExactMdp = mdp::TabularMdp<Rational64>;
pub type QTable = mdp::QTable<f64>;
pub type ExactQTable = mdp::QTable<Rational64>;
pub type Posterior = posterior::PosteriorState<f64>;
pub type Posterior32 = posterior::PosteriorState<f32>;
pub type ExactPosterior = posterior::PosteriorState<Rational64>;
