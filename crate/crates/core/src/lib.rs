//! Optimistic reinforcement learning on continuous state-action spaces by
//! local linear (Taylor) approximation over an ε-cover.
//!
//! The numerical layers ([`geometry`], [`features`], [`regression`]) are
//! generic over the [`Scalar`] type; concrete `f64`/`f32` aliases live at the
//! crate root. Environments, the learner, the oracles and the experiment
//! harness work in `f64`.

// Guards written as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cinderella;
pub mod envs;
pub mod error;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod regression;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Partition64 = geometry::Partition<f64>;
pub type Partition32 = geometry::Partition<f32>;
pub type TaylorFeatureMap64 = features::TaylorFeatureMap<f64>;
pub type TaylorFeatureMap32 = features::TaylorFeatureMap<f32>;
pub type RidgeState64 = regression::RidgeState<f64>;
pub type RidgeState32 = regression::RidgeState<f32>;
