//! Learning stochastic reaction-system models from time-series snapshots.
//!
//! The core types are generic over the scalar type (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, with `*32` variants for `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dsl;
pub mod error;
pub mod grad;
pub mod io;
pub mod library;
pub mod loss;
pub mod model;
pub mod optimizer;
pub mod problems;
pub mod reparam;
pub mod rng;
pub mod scalar;
pub mod ssa;

pub use error::{Error, Result};
pub use library::{enumerate_library, ReactionLibrary};
pub use model::{SpeciesSet, State};
pub use problems::ProblemKind;
pub use rng::RngStream;
pub use scalar::Scalar;

pub type ReactionSystem = model::ReactionSystem<f64>;
pub type TimeSeries = ssa::TimeSeries<f64>;
pub type SnapshotGrid = ssa::SnapshotGrid<f64>;
pub type Model = dsl::Model<f64>;
pub type Objective = loss::Objective<f64>;
pub type EstimatorConfig = grad::EstimatorConfig<f64>;
pub type ReparamConfig = reparam::ReparamConfig<f64>;
pub type AdamState = optimizer::AdamState<f64>;
pub type ConvergenceTrace = optimizer::ConvergenceTrace<f64>;
pub type ProblemEncoding = problems::ProblemEncoding<f64>;

pub type ReactionSystem32 = model::ReactionSystem<f32>;
pub type TimeSeries32 = ssa::TimeSeries<f32>;
pub type SnapshotGrid32 = ssa::SnapshotGrid<f32>;
pub type Model32 = dsl::Model<f32>;
pub type Objective32 = loss::Objective<f32>;
pub type EstimatorConfig32 = grad::EstimatorConfig<f32>;
pub type ReparamConfig32 = reparam::ReparamConfig<f32>;
pub type AdamState32 = optimizer::AdamState<f32>;
pub type ConvergenceTrace32 = optimizer::ConvergenceTrace<f32>;
pub type ProblemEncoding32 = problems::ProblemEncoding<f32>;
