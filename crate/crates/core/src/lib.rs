//! Structure learning for tree-structured Ising models whose samples pass through independent
//! bit-flip noise with unknown, unequal flip probabilities.
//!
//! Noise makes a tree identifiable only up to its equivalence class: within each cluster of an
//! internal node and its leaves, any member may play the internal node. [`learner::find_tree`]
//! recovers one member of that class from noisy moments, [`equivalence`] scores results,
//! [`baseline`] provides Chow-Liu for comparison and [`oracle`] supplies exact ground truth by
//! enumeration for small models.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the plain type names default to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` style checks reject NaN on purpose

pub mod baseline;
pub mod categorizer;
pub mod equivalence;
pub mod error;
pub mod estimator;
pub mod generate;
pub mod io;
pub mod learner;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod sampler;
pub mod scalar;
pub mod tree;

pub use categorizer::{ProximalSets, StarVerdict};
pub use equivalence::{CanonicalKey, EquivalenceClass};
pub use error::{Error, Result};
pub use estimator::{MomentEstimate, MomentSource};
pub use learner::LearnedEdges;
pub use model::{AssumptionParams, IsingModel, NoiseSpec, Violation};
pub use noise::{FlipEstimate, SampleBound, Thresholds};
pub use oracle::JointDistribution;
pub use sampler::SampleBatch;
pub use scalar::Scalar;
pub use tree::TreeGraph;

pub type IsingModelF32 = IsingModel<f32>;
pub type IsingModelF64 = IsingModel<f64>;
pub type MomentEstimateF32 = MomentEstimate<f32>;
pub type MomentEstimateF64 = MomentEstimate<f64>;
pub type NoiseSpecF32 = NoiseSpec<f32>;
pub type NoiseSpecF64 = NoiseSpec<f64>;
pub type AssumptionParamsF32 = AssumptionParams<f32>;
pub type AssumptionParamsF64 = AssumptionParams<f64>;
