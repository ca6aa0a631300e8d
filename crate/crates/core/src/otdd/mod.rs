//! Optimal-transport dataset distance.
//!
//! Points are compared with a ground cost that adds the squared feature
//! distance to the squared 2-Wasserstein distance between the Gaussians of
//! their classes. The dataset distance is the debiased Sinkhorn divergence
//! under that cost with uniform point weights.

mod cloud;
mod distance;
mod gaussian;
mod sinkhorn;

pub use cloud::LabeledPointCloud;
pub use distance::{otdd_distance, otdd_distance_with, pairwise_cost, DEFAULT_EPSILON_FRACTION, CostModel, OtddResult, OtddSettings};
pub use gaussian::{bures_w2_squared, bures_w2_squared_dense, class_gaussian, Covariance, GaussianSummary};
pub use sinkhorn::{sinkhorn, uniform_weights, SinkhornParams, SinkhornResult};
