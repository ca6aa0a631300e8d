//! Part-level faithfulness evaluation for image attribution methods.
//!
//! Pixel attributions are pooled into part importances, part subsets are
//! removed (inpainted by an external adapter) and the model's logits on the
//! perturbed variants are compared against the original prediction. The
//! crate computes Preservation Check, Deletion Check, Single Deletion and
//! part-wise perturbation curves, and an optimal-transport dataset distance
//! used to measure how far a perturbed dataset drifts from the original.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std`; file formats, parallel scheduling and the CLI live in the
//! companion `ing` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod config;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod importance;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod otdd;
pub mod planner;

pub use config::{AccuracyReference, Aggregation, CoveragePolicy, EvaluationConfig, ScoreFn};
pub use error::{Error, Result};
pub use importance::{Direction, PartImportance};
pub use metrics::{MetricId, MetricResult};
pub use model::{
    AttributionMap, ClassId, ClassMode, ImageRecord, LogitRecord, PartAnnotation, PartId, PartSet,
};
pub use planner::PerturbationPlan;
