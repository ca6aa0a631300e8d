use alloc::string::String;

use crate::model::{ClassId, ClassMode};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("logit vector is empty")]
    EmptyLogits,
    #[error("class {class} out of range for {num_classes} classes")]
    ClassOutOfRange { class: usize, num_classes: usize },
    #[error("expected {expected} logits, found {found}")]
    LogitLength { expected: usize, found: usize },
    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },
    #[error("raster is {found_h}x{found_w}, expected {expected_h}x{expected_w}")]
    DimensionMismatch {
        expected_h: usize,
        expected_w: usize,
        found_h: usize,
        found_w: usize,
    },
    #[error("invalid part annotation: {0}")]
    InvalidAnnotation(String),
    #[error("invalid part set: {0}")]
    InvalidPartSet(String),
    #[error("budget {budget} cannot cover the {parts} single-part deletions")]
    BudgetTooSmall { budget: usize, parts: usize },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("image {image_id}: variant {subset} is missing")]
    MissingVariant { image_id: String, subset: String },
    #[error("image {image_id}: no attribution for method {method_id} ({class_mode})")]
    MissingAttribution {
        image_id: String,
        method_id: String,
        class_mode: ClassMode,
    },
    #[error("image {image_id}: variant {subset} is keyed under a different image")]
    VariantMismatch { image_id: String, subset: String },
    #[error("feature dimension {found} does not match {expected}")]
    FeatureDimension { expected: usize, found: usize },
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error("class {0} has no points")]
    ClassAbsent(ClassId),
    #[error("invalid transport problem: {0}")]
    InvalidTransport(String),
    #[error(
        "matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}, \
         max eigenvalue {max_eigenvalue:e}, condition {condition:e}"
    )]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        condition: f64,
    },
}
