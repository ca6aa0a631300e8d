//! Preservation Check, Deletion Check, Single Deletion and perturbation
//! curves.
//!
//! Every metric is split into a per-image step that returns an [`Outcome`]
//! and a reduction over outcomes. Reductions always visit images in
//! ascending `image_id` order, so the result does not depend on input order
//! or on how the per-image work was scheduled.

mod perturbation;
mod single_deletion;
mod spearman;
mod threshold;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use perturbation::{level_bin, perturbation_curve, perturbation_outcome, reduce_perturbation, LEVEL_BINS};
pub use single_deletion::{reduce_single_deletion, single_deletion, single_deletion_outcome};
pub use spearman::{fractional_ranks, spearman_rho};
pub use threshold::{
    deletion_check, preservation_check, reduce_threshold, threshold_check, threshold_outcome, ThresholdKind,
};

use crate::config::CoveragePolicy;
use crate::error::{Error, Result};
use crate::model::{ClassMode, ImageRecord, LogitRecord, PartSet};
use crate::importance::PartImportance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MetricId {
    #[cfg_attr(feature = "serde", serde(rename = "PC"))]
    Pc,
    #[cfg_attr(feature = "serde", serde(rename = "SD"))]
    Sd,
    #[cfg_attr(feature = "serde", serde(rename = "DC"))]
    Dc,
    #[cfg_attr(feature = "serde", serde(rename = "perturb_positive"))]
    PerturbPositive,
    #[cfg_attr(feature = "serde", serde(rename = "perturb_negative"))]
    PerturbNegative,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Sd,
        MetricId::Pc,
        MetricId::Dc,
        MetricId::PerturbPositive,
        MetricId::PerturbNegative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::Pc => "PC",
            MetricId::Sd => "SD",
            MetricId::Dc => "DC",
            MetricId::PerturbPositive => "perturb_positive",
            MetricId::PerturbNegative => "perturb_negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MetricId::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One metric for one (method, class mode), in percent.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricResult {
    pub metric: MetricId,
    pub method_id: String,
    pub class_mode: ClassMode,
    /// `None` when no image could be evaluated.
    pub value: Option<f64>,
    /// `(t, percent)` for threshold metrics.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub per_threshold: Vec<(f64, f64)>,
    /// `(level fraction, accuracy percent)` for perturbation curves.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub per_level: Vec<(f64, f64)>,
    pub n_evaluated: usize,
    pub n_skipped: usize,
}

/// Why an image did not contribute to a metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    MissingVariant(PartSet),
    MissingAttribution,
    TooFewParts,
    UndefinedCorrelation,
}

/// Result of the per-image step of a metric.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Evaluated(T),
    Skipped(SkipReason),
}

impl<T> Outcome<T> {
    pub fn evaluated(&self) -> Option<&T> {
        match self {
            Outcome::Evaluated(v) => Some(v),
            Outcome::Skipped(_) => None,
        }
    }
}

/// `100 * count / n`, computed from whichever side of `n / 2` keeps
/// complementary counts summing to exactly 100.
pub(crate) fn percent(count: usize, n: usize) -> f64 {
    debug_assert!(n > 0 && count <= n);
    if 2 * count <= n {
        100.0 * count as f64 / n as f64
    } else {
        100.0 - 100.0 * (n - count) as f64 / n as f64
    }
}

/// Looks up a variant, applying the coverage policy when it is absent.
pub(crate) fn require_variant<'a>(
    rec: &'a ImageRecord,
    subset: &PartSet,
    policy: CoveragePolicy,
) -> Result<core::result::Result<&'a LogitRecord, SkipReason>> {
    match rec.variant(subset) {
        Some(v) => Ok(Ok(v)),
        None => match policy {
            CoveragePolicy::SkipMissing => Ok(Err(SkipReason::MissingVariant(subset.clone()))),
            CoveragePolicy::FailMissing => Err(Error::MissingVariant {
                image_id: rec.image_id().into(),
                subset: subset.key(),
            }),
        },
    }
}

/// Pairs records with importances positionally, checking the image ids agree.
pub(crate) fn paired<'a>(
    records: &'a [ImageRecord],
    pis: &'a [PartImportance],
) -> Result<Vec<(&'a ImageRecord, &'a PartImportance)>> {
    if records.len() != pis.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "{} records but {} importance tables",
            records.len(),
            pis.len()
        )));
    }
    records
        .iter()
        .zip(pis)
        .map(|(r, p)| {
            if r.image_id() == p.image_id {
                Ok((r, p))
            } else {
                Err(Error::InvalidConfig(alloc::format!(
                    "importance for {} paired with image {}",
                    p.image_id,
                    r.image_id()
                )))
            }
        })
        .collect()
}

/// Sorts `(image_id, outcome)` pairs into reduction order.
pub(crate) fn in_reduction_order<T>(outcomes: &[(&str, Outcome<T>)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..outcomes.len()).collect();
    idx.sort_by(|&a, &b| outcomes[a].0.cmp(outcomes[b].0));
    idx
}
