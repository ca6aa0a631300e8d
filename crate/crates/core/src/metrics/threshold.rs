use alloc::string::String;
use alloc::vec::Vec;

use super::{in_reduction_order, paired, percent, require_variant, MetricId, MetricResult, Outcome};
use crate::config::{validate_thresholds, CoveragePolicy};
use crate::error::Result;
use crate::importance::{select_threshold_subset, Direction, PartImportance};
use crate::model::{ClassMode, ImageRecord};

/// Which event a threshold metric counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// Prediction unchanged after removal (PC).
    Preservation,
    /// Prediction changed after removal (DC).
    Deletion,
}

impl ThresholdKind {
    fn metric(self) -> MetricId {
        match self {
            ThresholdKind::Preservation => MetricId::Pc,
            ThresholdKind::Deletion => MetricId::Dc,
        }
    }
}

/// For each threshold, whether the prediction survives removal of the
/// threshold-covering part set in `direction`.
pub fn threshold_outcome(
    rec: &ImageRecord,
    pi: &PartImportance,
    thresholds: &[f64],
    direction: Direction,
    policy: CoveragePolicy,
) -> Result<Outcome<Vec<bool>>> {
    let original = rec.original().predicted_class();
    let mut preserved = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let subset = select_threshold_subset(pi, t, direction);
        match require_variant(rec, &subset, policy)? {
            Ok(v) => preserved.push(v.predicted_class() == original),
            Err(reason) => return Ok(Outcome::Skipped(reason)),
        }
    }
    Ok(Outcome::Evaluated(preserved))
}

/// Reduces per-image survival flags into PC or DC. The reported value is
/// the mean over thresholds.
pub fn reduce_threshold(
    kind: ThresholdKind,
    method_id: &str,
    class_mode: ClassMode,
    thresholds: &[f64],
    outcomes: &[(&str, Outcome<Vec<bool>>)],
) -> MetricResult {
    let mut hits = alloc::vec![0usize; thresholds.len()];
    let mut n_evaluated = 0;
    for i in in_reduction_order(outcomes) {
        if let Outcome::Evaluated(flags) = &outcomes[i].1 {
            n_evaluated += 1;
            for (h, &kept) in hits.iter_mut().zip(flags) {
                let counted = match kind {
                    ThresholdKind::Preservation => kept,
                    ThresholdKind::Deletion => !kept,
                };
                *h += counted as usize;
            }
        }
    }
    let (per_threshold, value) = if n_evaluated == 0 {
        (Vec::new(), None)
    } else {
        let per: Vec<(f64, f64)> = thresholds
            .iter()
            .zip(&hits)
            .map(|(&t, &h)| (t, percent(h, n_evaluated)))
            .collect();
        let mean = per.iter().map(|p| p.1).sum::<f64>() / per.len() as f64;
        (per, Some(mean))
    };
    MetricResult {
        metric: kind.metric(),
        method_id: String::from(method_id),
        class_mode,
        value,
        per_threshold,
        per_level: Vec::new(),
        n_evaluated,
        n_skipped: outcomes.len() - n_evaluated,
    }
}

/// PC or DC over a dataset with an explicit removal direction.
///
/// The shipped metrics fix the direction (PC removes least important
/// parts, DC the most important); this entry point lets both be evaluated
/// on the same subsets.
pub fn threshold_check(
    records: &[ImageRecord],
    pis: &[PartImportance],
    thresholds: &[f64],
    direction: Direction,
    kind: ThresholdKind,
    policy: CoveragePolicy,
) -> Result<MetricResult> {
    validate_thresholds(thresholds)?;
    let pairs = paired(records, pis)?;
    let mut outcomes = Vec::with_capacity(pairs.len());
    for (rec, pi) in &pairs {
        outcomes.push((rec.image_id(), threshold_outcome(rec, pi, thresholds, direction, policy)?));
    }
    let (method, mode) = pis
        .first()
        .map(|p| (p.method_id.as_str(), p.class_mode))
        .unwrap_or(("", ClassMode::Predicted));
    Ok(reduce_threshold(kind, method, mode, thresholds, &outcomes))
}

/// Preservation Check at threshold `t`: least important parts removed.
pub fn preservation_check(
    records: &[ImageRecord],
    pis: &[PartImportance],
    t: f64,
    policy: CoveragePolicy,
) -> Result<MetricResult> {
    threshold_check(records, pis, &[t], Direction::LeastFirst, ThresholdKind::Preservation, policy)
}

/// Deletion Check at threshold `t`: most important parts removed.
pub fn deletion_check(
    records: &[ImageRecord],
    pis: &[PartImportance],
    t: f64,
    policy: CoveragePolicy,
) -> Result<MetricResult> {
    threshold_check(records, pis, &[t], Direction::MostFirst, ThresholdKind::Deletion, policy)
}
