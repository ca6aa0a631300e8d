use alloc::string::String;
use alloc::vec::Vec;

use super::{in_reduction_order, paired, percent, require_variant, MetricId, MetricResult, Outcome};
use crate::config::{AccuracyReference, CoveragePolicy};
use crate::error::Result;
use crate::importance::{removal_order, Direction, PartImportance};
use crate::model::{ClassMode, ImageRecord};
use crate::planner::required_prefix_subsets;

/// Common level grid; images with different part counts are binned onto it.
pub const LEVEL_BINS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Index (1..=9) of the grid point nearest to `removed / parts`.
///
/// Exact halves round up; fractions below 0.1 or above 0.9 land on the end
/// bins.
pub fn level_bin(removed: usize, parts: usize) -> usize {
    debug_assert!(parts > 0);
    // floor(10 r + 1/2) in integer arithmetic
    ((20 * removed + parts) / (2 * parts)).clamp(1, 9)
}

/// Per-level correctness for one image as its parts are removed in
/// `direction` order. Each entry is `(bin index, prediction correct)`.
pub fn perturbation_outcome(
    rec: &ImageRecord,
    pi: &PartImportance,
    direction: Direction,
    reference: AccuracyReference,
    policy: CoveragePolicy,
) -> Result<Outcome<Vec<(usize, bool)>>> {
    let expected = match reference {
        AccuracyReference::OriginalPrediction => rec.original().predicted_class(),
        AccuracyReference::GroundTruth => rec.ground_truth(),
    };
    let order = removal_order(pi, direction);
    let p = order.len();
    let mut levels = Vec::with_capacity(p);
    for (k, subset) in required_prefix_subsets(&order).iter().enumerate() {
        match require_variant(rec, subset, policy)? {
            Ok(v) => levels.push((level_bin(k + 1, p), v.predicted_class() == expected)),
            Err(reason) => return Ok(Outcome::Skipped(reason)),
        }
    }
    Ok(Outcome::Evaluated(levels))
}

/// Bin accuracies pooled over images; the value is their mean over
/// non-empty bins.
pub fn reduce_perturbation(
    direction: Direction,
    method_id: &str,
    class_mode: ClassMode,
    outcomes: &[(&str, Outcome<Vec<(usize, bool)>>)],
) -> MetricResult {
    let mut correct = [0usize; 10];
    let mut total = [0usize; 10];
    let mut n_evaluated = 0;
    for i in in_reduction_order(outcomes) {
        if let Outcome::Evaluated(levels) = &outcomes[i].1 {
            n_evaluated += 1;
            for &(bin, ok) in levels {
                total[bin] += 1;
                correct[bin] += ok as usize;
            }
        }
    }
    let per_level: Vec<(f64, f64)> = (1..=9)
        .filter(|&b| total[b] > 0)
        .map(|b| (LEVEL_BINS[b - 1], percent(correct[b], total[b])))
        .collect();
    let value = (!per_level.is_empty()).then(|| per_level.iter().map(|l| l.1).sum::<f64>() / per_level.len() as f64);
    MetricResult {
        metric: match direction {
            Direction::MostFirst => MetricId::PerturbPositive,
            Direction::LeastFirst => MetricId::PerturbNegative,
        },
        method_id: String::from(method_id),
        class_mode,
        value,
        per_threshold: Vec::new(),
        per_level,
        n_evaluated,
        n_skipped: outcomes.len() - n_evaluated,
    }
}

/// Positive (`MostFirst`) or negative (`LeastFirst`) perturbation test.
/// `pis` are expected to be mean-per-part importances.
pub fn perturbation_curve(
    records: &[ImageRecord],
    pis: &[PartImportance],
    direction: Direction,
    reference: AccuracyReference,
    policy: CoveragePolicy,
) -> Result<MetricResult> {
    let pairs = paired(records, pis)?;
    let mut outcomes = Vec::with_capacity(pairs.len());
    for (rec, pi) in &pairs {
        outcomes.push((rec.image_id(), perturbation_outcome(rec, pi, direction, reference, policy)?));
    }
    let (method, mode) = pis
        .first()
        .map(|p| (p.method_id.as_str(), p.class_mode))
        .unwrap_or(("", ClassMode::Predicted));
    Ok(reduce_perturbation(direction, method, mode, &outcomes))
}
