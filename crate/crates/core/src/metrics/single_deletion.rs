use alloc::string::String;
use alloc::vec::Vec;

use super::{in_reduction_order, paired, require_variant, MetricId, MetricResult, Outcome, SkipReason};
use crate::config::{CoveragePolicy, ScoreFn};
use crate::error::Result;
use crate::importance::PartImportance;
use crate::metrics::spearman_rho;
use crate::model::{ClassMode, ImageRecord, PartSet};

/// Rank correlation between claimed part importances and the drop in class
/// score when each part is removed on its own.
pub fn single_deletion_outcome(
    rec: &ImageRecord,
    pi: &PartImportance,
    class_mode: ClassMode,
    score_fn: ScoreFn,
    policy: CoveragePolicy,
) -> Result<Outcome<f64>> {
    let parts = rec.annotation().part_ids();
    if parts.len() < 2 {
        return Ok(Outcome::Skipped(SkipReason::TooFewParts));
    }
    let original = rec.original();
    let class = match class_mode {
        ClassMode::Predicted => original.predicted_class(),
        ClassMode::Target => rec.ground_truth(),
    };
    let base = original.class_score(class, score_fn)?;
    let mut importances = Vec::with_capacity(parts.len());
    let mut drops = Vec::with_capacity(parts.len());
    for &part in parts {
        let variant = match require_variant(rec, &PartSet::singleton(part), policy)? {
            Ok(v) => v,
            Err(reason) => return Ok(Outcome::Skipped(reason)),
        };
        importances.push(pi.get(part).unwrap_or(0.0));
        drops.push(base - variant.class_score(class, score_fn)?);
    }
    Ok(match spearman_rho(&importances, &drops)? {
        Some(rho) => Outcome::Evaluated(rho),
        None => Outcome::Skipped(SkipReason::UndefinedCorrelation),
    })
}

/// `100 * (1/2 + mean(rho) / 2)` over evaluated images.
pub fn reduce_single_deletion(method_id: &str, class_mode: ClassMode, outcomes: &[(&str, Outcome<f64>)]) -> MetricResult {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in in_reduction_order(outcomes) {
        if let Outcome::Evaluated(rho) = outcomes[i].1 {
            sum += rho;
            n += 1;
        }
    }
    let value = (n > 0).then(|| (50.0 + 50.0 * (sum / n as f64)).clamp(0.0, 100.0));
    MetricResult {
        metric: MetricId::Sd,
        method_id: String::from(method_id),
        class_mode,
        value,
        per_threshold: Vec::new(),
        per_level: Vec::new(),
        n_evaluated: n,
        n_skipped: outcomes.len() - n,
    }
}

pub fn single_deletion(
    records: &[ImageRecord],
    pis: &[PartImportance],
    class_mode: ClassMode,
    score_fn: ScoreFn,
    policy: CoveragePolicy,
) -> Result<MetricResult> {
    let pairs = paired(records, pis)?;
    let mut outcomes = Vec::with_capacity(pairs.len());
    for (rec, pi) in &pairs {
        outcomes.push((rec.image_id(), single_deletion_outcome(rec, pi, class_mode, score_fn, policy)?));
    }
    let method = pis.first().map(|p| p.method_id.as_str()).unwrap_or("");
    Ok(reduce_single_deletion(method, class_mode, &outcomes))
}
