//! All metrics for one (method, class mode) in two steps: an independent
//! per-image evaluation, then an order-fixed reduction.

use alloc::string::String;
use alloc::vec::Vec;

use crate::config::{Aggregation, CoveragePolicy, EvaluationConfig};
use crate::error::{Error, Result};
use crate::importance::{aggregate, Direction};
use crate::metrics::{
    perturbation_outcome, reduce_perturbation, reduce_single_deletion, reduce_threshold, single_deletion_outcome,
    threshold_outcome, MetricResult, Outcome, SkipReason, ThresholdKind,
};
use crate::model::ImageRecord;

/// Per-image outcomes of every metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEvaluation {
    pub image_id: String,
    pub preservation: Outcome<Vec<bool>>,
    pub deletion: Outcome<Vec<bool>>,
    pub single_deletion: Outcome<f64>,
    pub positive: Outcome<Vec<(usize, bool)>>,
    pub negative: Outcome<Vec<(usize, bool)>>,
    /// Some part importance was negative and got clamped for the threshold
    /// selection.
    pub clamped: bool,
}

impl ImageEvaluation {
    fn skipped(image_id: &str, reason: SkipReason) -> Self {
        ImageEvaluation {
            image_id: String::from(image_id),
            preservation: Outcome::Skipped(reason.clone()),
            deletion: Outcome::Skipped(reason.clone()),
            single_deletion: Outcome::Skipped(reason.clone()),
            positive: Outcome::Skipped(reason.clone()),
            negative: Outcome::Skipped(reason),
            clamped: false,
        }
    }
}

/// Evaluates one image for `method_id` under `config`.
///
/// PC, DC and SD use `config.aggregation`; perturbation curves always use
/// mean-per-part importances.
pub fn evaluate_image(rec: &ImageRecord, method_id: &str, config: &EvaluationConfig) -> Result<ImageEvaluation> {
    let Some(attr) = rec.attribution(method_id, config.class_mode) else {
        return match config.coverage_policy {
            CoveragePolicy::SkipMissing => Ok(ImageEvaluation::skipped(rec.image_id(), SkipReason::MissingAttribution)),
            CoveragePolicy::FailMissing => Err(Error::MissingAttribution {
                image_id: rec.image_id().into(),
                method_id: method_id.into(),
                class_mode: config.class_mode,
            }),
        };
    };
    let policy = config.coverage_policy;
    let ts = &config.thresholds_t;
    let pi = aggregate(attr, rec.annotation(), config.aggregation)?;
    let pi_mean = match config.aggregation {
        Aggregation::MeanPerPart => pi.clone(),
        Aggregation::SumPerPart => aggregate(attr, rec.annotation(), Aggregation::MeanPerPart)?,
    };
    let reference = config.resolved_accuracy_reference();
    Ok(ImageEvaluation {
        image_id: String::from(rec.image_id()),
        preservation: threshold_outcome(rec, &pi, ts, Direction::LeastFirst, policy)?,
        deletion: threshold_outcome(rec, &pi, ts, Direction::MostFirst, policy)?,
        single_deletion: single_deletion_outcome(rec, &pi, config.class_mode, config.score_fn, policy)?,
        positive: perturbation_outcome(rec, &pi_mean, Direction::MostFirst, reference, policy)?,
        negative: perturbation_outcome(rec, &pi_mean, Direction::LeastFirst, reference, policy)?,
        clamped: pi.has_negative(),
    })
}

/// Reduces per-image evaluations into SD, PC, DC, positive and negative
/// perturbation results (in that order).
pub fn summarize(method_id: &str, config: &EvaluationConfig, evals: &[ImageEvaluation]) -> Vec<MetricResult> {
    let mode = config.class_mode;
    let ts = &config.thresholds_t;
    let pc: Vec<_> = evals.iter().map(|e| (e.image_id.as_str(), e.preservation.clone())).collect();
    let dc: Vec<_> = evals.iter().map(|e| (e.image_id.as_str(), e.deletion.clone())).collect();
    let sd: Vec<_> = evals.iter().map(|e| (e.image_id.as_str(), e.single_deletion.clone())).collect();
    let pos: Vec<_> = evals.iter().map(|e| (e.image_id.as_str(), e.positive.clone())).collect();
    let neg: Vec<_> = evals.iter().map(|e| (e.image_id.as_str(), e.negative.clone())).collect();
    alloc::vec![
        reduce_single_deletion(method_id, mode, &sd),
        reduce_threshold(ThresholdKind::Preservation, method_id, mode, ts, &pc),
        reduce_threshold(ThresholdKind::Deletion, method_id, mode, ts, &dc),
        reduce_perturbation(Direction::MostFirst, method_id, mode, &pos),
        reduce_perturbation(Direction::LeastFirst, method_id, mode, &neg),
    ]
}

/// Sequential [`evaluate_image`] over a dataset followed by [`summarize`].
pub fn evaluate_method(records: &[ImageRecord], method_id: &str, config: &EvaluationConfig) -> Result<Vec<MetricResult>> {
    config.validate()?;
    let evals = records
        .iter()
        .map(|r| evaluate_image(r, method_id, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(method_id, config, &evals))
}
