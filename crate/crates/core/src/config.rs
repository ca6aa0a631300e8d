use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ClassMode;

/// How pixel attributions are pooled within a part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Aggregation {
    #[cfg_attr(feature = "serde", serde(alias = "sum"))]
    SumPerPart,
    #[cfg_attr(feature = "serde", serde(alias = "mean"))]
    MeanPerPart,
}

/// Scalar class score whose drop Single Deletion correlates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreFn {
    #[cfg_attr(feature = "serde", serde(alias = "softmax"))]
    SoftmaxProbability,
    #[cfg_attr(feature = "serde", serde(alias = "logit"))]
    RawLogit,
}

/// What a perturbed prediction is compared with when computing accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AccuracyReference {
    #[cfg_attr(feature = "serde", serde(alias = "prediction"))]
    OriginalPrediction,
    #[cfg_attr(feature = "serde", serde(alias = "label"))]
    GroundTruth,
}

impl AccuracyReference {
    /// Predicted-class runs score against the original prediction, target runs
    /// against the label.
    pub fn for_class_mode(mode: ClassMode) -> Self {
        match mode {
            ClassMode::Predicted => AccuracyReference::OriginalPrediction,
            ClassMode::Target => AccuracyReference::GroundTruth,
        }
    }
}

/// What to do with an image whose required variant was never produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoveragePolicy {
    #[cfg_attr(feature = "serde", serde(alias = "skip"))]
    SkipMissing,
    #[cfg_attr(feature = "serde", serde(alias = "fail"))]
    FailMissing,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationConfig {
    pub thresholds_t: Vec<f64>,
    pub aggregation: Aggregation,
    pub class_mode: ClassMode,
    pub score_fn: ScoreFn,
    /// `None` follows the class mode.
    pub accuracy_reference: Option<AccuracyReference>,
    pub coverage_policy: CoveragePolicy,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            thresholds_t: vec![0.2, 0.4, 0.6, 0.8],
            aggregation: Aggregation::SumPerPart,
            class_mode: ClassMode::Predicted,
            score_fn: ScoreFn::SoftmaxProbability,
            accuracy_reference: None,
            coverage_policy: CoveragePolicy::SkipMissing,
        }
    }
}

impl EvaluationConfig {
    pub fn validate(&self) -> Result<()> {
        validate_thresholds(&self.thresholds_t)
    }

    pub fn resolved_accuracy_reference(&self) -> AccuracyReference {
        self.accuracy_reference
            .unwrap_or_else(|| AccuracyReference::for_class_mode(self.class_mode))
    }
}

/// Thresholds must lie in (0, 1) and be strictly increasing.
pub fn validate_thresholds(ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        return Err(Error::InvalidConfig("threshold list is empty".into()));
    }
    for &t in ts {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidConfig(format!("threshold {t} outside (0, 1)")));
        }
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("thresholds must be strictly increasing".into()));
    }
    Ok(())
}
