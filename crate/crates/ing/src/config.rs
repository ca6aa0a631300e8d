//! Run configuration: one TOML file plus command-line overrides.
//!
//! ```toml
//! [plan]
//! budget = 32
//!
//! [eval]
//! thresholds = [0.2, 0.4, 0.6, 0.8]
//! aggregation = "sum_per_part"
//! class_modes = ["predicted", "target"]
//! score_fn = "softmax_probability"
//! coverage = "skip_missing"
//! # accuracy_reference = "ground_truth"   # default follows the class mode
//! # methods = ["GA", "TA"]                # default: every method found
//!
//! [otdd]
//! # epsilon = 0.5                         # default: 0.05 x mean cost
//! max_iter = 2000
//! tol = 1e-7
//!
//! workers = 4
//! ```

use std::fs;
use std::path::Path;

use ing_core::config::validate_thresholds;
use ing_core::otdd::OtddSettings;
use ing_core::planner::DEFAULT_BUDGET;
use ing_core::{AccuracyReference, Aggregation, ClassMode, CoveragePolicy, EvaluationConfig, ScoreFn};
use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plan: PlanSection,
    pub eval: EvalSection,
    pub otdd: OtddSection,
    /// Worker threads. Never written into reports: it must not change them.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            plan: PlanSection::default(),
            eval: EvalSection::default(),
            otdd: OtddSection::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub budget: usize,
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection { budget: DEFAULT_BUDGET }
    }
}

/// Evaluation settings as recorded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub thresholds: Vec<f64>,
    pub aggregation: Aggregation,
    pub class_modes: Vec<ClassMode>,
    pub score_fn: ScoreFn,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_reference: Option<AccuracyReference>,
    pub coverage: CoveragePolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
}

impl Default for EvalSection {
    fn default() -> Self {
        let base = EvaluationConfig::default();
        EvalSection {
            thresholds: base.thresholds_t,
            aggregation: base.aggregation,
            class_modes: ClassMode::ALL.to_vec(),
            score_fn: base.score_fn,
            accuracy_reference: base.accuracy_reference,
            coverage: base.coverage_policy,
            methods: None,
        }
    }
}

impl EvalSection {
    pub fn validate(&self) -> std::result::Result<(), String> {
        validate_thresholds(&self.thresholds).map_err(|e| e.to_string())?;
        if self.class_modes.is_empty() {
            return Err("class_modes is empty".into());
        }
        for (i, m) in self.class_modes.iter().enumerate() {
            if self.class_modes[..i].contains(m) {
                return Err(format!("class mode {} listed twice", m.as_str()));
            }
        }
        Ok(())
    }

    /// Core configuration for one class mode.
    pub fn for_mode(&self, class_mode: ClassMode) -> EvaluationConfig {
        EvaluationConfig {
            thresholds_t: self.thresholds.clone(),
            aggregation: self.aggregation,
            class_mode,
            score_fn: self.score_fn,
            accuracy_reference: self.accuracy_reference,
            coverage_policy: self.coverage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtddSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for OtddSection {
    fn default() -> Self {
        let s = OtddSettings::default();
        OtddSection {
            epsilon: s.epsilon,
            max_iter: s.max_iter,
            tol: s.tol,
        }
    }
}

impl OtddSection {
    pub fn settings(&self) -> OtddSettings {
        OtddSettings {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(format!("epsilon must be positive, got {e}"));
            }
        }
        if self.max_iter == 0 {
            return Err("max_iter must be positive".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| ProtocolError::invalid(path, format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
        Self::from_toml(&text, path)
    }

    /// Loads `path` if given, otherwise the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

pub fn parse_thresholds(s: &str) -> std::result::Result<Vec<f64>, String> {
    let ts = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad threshold {p:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    validate_thresholds(&ts).map_err(|e| e.to_string())?;
    Ok(ts)
}

/// `predicted`, `target` or `both`.
pub fn parse_class_modes(s: &str) -> std::result::Result<Vec<ClassMode>, String> {
    match s {
        "both" => Ok(ClassMode::ALL.to_vec()),
        _ => ClassMode::parse(s)
            .map(|m| vec![m])
            .ok_or_else(|| format!("unknown class mode {s:?} (predicted, target, both)")),
    }
}

pub fn parse_aggregation(s: &str) -> std::result::Result<Aggregation, String> {
    match s {
        "sum" | "sum_per_part" => Ok(Aggregation::SumPerPart),
        "mean" | "mean_per_part" => Ok(Aggregation::MeanPerPart),
        _ => Err(format!("unknown aggregation {s:?} (sum, mean)")),
    }
}

pub fn parse_coverage(s: &str) -> std::result::Result<CoveragePolicy, String> {
    match s {
        "skip" | "skip_missing" => Ok(CoveragePolicy::SkipMissing),
        "fail" | "fail_missing" => Ok(CoveragePolicy::FailMissing),
        _ => Err(format!("unknown coverage policy {s:?} (skip, fail)")),
    }
}

pub fn parse_score_fn(s: &str) -> std::result::Result<ScoreFn, String> {
    match s {
        "softmax" | "softmax_probability" => Ok(ScoreFn::SoftmaxProbability),
        "logit" | "raw_logit" => Ok(ScoreFn::RawLogit),
        _ => Err(format!("unknown score function {s:?} (softmax, logit)")),
    }
}

pub fn parse_accuracy_reference(s: &str) -> std::result::Result<AccuracyReference, String> {
    match s {
        "prediction" | "original_prediction" => Ok(AccuracyReference::OriginalPrediction),
        "label" | "ground_truth" => Ok(AccuracyReference::GroundTruth),
        _ => Err(format!("unknown accuracy reference {s:?} (prediction, label)")),
    }
}
