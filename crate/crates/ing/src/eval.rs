//! Parallel evaluation driver.
//!
//! Every (class mode, method, image) triple is evaluated independently on a
//! worker pool; results are then reduced in a fixed order, so the report
//! does not depend on the number of workers.

use std::collections::BTreeSet;

use ing_core::evaluate::{evaluate_image, summarize, ImageEvaluation};
use ing_core::{ClassMode, Error, ImageRecord, MetricResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::EvalSection;
use crate::manifest::Manifest;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Scores for every (method, class mode) of one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    pub schema_version: u32,
    pub dataset_name: String,
    pub model_id: String,
    pub image_count: usize,
    /// Fully resolved evaluation settings.
    pub config: EvalSection,
    pub results: Vec<MetricResult>,
    /// Images whose negative part importances were clamped for PC/DC.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clamped: Vec<ClampNote>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClampNote {
    pub method_id: String,
    pub class_mode: ClassMode,
    pub image_ids: Vec<String>,
}

/// (class mode, method) pairs to evaluate, in report order.
pub fn evaluation_pairs(manifest: &Manifest, eval: &EvalSection) -> Result<Vec<(ClassMode, String)>, Error> {
    if let Some(wanted) = &eval.methods {
        let known: BTreeSet<String> = ClassMode::ALL.iter().flat_map(|&m| manifest.methods(m)).collect();
        let unknown: Vec<&str> = wanted.iter().filter(|m| !known.contains(*m)).map(String::as_str).collect();
        if !unknown.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "no attributions for method(s) {}",
                unknown.join(", ")
            )));
        }
    }
    let mut pairs = Vec::new();
    for &mode in &eval.class_modes {
        for method in manifest.methods(mode) {
            if eval.methods.as_ref().is_none_or(|w| w.contains(&method)) {
                pairs.push((mode, method));
            }
        }
    }
    Ok(pairs)
}

/// Evaluates `records` on a pool of `workers` threads (0 picks the rayon
/// default).
pub fn evaluate_dataset(
    manifest: &Manifest,
    records: &[ImageRecord],
    eval: &EvalSection,
    workers: usize,
) -> Result<MetricReport, Error> {
    eval.validate().map_err(Error::InvalidConfig)?;
    let pairs = evaluation_pairs(manifest, eval)?;
    let configs: Vec<_> = pairs.iter().map(|(mode, _)| eval.for_mode(*mode)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let n = records.len();
    let outcomes: Vec<Result<ImageEvaluation, Error>> = pool.install(|| {
        (0..pairs.len() * n)
            .into_par_iter()
            .map(|k| {
                let (p, i) = (k / n, k % n);
                evaluate_image(&records[i], &pairs[p].1, &configs[p])
            })
            .collect()
    });
    // first failure in task order, so the error is deterministic too
    let mut evals = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        evals.push(o?);
    }
    let mut results = Vec::with_capacity(pairs.len() * 5);
    let mut clamped = Vec::new();
    for (p, (mode, method)) in pairs.iter().enumerate() {
        let chunk = &evals[p * n..(p + 1) * n];
        results.extend(summarize(method, &configs[p], chunk));
        let mut ids: Vec<String> = chunk.iter().filter(|e| e.clamped).map(|e| e.image_id.clone()).collect();
        if !ids.is_empty() {
            ids.sort();
            clamped.push(ClampNote {
                method_id: method.clone(),
                class_mode: *mode,
                image_ids: ids,
            });
        }
    }
    Ok(MetricReport {
        schema_version: REPORT_SCHEMA_VERSION,
        dataset_name: manifest.dataset_name.clone(),
        model_id: manifest.model_id.clone(),
        image_count: n,
        config: eval.clone(),
        results,
        clamped,
    })
}

impl MetricReport {
    pub fn result(&self, metric: ing_core::MetricId, method_id: &str, class_mode: ClassMode) -> Option<&MetricResult> {
        self.results
            .iter()
            .find(|r| r.metric == metric && r.method_id == method_id && r.class_mode == class_mode)
    }
}
