//! Dataset manifest: the contract between the model adapter and the engine.
//!
//! Paths are relative to the manifest's directory. Subset keys are sorted
//! part ids joined by `-`, with `orig` for the unperturbed image. Loading is
//! total: all problems are collected before anything is reported.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ing_core::{AttributionMap, ClassMode, ImageRecord, LogitRecord, PartId, PartSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, Result};
use crate::{logits, mask, raster};

pub const SCHEMA_VERSION: u32 = 1;
/// How plans are ordered and truncated when the budget binds.
pub const PLAN_ORDER: &str = "size-then-lexicographic";

fn default_model_id() -> String {
    "model".to_owned()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub dataset_name: String,
    #[serde(default = "default_model_id")]
    pub model_id: String,
    pub class_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_policy: Option<PlanPolicy>,
    pub images: Vec<ManifestImage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanPolicy {
    pub budget: usize,
    pub order: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestImage {
    pub image_id: String,
    pub ground_truth_label: usize,
    pub mask_file: String,
    pub part_ids: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plan: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub variant_logit_files: BTreeMap<String, String>,
    /// method id -> class mode -> raster path
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attribution_files: BTreeMap<String, BTreeMap<ClassMode, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_file: Option<String>,
}

impl ManifestImage {
    pub fn part_id_list(&self) -> Vec<PartId> {
        self.part_ids.iter().map(|&p| PartId(p)).collect()
    }
}

impl Manifest {
    pub fn new(dataset_name: impl Into<String>, model_id: impl Into<String>, class_count: usize) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            dataset_name: dataset_name.into(),
            model_id: model_id.into(),
            class_count,
            plan_policy: None,
            images: Vec::new(),
        }
    }

    /// Parses without touching the filesystem.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ProtocolError::invalid(path, format!("invalid manifest JSON: {e}")))
    }

    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Reads, parses and structurally validates a manifest, including the
    /// existence of every referenced file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
        let manifest = Self::from_json(&text, path)?;
        let violations = manifest.validate(&base_dir(path));
        if violations.is_empty() {
            Ok(manifest)
        } else {
            Err(ProtocolError::Manifest {
                path: path.to_owned(),
                violations,
            })
        }
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial manifest.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()).map_err(|e| ProtocolError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| ProtocolError::io(path, e))
    }

    /// Every structural problem, in manifest order.
    pub fn validate(&self, base: &Path) -> Vec<String> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.class_count == 0 {
            v.push("class_count must be positive".to_owned());
        }
        let mut seen = BTreeSet::new();
        for img in &self.images {
            let id = &img.image_id;
            if id.is_empty() {
                v.push("image with empty image_id".to_owned());
            }
            if !seen.insert(id.as_str()) {
                v.push(format!("{id}: duplicate image_id"));
            }
            if img.ground_truth_label >= self.class_count {
                v.push(format!(
                    "{id}: ground_truth_label {} out of range for {} classes",
                    img.ground_truth_label, self.class_count
                ));
            }
            let parts = match PartSet::from_ids(img.part_id_list()) {
                Ok(p) if !p.is_empty() => Some(p),
                Ok(_) => {
                    v.push(format!("{id}: part_ids is empty"));
                    None
                }
                Err(e) => {
                    v.push(format!("{id}: {e}"));
                    None
                }
            };
            let check_key = |key: &str, what: &str, v: &mut Vec<String>| -> Option<PartSet> {
                match PartSet::parse_key(key) {
                    Ok(s) => {
                        if let Some(p) = &parts {
                            if !s.is_subset_of(p.ids()) {
                                v.push(format!("{id}: {what} {key} names parts outside part_ids"));
                            }
                        }
                        Some(s)
                    }
                    Err(e) => {
                        v.push(format!("{id}: {what}: {e}"));
                        None
                    }
                }
            };
            let mut plan_seen = BTreeSet::new();
            for key in &img.plan {
                if let Some(s) = check_key(key, "plan subset", &mut v) {
                    if s.is_empty() {
                        v.push(format!("{id}: plan contains the original image"));
                    }
                    if !plan_seen.insert(s) {
                        v.push(format!("{id}: plan subset {key} repeated"));
                    }
                }
            }
            for (key, file) in &img.variant_logit_files {
                check_key(key, "variant", &mut v);
                check_file(base, file, id, &mut v);
            }
            for (method, modes) in &img.attribution_files {
                if method.is_empty() {
                    v.push(format!("{id}: attribution with empty method id"));
                }
                for file in modes.values() {
                    check_file(base, file, id, &mut v);
                }
            }
            check_file(base, &img.mask_file, id, &mut v);
            if let Some(e) = &img.embedding_file {
                check_file(base, e, id, &mut v);
            }
        }
        v
    }

    /// Method ids with at least one attribution for `mode`, sorted.
    pub fn methods(&self, mode: ClassMode) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .images
            .iter()
            .flat_map(|img| img.attribution_files.iter())
            .filter(|(_, modes)| modes.contains_key(&mode))
            .map(|(m, _)| m)
            .collect();
        set.into_iter().cloned().collect()
    }
}

fn check_file(base: &Path, file: &str, id: &str, v: &mut Vec<String>) {
    let p = base.join(file);
    if !p.is_file() {
        v.push(format!("{id}: referenced file {} does not exist", p.display()));
    }
}

/// Directory that manifest-relative paths resolve against.
pub fn base_dir(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Reads every mask, logit file and raster referenced by a validated
/// manifest and assembles the in-memory dataset.
///
/// All file-level problems are collected; either the whole dataset loads or
/// a [`ProtocolError::Manifest`] lists every violation.
pub fn load_dataset(manifest: &Manifest, manifest_path: &Path) -> Result<Vec<ImageRecord>> {
    let base = base_dir(manifest_path);
    let loaded: Vec<std::result::Result<ImageRecord, Vec<String>>> = manifest
        .images
        .par_iter()
        .map(|img| load_image(manifest, img, &base))
        .collect();
    let mut records = Vec::with_capacity(loaded.len());
    let mut violations = Vec::new();
    for r in loaded {
        match r {
            Ok(rec) => records.push(rec),
            Err(v) => violations.extend(v),
        }
    }
    if violations.is_empty() {
        Ok(records)
    } else {
        Err(ProtocolError::Manifest {
            path: manifest_path.to_owned(),
            violations,
        })
    }
}

fn load_image(manifest: &Manifest, img: &ManifestImage, base: &Path) -> std::result::Result<ImageRecord, Vec<String>> {
    let id = img.image_id.as_str();
    let mut v = Vec::new();
    let ann = match mask::read_mask(&base.join(&img.mask_file), id) {
        Ok(a) => {
            let declared: BTreeSet<PartId> = img.part_id_list().into_iter().collect();
            let found: BTreeSet<PartId> = a.part_ids().iter().copied().collect();
            if declared != found {
                v.push(format!(
                    "{id}: part_ids {:?} do not match mask parts {:?}",
                    img.part_ids,
                    found.iter().map(|p| p.0).collect::<Vec<_>>()
                ));
            }
            Some(a)
        }
        Err(e) => {
            v.push(format!("{id}: {e}"));
            None
        }
    };
    if !img.variant_logit_files.contains_key("orig") {
        v.push(format!("{id}: no logits for the original image (subset key \"orig\")"));
    }
    let mut variants: Vec<LogitRecord> = Vec::new();
    for (key, file) in &img.variant_logit_files {
        let path = base.join(file);
        match logits::read_logits(&path, manifest.class_count) {
            Ok(rec) => {
                if rec.image_id() != id || rec.variant().key() != *key {
                    v.push(format!(
                        "{id}: {} holds image {:?} subset {:?} but is listed under subset {key}",
                        path.display(),
                        rec.image_id(),
                        rec.variant().key()
                    ));
                } else {
                    variants.push(rec);
                }
            }
            Err(e) => v.push(format!("{id}: {e}")),
        }
    }
    let mut attributions = Vec::new();
    for (method, modes) in &img.attribution_files {
        for (&mode, file) in modes {
            let path = base.join(file);
            match raster::read_raster(&path) {
                Ok(r) => {
                    if let Some(a) = &ann {
                        if (r.height, r.width) != (a.height(), a.width()) {
                            v.push(format!(
                                "{id}: {} is {}x{} but the mask is {}x{}",
                                path.display(),
                                r.height,
                                r.width,
                                a.height(),
                                a.width()
                            ));
                            continue;
                        }
                    }
                    match AttributionMap::new(id, method.as_str(), mode, r.height, r.width, r.values) {
                        Ok(m) => attributions.push(m),
                        Err(e) => v.push(format!("{id}: {}: {e}", path.display())),
                    }
                }
                Err(e) => v.push(format!("{id}: {e}")),
            }
        }
    }
    if !v.is_empty() {
        return Err(v);
    }
    let ann = ann.expect("mask loaded when no violations");
    ImageRecord::new(ann, img.ground_truth_label, variants, attributions).map_err(|e| vec![format!("{id}: {e}")])
}
