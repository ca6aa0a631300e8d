//! Domain types shared by the planner, importance and metric modules.
//!
//! All types validate their invariants on construction and are immutable
//! afterwards, so they can be shared freely across worker threads.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::config::ScoreFn;
use crate::error::{Error, Result};

/// Class index into a logit vector.
pub type ClassId = usize;

/// Label of one annotated part. `0` is reserved for background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct PartId(pub u8);

impl fmt::Display for PartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether an attribution explains the predicted class or the ground-truth class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ClassMode {
    Predicted,
    Target,
}

impl ClassMode {
    pub const ALL: [ClassMode; 2] = [ClassMode::Predicted, ClassMode::Target];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassMode::Predicted => "predicted",
            ClassMode::Target => "target",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "predicted" => Some(ClassMode::Predicted),
            "target" => Some(ClassMode::Target),
            _ => None,
        }
    }
}

impl fmt::Display for ClassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A set of parts, kept sorted and free of duplicates.
///
/// The empty set denotes the original, unperturbed image.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartSet(Vec<PartId>);

impl PartSet {
    pub fn empty() -> Self {
        PartSet(Vec::new())
    }

    pub fn singleton(id: PartId) -> Self {
        PartSet(alloc::vec![id])
    }

    /// Builds a set from arbitrary-order ids; duplicates and the background
    /// label are rejected.
    pub fn from_ids<I: IntoIterator<Item = PartId>>(ids: I) -> Result<Self> {
        let mut v: Vec<PartId> = ids.into_iter().collect();
        v.sort_unstable();
        if v.first() == Some(&PartId(0)) {
            return Err(Error::InvalidPartSet("part id 0 is background".into()));
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartSet(format!("duplicate part ids in {:?}", v)));
        }
        Ok(PartSet(v))
    }

    pub(crate) fn from_sorted_unchecked(ids: Vec<PartId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        PartSet(ids)
    }

    /// Copy of the set with `id` added.
    pub fn with(&self, id: PartId) -> Self {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&id) {
            v.insert(pos, id);
        }
        PartSet(v)
    }

    /// Manifest key: sorted ids joined by `-`, or `orig` for the empty set.
    pub fn key(&self) -> String {
        if self.0.is_empty() {
            return String::from("orig");
        }
        let mut s = String::new();
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                s.push('-');
            }
            s.push_str(&format!("{}", p.0));
        }
        s
    }

    /// Inverse of [`PartSet::key`]. Only canonical keys are accepted.
    pub fn parse_key(key: &str) -> Result<Self> {
        if key == "orig" {
            return Ok(PartSet::empty());
        }
        let mut ids = Vec::new();
        for tok in key.split('-') {
            let canonical = !tok.is_empty()
                && tok.bytes().all(|b| b.is_ascii_digit())
                && !(tok.len() > 1 && tok.starts_with('0'));
            let id = if canonical { tok.parse::<u8>().ok() } else { None };
            match id {
                Some(id) => ids.push(PartId(id)),
                None => return Err(Error::InvalidPartSet(format!("bad subset key {key:?}"))),
            }
        }
        let set = PartSet::from_ids(ids.iter().copied())?;
        if set.0 != ids {
            return Err(Error::InvalidPartSet(format!("subset key {key:?} is not sorted")));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: PartId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn ids(&self) -> &[PartId] {
        &self.0
    }

    pub fn is_subset_of(&self, ids: &[PartId]) -> bool {
        self.0.iter().all(|p| ids.contains(p))
    }
}

impl fmt::Display for PartSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Per-image part masks over a `height x width` pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PartAnnotation {
    image_id: String,
    height: usize,
    width: usize,
    part_ids: Vec<PartId>,
    mask: Vec<u8>,
    pixel_counts: Vec<usize>,
}

impl PartAnnotation {
    /// Validates the mask and derives the part list from its distinct
    /// non-zero labels.
    pub fn from_mask(image_id: impl Into<String>, height: usize, width: usize, mask: Vec<u8>) -> Result<Self> {
        let image_id = image_id.into();
        if height == 0 || width == 0 || mask.len() != height * width {
            return Err(Error::InvalidAnnotation(format!(
                "{image_id}: mask has {} labels for a {height}x{width} grid",
                mask.len()
            )));
        }
        let mut counts = [0usize; 256];
        for &m in &mask {
            counts[m as usize] += 1;
        }
        let part_ids: Vec<PartId> = (1..=255u8).filter(|&k| counts[k as usize] > 0).map(PartId).collect();
        if part_ids.is_empty() {
            return Err(Error::InvalidAnnotation(format!("{image_id}: no parts present")));
        }
        let pixel_counts = part_ids.iter().map(|p| counts[p.0 as usize]).collect();
        Ok(PartAnnotation {
            image_id,
            height,
            width,
            part_ids,
            mask,
            pixel_counts,
        })
    }

    /// Like [`PartAnnotation::from_mask`] but also checks the mask against
    /// an externally declared part list.
    pub fn with_parts(
        image_id: impl Into<String>,
        height: usize,
        width: usize,
        declared: &[PartId],
        mask: Vec<u8>,
    ) -> Result<Self> {
        let ann = Self::from_mask(image_id, height, width, mask)?;
        let mut declared_sorted = declared.to_vec();
        declared_sorted.sort_unstable();
        if declared_sorted != ann.part_ids {
            return Err(Error::InvalidAnnotation(format!(
                "{}: declared parts {:?} but mask contains {:?}",
                ann.image_id,
                declared_sorted.iter().map(|p| p.0).collect::<Vec<_>>(),
                ann.part_ids.iter().map(|p| p.0).collect::<Vec<_>>()
            )));
        }
        Ok(ann)
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn part_ids(&self) -> &[PartId] {
        &self.part_ids
    }

    pub fn num_parts(&self) -> usize {
        self.part_ids.len()
    }

    /// Row-major labels, `0` = background.
    pub fn mask(&self) -> &[u8] {
        &self.mask
    }

    pub fn pixel_count(&self, part: PartId) -> Option<usize> {
        self.part_ids
            .binary_search(&part)
            .ok()
            .map(|i| self.pixel_counts[i])
    }
}

/// Per-pixel attribution raster for one (image, method, class mode).
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMap {
    image_id: String,
    method_id: String,
    class_mode: ClassMode,
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl AttributionMap {
    pub fn new(
        image_id: impl Into<String>,
        method_id: impl Into<String>,
        class_mode: ClassMode,
        height: usize,
        width: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected_h: height,
                expected_w: width,
                found_h: values.len() / width.max(1),
                found_w: width,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "attribution raster",
                index,
            });
        }
        Ok(AttributionMap {
            image_id: image_id.into(),
            method_id: method_id.into(),
            class_mode,
            height,
            width,
            values,
        })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn method_id(&self) -> &str {
        &self.method_id
    }

    pub fn class_mode(&self) -> ClassMode {
        self.class_mode
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Same raster with every value multiplied by `-1`.
    pub fn negated(&self) -> Self {
        AttributionMap {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }
}

/// Index of the largest logit; ties go to the lowest index.
pub fn predicted_class(logits: &[f64]) -> Result<ClassId> {
    let (first, rest) = logits.split_first().ok_or(Error::EmptyLogits)?;
    let mut best = 0;
    let mut best_v = *first;
    for (i, &v) in rest.iter().enumerate() {
        if v > best_v {
            best = i + 1;
            best_v = v;
        }
    }
    Ok(best)
}

/// Softmax probability (max-subtracted) or raw logit of `class`.
pub fn class_score(logits: &[f64], class: ClassId, score_fn: ScoreFn) -> Result<f64> {
    if class >= logits.len() {
        return Err(Error::ClassOutOfRange {
            class,
            num_classes: logits.len(),
        });
    }
    Ok(match score_fn {
        ScoreFn::RawLogit => logits[class],
        ScoreFn::SoftmaxProbability => {
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let denom: f64 = logits.iter().map(|&l| libm::exp(l - max)).sum();
            libm::exp(logits[class] - max) / denom
        }
    })
}

/// Logits of the model on one variant of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitRecord {
    image_id: String,
    variant: PartSet,
    logits: Vec<f64>,
    predicted: ClassId,
}

impl LogitRecord {
    pub fn new(image_id: impl Into<String>, variant: PartSet, logits: Vec<f64>, num_classes: usize) -> Result<Self> {
        if logits.len() != num_classes {
            return Err(Error::LogitLength {
                expected: num_classes,
                found: logits.len(),
            });
        }
        if let Some(index) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "logits", index });
        }
        let predicted = predicted_class(&logits)?;
        Ok(LogitRecord {
            image_id: image_id.into(),
            variant,
            logits,
            predicted,
        })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn variant(&self) -> &PartSet {
        &self.variant
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn num_classes(&self) -> usize {
        self.logits.len()
    }

    pub fn predicted_class(&self) -> ClassId {
        self.predicted
    }

    pub fn class_score(&self, class: ClassId, score_fn: ScoreFn) -> Result<f64> {
        class_score(&self.logits, class, score_fn)
    }
}

/// Everything the metrics need about one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    annotation: PartAnnotation,
    ground_truth: ClassId,
    variants: BTreeMap<PartSet, LogitRecord>,
    attributions: BTreeMap<(String, ClassMode), AttributionMap>,
}

impl ImageRecord {
    pub fn new(
        annotation: PartAnnotation,
        ground_truth: ClassId,
        variants: impl IntoIterator<Item = LogitRecord>,
        attributions: impl IntoIterator<Item = AttributionMap>,
    ) -> Result<Self> {
        let id = String::from(annotation.image_id());
        let mut vmap = BTreeMap::new();
        for rec in variants {
            if rec.image_id() != id {
                return Err(Error::VariantMismatch {
                    image_id: id,
                    subset: rec.variant().key(),
                });
            }
            if !rec.variant().is_subset_of(annotation.part_ids()) {
                return Err(Error::InvalidPartSet(format!(
                    "{id}: variant {} names parts outside the annotation",
                    rec.variant()
                )));
            }
            let key = rec.variant().clone();
            if vmap.insert(key, rec).is_some() {
                return Err(Error::InvalidPartSet(format!("{id}: duplicate variant")));
            }
        }
        let original = vmap.get(&PartSet::empty()).ok_or_else(|| Error::MissingVariant {
            image_id: id.clone(),
            subset: String::from("orig"),
        })?;
        let num_classes = original.num_classes();
        if ground_truth >= num_classes {
            return Err(Error::ClassOutOfRange {
                class: ground_truth,
                num_classes,
            });
        }
        if let Some(bad) = vmap.values().find(|r| r.num_classes() != num_classes) {
            return Err(Error::LogitLength {
                expected: num_classes,
                found: bad.num_classes(),
            });
        }
        let mut amap = BTreeMap::new();
        for attr in attributions {
            if attr.image_id() != id {
                return Err(Error::InvalidAnnotation(format!(
                    "attribution for {} attached to image {id}",
                    attr.image_id()
                )));
            }
            if attr.height() != annotation.height() || attr.width() != annotation.width() {
                return Err(Error::DimensionMismatch {
                    expected_h: annotation.height(),
                    expected_w: annotation.width(),
                    found_h: attr.height(),
                    found_w: attr.width(),
                });
            }
            amap.insert((String::from(attr.method_id()), attr.class_mode()), attr);
        }
        Ok(ImageRecord {
            annotation,
            ground_truth,
            variants: vmap,
            attributions: amap,
        })
    }

    pub fn image_id(&self) -> &str {
        self.annotation.image_id()
    }

    pub fn annotation(&self) -> &PartAnnotation {
        &self.annotation
    }

    pub fn ground_truth(&self) -> ClassId {
        self.ground_truth
    }

    pub fn original(&self) -> &LogitRecord {
        &self.variants[&PartSet::empty()]
    }

    pub fn variant(&self, subset: &PartSet) -> Option<&LogitRecord> {
        self.variants.get(subset)
    }

    pub fn variants(&self) -> impl Iterator<Item = &LogitRecord> {
        self.variants.values()
    }

    pub fn attribution(&self, method_id: &str, class_mode: ClassMode) -> Option<&AttributionMap> {
        // BTreeMap<(String, _)> cannot be queried by (&str, _) without allocating.
        self.attributions
            .iter()
            .find(|((m, c), _)| m == method_id && *c == class_mode)
            .map(|(_, a)| a)
    }

    pub fn attributions(&self) -> impl Iterator<Item = &AttributionMap> {
        self.attributions.values()
    }
}
