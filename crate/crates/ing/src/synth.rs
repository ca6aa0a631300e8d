//! Synthetic fixtures with known answers.
//!
//! [`Fixture`]: striped part masks and a lookup-table classifier whose
//! prediction flips exactly when a designated key part is removed. The
//! `perfect` method's attributions put each part's true score drop on its
//! pixels, `inverted` is its negation and `noise` is seeded noise (predicted
//! class only).
//!
//! [`ShiftDatasets`]: small gray rasters with part rectangles, plus copies
//! where one part is painted mid-gray or filled with the true background.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ing_core::otdd::LabeledPointCloud;
use ing_core::planner::enumerate_plan;
use ing_core::{
    AttributionMap, ClassId, ClassMode, ImageRecord, LogitRecord, PartAnnotation, PartId, PartSet, ScoreFn,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{write_cloud_file, CloudFile, RasterEntry};
use crate::error::{ProtocolError, Result};
use crate::manifest::{Manifest, ManifestImage, PlanPolicy, PLAN_ORDER};
use crate::{logits, mask, raster};

pub const MASK_HEIGHT: usize = 8;
/// Divisible by 3, 4 and 5, so every part has the same pixel count.
pub const MASK_WIDTH: usize = 60;
pub const KEY_WEIGHT: f64 = 3.0;
const TRUE_LOGIT: f64 = 4.0;
const RUNNER_UP_LOGIT: f64 = 2.0;
const MINOR_WEIGHTS: [f64; 6] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30];

pub const METHOD_PERFECT: &str = "perfect";
pub const METHOD_INVERTED: &str = "inverted";
pub const METHOD_NOISE: &str = "noise";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub images: usize,
    pub seed: u64,
    pub min_parts: u8,
    pub max_parts: u8,
    pub classes: usize,
    pub budget: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            images: 20,
            seed: 7,
            min_parts: 3,
            max_parts: 5,
            classes: 3,
            budget: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub image_id: String,
    pub ground_truth: ClassId,
    pub parts: Vec<PartId>,
    pub key: PartId,
    /// Logit loss of the true class when a part is removed.
    pub weights: BTreeMap<PartId, f64>,
    pub mask: Vec<u8>,
    pub noise: Vec<f32>,
}

impl SynthImage {
    /// Logits after removing `removed`: the true class loses the weights of
    /// removed parts, the runner-up stays at a fixed logit.
    pub fn logits(&self, removed: &PartSet, classes: usize) -> Vec<f64> {
        let mut l = vec![0.0; classes];
        l[(self.ground_truth + 1) % classes] = RUNNER_UP_LOGIT;
        l[self.ground_truth] = TRUE_LOGIT - removed.ids().iter().map(|p| self.weights[p]).sum::<f64>();
        l
    }

    /// Drop of the original prediction's softmax probability under each
    /// single-part removal.
    pub fn score_drops(&self, classes: usize) -> BTreeMap<PartId, f64> {
        let score = |s: &PartSet| {
            ing_core::model::class_score(&self.logits(s, classes), self.ground_truth, ScoreFn::SoftmaxProbability)
                .expect("valid logits")
        };
        let base = score(&PartSet::empty());
        self.parts
            .iter()
            .map(|&p| (p, base - score(&PartSet::singleton(p))))
            .collect()
    }

    /// Pixel attributions whose per-part sums are the true score drops.
    pub fn perfect_attribution(&self, classes: usize) -> Vec<f32> {
        let drops = self.score_drops(classes);
        let count = |p: PartId| self.mask.iter().filter(|&&m| m == p.0).count() as f64;
        let per_pixel: BTreeMap<u8, f32> = drops.iter().map(|(&p, &d)| (p.0, (d / count(p)) as f32)).collect();
        self.mask.iter().map(|m| per_pixel.get(m).copied().unwrap_or(0.0)).collect()
    }

    fn attribution(&self, method: &str, classes: usize) -> Vec<f32> {
        match method {
            METHOD_PERFECT => self.perfect_attribution(classes),
            METHOD_INVERTED => self.perfect_attribution(classes).into_iter().map(|v| -v).collect(),
            _ => self.noise.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub spec: SynthSpec,
    pub images: Vec<SynthImage>,
}

/// Striped mask: the top and bottom rows are background, the rest is split
/// into `parts` equal vertical stripes.
pub fn stripe_mask(parts: u8) -> Vec<u8> {
    let width = MASK_WIDTH / parts as usize;
    let mut m = vec![0u8; MASK_HEIGHT * MASK_WIDTH];
    for y in 1..MASK_HEIGHT - 1 {
        for x in 0..MASK_WIDTH {
            m[y * MASK_WIDTH + x] = (x / width) as u8 + 1;
        }
    }
    m
}

pub fn generate(spec: &SynthSpec) -> Fixture {
    assert!(spec.classes >= 2, "fixture needs at least two classes");
    assert!(
        (1..=5).contains(&spec.min_parts) && spec.min_parts <= spec.max_parts && spec.max_parts <= 5,
        "fixture supports 1 to 5 parts"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let images = (0..spec.images)
        .map(|i| {
            let p = rng.gen_range(spec.min_parts..=spec.max_parts);
            let parts: Vec<PartId> = (1..=p).map(PartId).collect();
            let key = parts[rng.gen_range(0..parts.len())];
            let mut minor = MINOR_WEIGHTS.to_vec();
            minor.shuffle(&mut rng);
            let mut minor = minor.into_iter();
            let weights = parts
                .iter()
                .map(|&q| (q, if q == key { KEY_WEIGHT } else { minor.next().unwrap() }))
                .collect();
            let noise = (0..MASK_HEIGHT * MASK_WIDTH).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            SynthImage {
                image_id: format!("img{i:03}"),
                ground_truth: i % spec.classes,
                parts,
                key,
                weights,
                mask: stripe_mask(p),
                noise,
            }
        })
        .collect();
    Fixture {
        spec: spec.clone(),
        images,
    }
}

fn methods() -> [(&'static str, &'static [ClassMode]); 3] {
    [
        (METHOD_INVERTED, &ClassMode::ALL),
        (METHOD_NOISE, &[ClassMode::Predicted]),
        (METHOD_PERFECT, &ClassMode::ALL),
    ]
}

impl Fixture {
    fn plan(&self, img: &SynthImage) -> Vec<PartSet> {
        enumerate_plan(&img.parts, self.spec.budget).expect("budget covers singletons")
    }

    /// The dataset in memory, with logits for every planned subset.
    pub fn records(&self) -> Vec<ImageRecord> {
        let classes = self.spec.classes;
        self.images
            .iter()
            .map(|img| {
                let ann = PartAnnotation::from_mask(img.image_id.as_str(), MASK_HEIGHT, MASK_WIDTH, img.mask.clone())
                    .expect("valid mask");
                let variants: Vec<LogitRecord> = std::iter::once(PartSet::empty())
                    .chain(self.plan(img))
                    .map(|s| {
                        let l = img.logits(&s, classes);
                        LogitRecord::new(img.image_id.as_str(), s, l, classes).expect("valid logits")
                    })
                    .collect();
                let mut attrs = Vec::new();
                for (method, modes) in methods() {
                    for &mode in modes {
                        attrs.push(
                            AttributionMap::new(
                                img.image_id.as_str(),
                                method,
                                mode,
                                MASK_HEIGHT,
                                MASK_WIDTH,
                                img.attribution(method, classes),
                            )
                            .expect("finite attribution"),
                        );
                    }
                }
                ImageRecord::new(ann, img.ground_truth, variants, attrs).expect("consistent record")
            })
            .collect()
    }

    /// Writes masks, logits, rasters and a planned manifest under `dir` and
    /// returns the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let classes = self.spec.classes;
        for sub in ["masks", "logits", "attributions"] {
            let p = dir.join(sub);
            fs::create_dir_all(&p).map_err(|e| ProtocolError::io(&p, e))?;
        }
        let mut manifest = Manifest::new("synthetic-stripes", "lookup-table", classes);
        manifest.plan_policy = Some(PlanPolicy {
            budget: self.spec.budget,
            order: PLAN_ORDER.to_owned(),
        });
        for img in &self.images {
            let id = &img.image_id;
            let mask_file = format!("masks/{id}.png");
            mask::write_mask(&dir.join(&mask_file), MASK_HEIGHT, MASK_WIDTH, &img.mask)?;
            let plan = self.plan(img);
            let mut variant_logit_files = BTreeMap::new();
            for s in std::iter::once(PartSet::empty()).chain(plan.iter().cloned()) {
                let key = s.key();
                let file = format!("logits/{id}__{key}.json");
                let rec = LogitRecord::new(id.as_str(), s, img.logits(&PartSet::parse_key(&key).unwrap(), classes), classes)
                    .map_err(|e| ProtocolError::core(&dir.join(&file), e))?;
                logits::write_logits(&dir.join(&file), &rec)?;
                variant_logit_files.insert(key, file);
            }
            let mut attribution_files = BTreeMap::new();
            for (method, modes) in methods() {
                let mut per_mode = BTreeMap::new();
                for &mode in modes {
                    let file = format!("attributions/{id}__{method}__{}.ingf", mode.as_str());
                    let r = raster::Raster::new(MASK_HEIGHT, MASK_WIDTH, img.attribution(method, classes));
                    raster::write_raster(&dir.join(&file), &r)?;
                    per_mode.insert(mode, file);
                }
                attribution_files.insert(method.to_owned(), per_mode);
            }
            manifest.images.push(ManifestImage {
                image_id: id.clone(),
                ground_truth_label: img.ground_truth,
                mask_file,
                part_ids: img.parts.iter().map(|p| p.0).collect(),
                plan: plan.iter().map(PartSet::key).collect(),
                variant_logit_files,
                attribution_files,
                embedding_file: None,
            });
        }
        let path = dir.join("manifest.json");
        manifest.save(&path)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    pub images: usize,
    pub classes: usize,
    pub side: usize,
    pub seed: u64,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec {
            images: 60,
            classes: 3,
            side: 16,
            seed: 11,
        }
    }
}

/// Gray value painted over a removed part in the masked copies.
pub const MASK_GRAY: f32 = 0.5;
const PART_OFFSET: f32 = 0.12;

/// Part rectangles `(y0, y1, x0, x1)` on a 16x16 grid, per class.
const LAYOUTS: [[(usize, usize, usize, usize); 2]; 3] = [
    [(2, 6, 2, 14), (9, 13, 2, 14)],
    [(2, 14, 2, 6), (2, 14, 9, 13)],
    [(3, 8, 3, 8), (8, 13, 8, 13)],
];

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftDatasets {
    pub side: usize,
    pub labels: Vec<ClassId>,
    pub original: Vec<Vec<f32>>,
    pub masked: Vec<Vec<f32>>,
    pub inpainted: Vec<Vec<f32>>,
}

pub fn shift_datasets(spec: &ShiftSpec) -> ShiftDatasets {
    assert!(spec.classes <= LAYOUTS.len() && spec.side == 16, "layouts are defined for 3 classes on 16x16");
    let n = spec.side;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = ShiftDatasets {
        side: n,
        labels: Vec::new(),
        original: Vec::new(),
        masked: Vec::new(),
        inpainted: Vec::new(),
    };
    for i in 0..spec.images {
        let label = i % spec.classes;
        let background: Vec<f32> = (0..n * n)
            .map(|k| 0.1 + 0.05 * (k % n) as f32 / n as f32 + rng.gen_range(-0.02f32..0.02))
            .collect();
        let mut orig = background.clone();
        let layout = LAYOUTS[label];
        for &(y0, y1, x0, x1) in &layout {
            for y in y0..y1 {
                for x in x0..x1 {
                    orig[y * n + x] += PART_OFFSET + rng.gen_range(-0.01f32..0.01);
                }
            }
        }
        let (y0, y1, x0, x1) = layout[rng.gen_range(0..layout.len())];
        let mut masked = orig.clone();
        let mut inpainted = orig.clone();
        for y in y0..y1 {
            for x in x0..x1 {
                masked[y * n + x] = MASK_GRAY;
                inpainted[y * n + x] = background[y * n + x];
            }
        }
        out.labels.push(label);
        out.original.push(orig);
        out.masked.push(masked);
        out.inpainted.push(inpainted);
    }
    out
}

impl ShiftDatasets {
    fn cloud(&self, name: &str, images: &[Vec<f32>], feature_side: usize) -> LabeledPointCloud {
        let dim = feature_side * feature_side;
        let mut flat = Vec::with_capacity(images.len() * dim);
        for img in images {
            flat.extend(ing_core::features::raster_features(img, self.side, self.side, 1, feature_side).expect("valid raster"));
        }
        LabeledPointCloud::from_flat(name, dim, flat, self.labels.clone()).expect("valid cloud")
    }

    /// Original, masked and inpainted clouds of downscaled features.
    pub fn clouds(&self, feature_side: usize) -> [LabeledPointCloud; 3] {
        [
            self.cloud("original", &self.original, feature_side),
            self.cloud("masked", &self.masked, feature_side),
            self.cloud("inpainted", &self.inpainted, feature_side),
        ]
    }

    /// Writes the rasters and one cloud file per copy; returns the cloud
    /// files in the order original, masked, inpainted.
    pub fn write(&self, dir: &Path, feature_side: usize) -> Result<Vec<PathBuf>> {
        let rasters = dir.join("rasters");
        fs::create_dir_all(&rasters).map_err(|e| ProtocolError::io(&rasters, e))?;
        let mut out = Vec::new();
        for (name, images) in [
            ("original", &self.original),
            ("masked", &self.masked),
            ("inpainted", &self.inpainted),
        ] {
            let mut entries = Vec::new();
            for (i, img) in images.iter().enumerate() {
                let file = format!("rasters/{name}_{i:03}.ingf");
                raster::write_raster(&dir.join(&file), &raster::Raster::new(self.side, self.side, img.clone()))?;
                entries.push(RasterEntry {
                    path: file,
                    label: self.labels[i],
                });
            }
            let path = dir.join(format!("{name}.json"));
            write_cloud_file(
                &path,
                &CloudFile::Rasters {
                    name: name.to_owned(),
                    feature_side,
                    images: entries,
                },
            )?;
            out.push(path);
        }
        Ok(out)
    }
}
