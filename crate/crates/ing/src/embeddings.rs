//! Point-cloud files for dataset distances.
//!
//! Two kinds, tagged by `"kind"`:
//!
//! ```json
//! {"kind": "embeddings", "name": "orig", "points": [[0.1, 0.2]], "labels": [0]}
//! {"kind": "rasters", "name": "masked", "feature_side": 32,
//!  "images": [{"path": "img/0.png", "label": 0}]}
//! ```
//!
//! Raster entries may be `INGF` files (one channel) or PNG/JPEG images
//! (grayscale stays one channel, anything else becomes RGB in [0, 1]).
//! Paths are relative to the cloud file.

use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use ing_core::features::{raster_features, DEFAULT_FEATURE_SIDE};
use ing_core::otdd::LabeledPointCloud;
use ing_core::ClassId;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ProtocolError, Result};
use crate::raster;

fn default_side() -> usize {
    DEFAULT_FEATURE_SIDE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CloudFile {
    Embeddings {
        name: String,
        points: Vec<Vec<f64>>,
        labels: Vec<ClassId>,
    },
    Rasters {
        name: String,
        #[serde(default = "default_side")]
        feature_side: usize,
        images: Vec<RasterEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterEntry {
    pub path: String,
    pub label: ClassId,
}

/// How a cloud's features were obtained; recorded in distance reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Embeddings,
    Rasters { feature_side: usize, channels: usize },
}

impl std::fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureSource::Embeddings => f.write_str("embeddings"),
            FeatureSource::Rasters { feature_side, channels } => {
                write!(f, "rasters {feature_side}x{feature_side}x{channels}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCloud {
    pub path: PathBuf,
    pub cloud: LabeledPointCloud,
    pub source: FeatureSource,
}

pub fn parse_cloud_file(text: &str, path: &Path) -> Result<CloudFile> {
    serde_json::from_str(text).map_err(|e| ProtocolError::invalid(path, format!("invalid point-cloud JSON: {e}")))
}

pub fn write_cloud_file(path: &Path, file: &CloudFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file).map_err(|e| ProtocolError::invalid(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| ProtocolError::io(path, e))
}

pub fn load_cloud(path: &Path) -> Result<LoadedCloud> {
    let text = fs::read_to_string(path).map_err(|e| ProtocolError::io(path, e))?;
    let base = crate::manifest::base_dir(path);
    match parse_cloud_file(&text, path)? {
        CloudFile::Embeddings { name, points, labels } => {
            if points.len() != labels.len() {
                return Err(ProtocolError::invalid(
                    path,
                    format!("{} points but {} labels", points.len(), labels.len()),
                ));
            }
            let cloud = LabeledPointCloud::new(name, &points, labels).map_err(|e| ProtocolError::core(path, e))?;
            Ok(LoadedCloud {
                path: path.to_owned(),
                cloud,
                source: FeatureSource::Embeddings,
            })
        }
        CloudFile::Rasters {
            name,
            feature_side,
            images,
        } => {
            if feature_side == 0 {
                return Err(ProtocolError::invalid(path, "feature_side must be positive"));
            }
            let feats: Vec<(Vec<f64>, usize)> = images
                .par_iter()
                .map(|e| image_features(&base.join(&e.path), feature_side))
                .collect::<Result<_>>()?;
            let channels = feats.first().map_or(1, |f| f.1);
            if let Some(i) = feats.iter().position(|f| f.1 != channels) {
                return Err(ProtocolError::invalid(
                    path,
                    format!("{} has {} channels, expected {channels}", images[i].path, feats[i].1),
                ));
            }
            let dim = feature_side * feature_side * channels;
            let flat: Vec<f64> = feats.into_iter().flat_map(|f| f.0).collect();
            let labels = images.iter().map(|e| e.label).collect();
            let cloud = LabeledPointCloud::from_flat(name, dim, flat, labels).map_err(|e| ProtocolError::core(path, e))?;
            Ok(LoadedCloud {
                path: path.to_owned(),
                cloud,
                source: FeatureSource::Rasters { feature_side, channels },
            })
        }
    }
}

/// Downscaled features of one image file and its channel count.
pub fn image_features(path: &Path, side: usize) -> Result<(Vec<f64>, usize)> {
    let (h, w, c, values) = read_image(path)?;
    let f = raster_features(&values, h, w, c, side).map_err(|e| ProtocolError::core(path, e))?;
    Ok((f, c))
}

fn read_image(path: &Path) -> Result<(usize, usize, usize, Vec<f32>)> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ingf")) {
        let r = raster::read_raster(path)?;
        return Ok((r.height, r.width, 1, r.values));
    }
    let img = image::open(path).map_err(|e| ProtocolError::invalid(path, format!("cannot decode image: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    Ok(match img {
        DynamicImage::ImageLuma8(g) => (h, w, 1, g.into_raw().into_iter().map(|v| f32::from(v) / 255.0).collect()),
        other => (h, w, 3, other.to_rgb32f().into_raw()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.json");
        let f = CloudFile::Embeddings {
            name: "orig".into(),
            points: vec![vec![0.0, 1.0], vec![2.0, 3.5]],
            labels: vec![0, 1],
        };
        write_cloud_file(&p, &f).unwrap();
        let c = load_cloud(&p).unwrap();
        assert_eq!(c.cloud.len(), 2);
        assert_eq!(c.cloud.point(1), &[2.0, 3.5]);
        assert_eq!(c.source, FeatureSource::Embeddings);

        std::fs::write(&p, r#"{"kind":"embeddings","name":"x","points":[[1.0],[1.0,2.0]],"labels":[0,0]}"#).unwrap();
        assert!(load_cloud(&p).unwrap_err().to_string().contains("e.json"));
        std::fs::write(&p, r#"{"kind":"embeddings","name":"x","points":[[1.0]],"labels":[0,1]}"#).unwrap();
        assert!(load_cloud(&p).is_err());
        std::fs::write(&p, r#"{"kind":"other","name":"x"}"#).unwrap();
        assert!(load_cloud(&p).is_err());
    }

    #[test]
    fn raster_file() {
        let dir = tempfile::tempdir().unwrap();
        raster::write_raster(&dir.path().join("a.ingf"), &raster::Raster::new(4, 4, vec![0.5; 16])).unwrap();
        image::GrayImage::from_raw(2, 2, vec![255; 4])
            .unwrap()
            .save(dir.path().join("b.png"))
            .unwrap();
        let p = dir.path().join("r.json");
        let f = CloudFile::Rasters {
            name: "r".into(),
            feature_side: 2,
            images: vec![
                RasterEntry { path: "a.ingf".into(), label: 0 },
                RasterEntry { path: "b.png".into(), label: 1 },
            ],
        };
        write_cloud_file(&p, &f).unwrap();
        let c = load_cloud(&p).unwrap();
        assert_eq!(c.cloud.dim(), 4);
        assert_eq!(c.cloud.point(0), &[0.5; 4]);
        assert_eq!(c.cloud.point(1), &[1.0; 4]);
        assert_eq!(c.source.to_string(), "rasters 2x2x1");

        image::RgbImage::from_raw(1, 1, vec![0, 0, 0]).unwrap().save(dir.path().join("b.png")).unwrap();
        assert!(load_cloud(&p).unwrap_err().to_string().contains("channels"));
    }
}
