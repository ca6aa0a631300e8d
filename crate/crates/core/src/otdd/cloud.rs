use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::ClassId;

/// Labeled feature vectors of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPointCloud {
    name: String,
    dim: usize,
    points: Vec<f64>,
    labels: Vec<ClassId>,
}

impl LabeledPointCloud {
    pub fn new(name: impl Into<String>, points: &[Vec<f64>], labels: Vec<ClassId>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidCloud(format!("point {i} has dimension {} (expected {dim})", p.len())));
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(name, dim, flat, labels)
    }

    /// `points` is row-major `n x dim`.
    pub fn from_flat(name: impl Into<String>, dim: usize, points: Vec<f64>, labels: Vec<ClassId>) -> Result<Self> {
        let name = name.into();
        if labels.is_empty() {
            return Err(Error::InvalidCloud(format!("{name}: no points")));
        }
        if dim == 0 {
            return Err(Error::InvalidCloud(format!("{name}: feature dimension is zero")));
        }
        if points.len() != labels.len() * dim {
            return Err(Error::InvalidCloud(format!(
                "{name}: {} values for {} points of dimension {dim}",
                points.len(),
                labels.len()
            )));
        }
        if let Some(index) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "{name}: non-finite feature in point {}",
                index / dim
            )));
        }
        Ok(LabeledPointCloud {
            name,
            dim,
            points,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    /// Distinct classes with their point counts, ascending.
    pub fn class_counts(&self) -> BTreeMap<ClassId, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Same cloud with `offset` added to every point.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim {
            return Err(Error::FeatureDimension {
                expected: self.dim,
                found: offset.len(),
            });
        }
        let points = self
            .points
            .chunks(self.dim)
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Self::from_flat(self.name.clone(), self.dim, points, self.labels.clone())
    }

    /// Total order on contents (not names), used to make pairwise
    /// computations independent of argument order.
    pub(crate) fn content_cmp(&self, other: &Self) -> Ordering {
        self.dim
            .cmp(&other.dim)
            .then(self.labels.len().cmp(&other.labels.len()))
            .then_with(|| {
                self.points
                    .iter()
                    .zip(&other.points)
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| self.labels.cmp(&other.labels))
    }
}
