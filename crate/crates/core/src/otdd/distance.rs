use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::gaussian::{bures_w2_squared, class_gaussian};
use super::sinkhorn::{sinkhorn, uniform_weights, SinkhornParams, SinkhornResult};
use super::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::model::ClassId;

/// Ground cost between two clouds with the label-to-label term memoized.
///
/// Rows are independent, so callers may fill them in parallel with
/// [`CostModel::fill_row`].
pub struct CostModel<'a> {
    src: &'a LabeledPointCloud,
    dst: &'a LabeledPointCloud,
    src_classes: BTreeMap<ClassId, usize>,
    dst_classes: BTreeMap<ClassId, usize>,
    /// `label_cost[s * n_dst_classes + d]`
    label_cost: Vec<f64>,
}

impl<'a> CostModel<'a> {
    pub fn new(src: &'a LabeledPointCloud, dst: &'a LabeledPointCloud) -> Result<Self> {
        if src.dim() != dst.dim() {
            return Err(Error::FeatureDimension {
                expected: src.dim(),
                found: dst.dim(),
            });
        }
        let index = |c: &LabeledPointCloud| -> BTreeMap<ClassId, usize> {
            c.class_counts().keys().enumerate().map(|(i, &k)| (k, i)).collect()
        };
        let src_classes = index(src);
        let dst_classes = index(dst);
        let src_g = src_classes
            .keys()
            .map(|&c| class_gaussian(src, c))
            .collect::<Result<Vec<_>>>()?;
        let dst_g = dst_classes
            .keys()
            .map(|&c| class_gaussian(dst, c))
            .collect::<Result<Vec<_>>>()?;
        let mut label_cost = Vec::with_capacity(src_g.len() * dst_g.len());
        for a in &src_g {
            for b in &dst_g {
                label_cost.push(bures_w2_squared(a, b)?);
            }
        }
        Ok(CostModel {
            src,
            dst,
            src_classes,
            dst_classes,
            label_cost,
        })
    }

    pub fn rows(&self) -> usize {
        self.src.len()
    }

    pub fn cols(&self) -> usize {
        self.dst.len()
    }

    /// Squared W2 between the Gaussians of two labels.
    pub fn label_cost(&self, src_label: ClassId, dst_label: ClassId) -> f64 {
        let s = self.src_classes[&src_label];
        let d = self.dst_classes[&dst_label];
        self.label_cost[s * self.dst_classes.len() + d]
    }

    pub fn fill_row(&self, i: usize, out: &mut [f64]) {
        let x = self.src.point(i);
        let s = self.src_classes[&self.src.label(i)];
        let nd = self.dst_classes.len();
        for (j, o) in out.iter_mut().enumerate() {
            let d = self.dst_classes[&self.dst.label(j)];
            *o = squared_distance(x, self.dst.point(j)) + self.label_cost[s * nd + d];
        }
    }

    pub fn build(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows(), self.cols());
        for i in 0..self.rows() {
            self.fill_row(i, m.row_mut(i));
        }
        m
    }
}

/// `C[i][j] = ‖x_i − y_j‖² + W2²(label(x_i), label(y_j))`.
pub fn pairwise_cost(src: &LabeledPointCloud, dst: &LabeledPointCloud) -> Result<Matrix> {
    Ok(CostModel::new(src, dst)?.build())
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OtddSettings {
    /// `None` uses 0.05 times the mean cross cost.
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for OtddSettings {
    fn default() -> Self {
        OtddSettings {
            epsilon: None,
            max_iter: 2000,
            tol: 1e-7,
        }
    }
}

pub const DEFAULT_EPSILON_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OtddResult {
    pub distance: f64,
    pub epsilon: f64,
    pub cross_cost: f64,
    pub self_cost_a: f64,
    pub self_cost_b: f64,
    /// Largest iteration count of the three transport problems.
    pub iterations: usize,
    /// Largest final marginal violation of the three problems.
    pub violation: f64,
    pub converged: bool,
}

/// Debiased entropic OTDD:
/// `OT(a, b) − ½ OT(a, a) − ½ OT(b, b)`, clamped at zero.
///
/// The clouds are put in a canonical order before any arithmetic, so
/// swapping the arguments gives a bit-identical result.
pub fn otdd_distance(a: &LabeledPointCloud, b: &LabeledPointCloud, settings: &OtddSettings) -> Result<OtddResult> {
    otdd_distance_with(a, b, settings, pairwise_cost)
}

/// [`otdd_distance`] with a caller-supplied cost builder (for example one
/// that fills rows in parallel). The builder must return the same matrix as
/// [`pairwise_cost`].
pub fn otdd_distance_with<F>(a: &LabeledPointCloud, b: &LabeledPointCloud, settings: &OtddSettings, build: F) -> Result<OtddResult>
where
    F: Fn(&LabeledPointCloud, &LabeledPointCloud) -> Result<Matrix>,
{
    if a.dim() != b.dim() {
        return Err(Error::FeatureDimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let swapped = a.content_cmp(b).is_gt();
    let (x, y) = if swapped { (b, a) } else { (a, b) };
    let c_xy = build(x, y)?;
    let epsilon = match settings.epsilon {
        Some(e) => e,
        None => {
            let s = c_xy.as_slice();
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let e = DEFAULT_EPSILON_FRACTION * mean;
            // all-zero cost: any positive epsilon gives the same answer
            if e > 0.0 {
                e
            } else {
                1.0
            }
        }
    };
    let params = SinkhornParams {
        epsilon,
        max_iter: settings.max_iter,
        tol: settings.tol,
    };
    let solve = |c: &Matrix| -> Result<SinkhornResult> {
        sinkhorn(c, &uniform_weights(c.rows()), &uniform_weights(c.cols()), &params)
    };
    let xy = solve(&c_xy)?;
    let xx = solve(&build(x, x)?)?;
    let yy = if core::ptr::eq(x, y) || x.content_cmp(y).is_eq() {
        xx.clone()
    } else {
        solve(&build(y, y)?)?
    };
    let distance = (xy.cost - (0.5 * xx.cost + 0.5 * yy.cost)).max(0.0);
    let (self_a, self_b) = if swapped { (yy.cost, xx.cost) } else { (xx.cost, yy.cost) };
    Ok(OtddResult {
        distance,
        epsilon,
        cross_cost: xy.cost,
        self_cost_a: self_a,
        self_cost_b: self_b,
        iterations: xy.iterations.max(xx.iterations).max(yy.iterations),
        violation: xy.violation.max(xx.violation).max(yy.violation),
        converged: xy.converged && xx.converged && yy.converged,
    })
}
