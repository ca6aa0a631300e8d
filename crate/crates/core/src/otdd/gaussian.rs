//! Class-conditional Gaussians and the 2-Wasserstein (Bures) distance
//! between them.

use alloc::vec::Vec;

use super::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::linalg::{self, psd_eigen, psd_sqrt, squared_distance, Matrix};
use crate::model::ClassId;

/// Covariance, either as a full matrix or as a factor `F` with `Σ = FᵀF`.
///
/// Empirical covariances keep the factor form (`F` holds the centered
/// points scaled by `1/sqrt(n)`), which keeps high-dimensional features with
/// few samples per class cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Dense(Matrix),
    Factor(Matrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub class: ClassId,
    pub mean: Vec<f64>,
    covariance: Covariance,
}

impl GaussianSummary {
    /// Gaussian with an explicit covariance matrix. The matrix must be
    /// symmetric within 1e-10 and PSD up to eigenvalue clamping.
    pub fn new(class: ClassId, mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        let d = mean.len();
        if covariance.rows() != d || covariance.cols() != d {
            return Err(Error::FeatureDimension {
                expected: d,
                found: covariance.rows(),
            });
        }
        let asym = covariance.max_asymmetry();
        if asym > 1e-10 {
            return Err(Error::InvalidCloud(alloc::format!(
                "covariance asymmetric by {asym:e}"
            )));
        }
        psd_eigen(&covariance)?;
        Ok(GaussianSummary {
            class,
            mean,
            covariance: Covariance::Dense(covariance.symmetrized()),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Full `d x d` covariance.
    pub fn covariance_matrix(&self) -> Matrix {
        match &self.covariance {
            Covariance::Dense(m) => m.clone(),
            Covariance::Factor(f) => f.transpose().gram_rows(),
        }
    }

    fn trace(&self) -> f64 {
        match &self.covariance {
            Covariance::Dense(m) => m.trace(),
            Covariance::Factor(f) => f.frobenius_sq(),
        }
    }
}

/// Empirical mean and population covariance (divisor `n_c`) of one class.
pub fn class_gaussian(cloud: &LabeledPointCloud, class: ClassId) -> Result<GaussianSummary> {
    let members: Vec<usize> = (0..cloud.len()).filter(|&i| cloud.label(i) == class).collect();
    if members.is_empty() {
        return Err(Error::ClassAbsent(class));
    }
    let d = cloud.dim();
    let n = members.len() as f64;
    let mut mean = alloc::vec![0.0; d];
    for &i in &members {
        for (m, &x) in mean.iter_mut().zip(cloud.point(i)) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let scale = 1.0 / libm::sqrt(n);
    let mut factor = Matrix::zeros(members.len(), d);
    for (r, &i) in members.iter().enumerate() {
        for ((f, &x), &m) in factor.row_mut(r).iter_mut().zip(cloud.point(i)).zip(&mean) {
            *f = (x - m) * scale;
        }
    }
    Ok(GaussianSummary {
        class,
        mean,
        covariance: Covariance::Factor(factor),
    })
}

/// `‖μa − μb‖² + Tr(Σa + Σb − 2 (Σb^½ Σa Σb^½)^½)`, clamped at zero.
///
/// Two factored covariances use `Tr((Σb^½ Σa Σb^½)^½) = ‖Fa Fbᵀ‖_*`; any
/// dense operand goes through symmetric eigendecomposition square roots.
pub fn bures_w2_squared(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::FeatureDimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    match (&a.covariance, &b.covariance) {
        (Covariance::Factor(fa), Covariance::Factor(fb)) => {
            let cross = linalg::nuclear_norm(&fa.matmul(&fb.transpose()));
            Ok(combine(a, b, cross))
        }
        _ => bures_w2_squared_dense(a, b),
    }
}

/// Eigendecomposition route on full covariance matrices.
pub fn bures_w2_squared_dense(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::FeatureDimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    // Tr((Σb^½ Σa Σb^½)^½) is the nuclear norm of Σa^½ Σb^½; singular values
    // avoid a second square root of near-zero eigenvalues.
    let root_a = psd_sqrt(&a.covariance_matrix())?;
    let root_b = psd_sqrt(&b.covariance_matrix())?;
    let cross = linalg::nuclear_norm(&root_a.matmul(&root_b));
    Ok(combine(a, b, cross))
}

fn combine(a: &GaussianSummary, b: &GaussianSummary, cross: f64) -> f64 {
    let mean_term = squared_distance(&a.mean, &b.mean);
    (mean_term + a.trace() + b.trace() - 2.0 * cross).max(0.0)
}
