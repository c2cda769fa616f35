use nalgebra::{DMatrix, SymmetricEigen};

use super::{GaussianMoments, MetricsError};

/// Ridge added to both covariances when either is not positive definite.
pub const DEFAULT_SHRINKAGE: f64 = 1e-6;

const EIGEN_MAX_ITER: usize = 10_000;

fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, MetricsError> {
    SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_MAX_ITER).ok_or(MetricsError::EigenNoConvergence)
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// PSD square root through the eigendecomposition, negative eigenvalues clamped to 0.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricsError> {
    let eig = symmetric_eigen(symmetrize(m))?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, MetricsError> {
    Ok(symmetric_eigen(symmetrize(m))?.eigenvalues.min())
}

/// Fréchet distance between two Gaussians with the default shrinkage.
pub fn frechet_distance(a: &GaussianMoments, b: &GaussianMoments) -> Result<f64, MetricsError> {
    frechet_distance_with(a, b, DEFAULT_SHRINKAGE)
}

/// `‖μa − μb‖² + Tr(Σa + Σb − 2 (Σa½ Σb Σa½)½)`.
///
/// If either covariance has an eigenvalue at or below `shrinkage`, both get
/// `shrinkage · I` added before any square root is taken, and the traces use
/// the same shifted matrices so identical inputs still give exactly 0.
pub fn frechet_distance_with(
    a: &GaussianMoments,
    b: &GaussianMoments,
    shrinkage: f64,
) -> Result<f64, MetricsError> {
    if a.dim() != b.dim() {
        return Err(MetricsError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let d = a.dim();
    let mean_term = (&a.mean - &b.mean).norm_squared();

    let mut sa = symmetrize(&a.covariance);
    let mut sb = symmetrize(&b.covariance);
    if min_eigenvalue(&sa)? <= shrinkage || min_eigenvalue(&sb)? <= shrinkage {
        for i in 0..d {
            sa[(i, i)] += shrinkage;
            sb[(i, i)] += shrinkage;
        }
    }

    let root_a = psd_sqrt(&sa)?;
    let sandwich = symmetrize(&(&root_a * &sb * &root_a));
    let cross: f64 = symmetric_eigen(sandwich)?
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let fd = mean_term + sa.trace() + sb.trace() - 2.0 * cross;
    Ok(fd.max(0.0))
}
