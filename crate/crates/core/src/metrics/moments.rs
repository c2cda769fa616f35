use nalgebra::{DMatrix, DVector};

use super::MetricsError;

/// Mean and unbiased covariance of a vector population.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub count: u64,
}

impl GaussianMoments {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Moments given directly, e.g. from a known generating distribution.
    pub fn from_parts(mean: DVector<f64>, covariance: DMatrix<f64>, count: u64) -> Result<Self, MetricsError> {
        if covariance.nrows() != mean.len() || covariance.ncols() != mean.len() {
            return Err(MetricsError::DimensionMismatch {
                left: mean.len(),
                right: covariance.nrows(),
            });
        }
        Ok(Self {
            mean,
            covariance,
            count,
        })
    }
}

/// Single-pass, mergeable mean/co-moment accumulator (Welford updates,
/// Chan et al. pairwise merge).
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    count: u64,
    mean: DVector<f64>,
    /// Sum of outer products of deviations from the running mean.
    comoment: DMatrix<f64>,
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: DVector::zeros(dim),
            comoment: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    fn check_dim(&self, got: usize) -> Result<(), MetricsError> {
        if got == self.dim() {
            Ok(())
        } else {
            Err(MetricsError::DimensionMismatch {
                left: self.dim(),
                right: got,
            })
        }
    }

    pub fn push(&mut self, v: &[f64]) -> Result<(), MetricsError> {
        self.check_dim(v.len())?;
        self.count += 1;
        let x = DVector::from_column_slice(v);
        let delta = &x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta_after = &x - &self.mean;
        self.comoment.ger(1.0, &delta, &delta_after, 1.0);
        Ok(())
    }

    /// Adds a batch of row vectors (`rows × dim`, row-major `f32`) through a
    /// two-pass batch estimate followed by a merge.
    pub fn push_rows(&mut self, data: &[f32], rows: usize) -> Result<(), MetricsError> {
        if rows == 0 {
            return Ok(());
        }
        let dim = self.dim();
        if data.len() != rows * dim {
            return Err(MetricsError::DimensionMismatch {
                left: rows * dim,
                right: data.len(),
            });
        }
        let mut x = DMatrix::from_fn(rows, dim, |r, c| f64::from(data[r * dim + c]));
        let mean = DVector::from_fn(dim, |c, _| x.column(c).sum() / rows as f64);
        for c in 0..dim {
            let m = mean[c];
            x.column_mut(c).add_scalar_mut(-m);
        }
        let comoment = x.transpose() * &x;
        self.merge(&MomentAccumulator {
            count: rows as u64,
            mean,
            comoment,
        })
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<(), MetricsError> {
        self.check_dim(other.dim())?;
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = &other.mean - &self.mean;
        self.mean += &delta * (nb / n);
        self.comoment += &other.comoment;
        self.comoment.ger(na * nb / n, &delta, &delta, 1.0);
        self.count += other.count;
        Ok(())
    }

    /// Covariance with `1/(n-1)` normalization, symmetrized.
    pub fn finish(&self) -> Result<GaussianMoments, MetricsError> {
        if self.count < 2 {
            return Err(MetricsError::TooFewVectors { got: self.count });
        }
        let cov = &self.comoment / (self.count - 1) as f64;
        let covariance = (&cov + cov.transpose()) * 0.5;
        Ok(GaussianMoments {
            mean: self.mean.clone(),
            covariance,
            count: self.count,
        })
    }
}

/// Fits mean and covariance to a stream of equal-length vectors.
pub fn fit_gaussian<I, V>(vectors: I) -> Result<GaussianMoments, MetricsError>
where
    I: IntoIterator<Item = V>,
    V: AsRef<[f64]>,
{
    let mut iter = vectors.into_iter().peekable();
    let dim = match iter.peek() {
        Some(v) => v.as_ref().len(),
        None => return Err(MetricsError::TooFewVectors { got: 0 }),
    };
    let mut acc = MomentAccumulator::new(dim);
    for v in iter {
        acc.push(v.as_ref())?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// Textbook two-pass estimate.
    fn batch_moments(data: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = data.len() as f64;
        let d = data[0].len();
        let mean: Vec<f64> = (0..d).map(|j| data.iter().map(|v| v[j]).sum::<f64>() / n).collect();
        let cov = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        data.iter()
                            .map(|v| (v[i] - mean[i]) * (v[j] - mean[j]))
                            .sum::<f64>()
                            / (n - 1.0)
                    })
                    .collect()
            })
            .collect();
        (mean, cov)
    }

    fn random_vectors(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.uniform(-3.0, 5.0)).collect())
            .collect()
    }

    #[test]
    fn antipodal_pair() {
        let v = [1.0, -2.0, 0.5];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let m = fit_gaussian([v.to_vec(), neg]).unwrap();
        assert!(m.mean.iter().all(|x| x.abs() < 1e-15));
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.covariance[(i, j)] - 2.0 * v[i] * v[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_vector_has_zero_covariance() {
        let m = fit_gaussian(vec![vec![3.0, 4.0]; 10]).unwrap();
        assert!(m.covariance.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn fewer_than_two_vectors_is_an_error() {
        assert!(fit_gaussian(vec![vec![1.0]]).is_err());
        assert!(fit_gaussian(Vec::<Vec<f64>>::new()).is_err());
    }

    #[test]
    fn streaming_matches_batch() {
        let data = random_vectors(1, 200, 4);
        let (mean, cov) = batch_moments(&data);
        let m = fit_gaussian(&data).unwrap();
        for i in 0..4 {
            assert!((m.mean[i] - mean[i]).abs() < 1e-12);
            for j in 0..4 {
                assert!((m.covariance[(i, j)] - cov[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn merge_matches_union() {
        let a = random_vectors(2, 37, 3);
        let b = random_vectors(3, 91, 3);
        let mut left = MomentAccumulator::new(3);
        a.iter().for_each(|v| left.push(v).unwrap());
        let mut right = MomentAccumulator::new(3);
        b.iter().for_each(|v| right.push(v).unwrap());
        left.merge(&right).unwrap();
        let merged = left.finish().unwrap();
        let all: Vec<Vec<f64>> = a.into_iter().chain(b).collect();
        let whole = fit_gaussian(&all).unwrap();
        assert!((merged.mean - whole.mean).amax() < 1e-9);
        assert!((merged.covariance - whole.covariance).amax() < 1e-9);
    }

    #[test]
    fn row_batches_match_single_pushes() {
        let data = random_vectors(4, 50, 3);
        let flat: Vec<f32> = data.iter().flatten().map(|&x| x as f32).collect();
        let mut batched = MomentAccumulator::new(3);
        batched.push_rows(&flat[..60], 20).unwrap();
        batched.push_rows(&flat[60..], 30).unwrap();
        let single = fit_gaussian(
            data.iter()
                .map(|v| v.iter().map(|&x| f64::from(x as f32)).collect::<Vec<_>>()),
        )
        .unwrap();
        let b = batched.finish().unwrap();
        assert!((b.mean - single.mean).amax() < 1e-9);
        assert!((b.covariance - single.covariance).amax() < 1e-9);
    }
}
