//! First and second moments of `±1` data.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sampler::SampleBatch;
use crate::scalar::Scalar;

/// Where a [`MomentEstimate`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    EmpiricalNoisy,
    EmpiricalClean,
    ExactClean,
    ExactNoisy,
}

/// Means, covariances and correlations of `±1` variables.
///
/// The diagonal of `cov` is always `1 - mean²`; for `±1` data that is an exact identity of the
/// population-normalized estimator. Correlations of a zero-variance node are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate<T: Scalar = f64> {
    pub mean: Vec<T>,
    pub cov: Array2<T>,
    pub corr: Array2<T>,
    pub source: MomentSource,
}

impl<T: Scalar> MomentEstimate<T> {
    /// Builds moments from means and second moments `E[x_i x_j]` (diagonal ignored).
    pub fn from_second_moments(mean: Vec<T>, second: &Array2<T>, source: MomentSource) -> Self {
        let n = mean.len();
        let mut cov = Array2::<T>::zeros((n, n));
        for i in 0..n {
            cov[[i, i]] = T::one() - mean[i] * mean[i];
            for j in i + 1..n {
                let c = second[[i, j]] - mean[i] * mean[j];
                cov[[i, j]] = c;
                cov[[j, i]] = c;
            }
        }
        Self::from_covariance(mean, cov, source)
    }

    /// Derives correlations from a covariance matrix whose diagonal must already be `1 - mean²`.
    pub fn from_covariance(mean: Vec<T>, cov: Array2<T>, source: MomentSource) -> Self {
        let n = mean.len();
        let mut corr = Array2::<T>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let denom = (cov[[i, i]] * cov[[j, j]]).sqrt();
                corr[[i, j]] = if denom > T::zero() {
                    cov[[i, j]] / denom
                } else {
                    T::nan()
                };
            }
        }
        Self {
            mean,
            cov,
            corr,
            source,
        }
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn cov(&self, i: usize, j: usize) -> T {
        self.cov[[i, j]]
    }

    #[inline]
    pub fn corr(&self, i: usize, j: usize) -> T {
        self.corr[[i, j]]
    }

    /// Largest absolute entrywise covariance difference.
    pub fn max_cov_error(&self, other: &MomentEstimate<T>) -> T {
        self.cov
            .iter()
            .zip(other.cov.iter())
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

/// Sample means and population (`1/m`) covariances of a batch.
pub fn empirical_moments<T: Scalar>(batch: &SampleBatch) -> Result<MomentEstimate<T>> {
    let m = batch.m();
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 samples, got {m}"
        )));
    }
    let (sums, gram) = batch.sufficient_stats();
    if let Some(node) = sums.iter().position(|s| s.unsigned_abs() as usize == m) {
        return Err(Error::DegenerateColumn { node });
    }
    let mf = T::from_count(m);
    let mean: Vec<T> = sums.iter().map(|&s| T::lit(s as f64) / mf).collect();
    let second = gram.mapv(|g| T::lit(g as f64) / mf);
    let source = if batch.is_noisy() {
        MomentSource::EmpiricalNoisy
    } else {
        MomentSource::EmpiricalClean
    };
    Ok(MomentEstimate::from_second_moments(mean, &second, source))
}
