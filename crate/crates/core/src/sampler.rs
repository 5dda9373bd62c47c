//! Exact ancestral sampling from tree Ising models and the independent bit-flip channel.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`. Clean samples use stream 0 and the noise
//! channel uses stream 1, so reusing one seed for both steps does not correlate them.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{IsingModel, NoiseSpec};
use crate::scalar::Scalar;

const NOISE_STREAM: u64 = 1;

/// `m × n` matrix of `±1` spins, one sample per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    values: Array2<i8>,
    noisy: bool,
}

impl SampleBatch {
    pub fn new(values: Array2<i8>, noisy: bool) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter(format!(
                "sample entry {bad} is not ±1"
            )));
        }
        Ok(Self { values, noisy })
    }

    pub fn m(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<i8> {
        &self.values
    }

    pub fn row(&self, k: usize) -> ArrayView1<'_, i8> {
        self.values.row(k)
    }

    /// Whether the batch went through the noise channel.
    pub fn is_noisy(&self) -> bool {
        self.noisy
    }

    /// Column sums `Σ_k z_i` and the Gram matrix `Σ_k z_i z_j`, both exact integers.
    pub fn sufficient_stats(&self) -> (Vec<i64>, Array2<i64>) {
        let n = self.n();
        let mut sums = vec![0i64; n];
        let mut gram = Array2::<i64>::zeros((n, n));
        let mut acc = vec![0i64; n * n];
        for row in self.values.rows() {
            let row = row.as_slice().expect("standard layout");
            for i in 0..n {
                let zi = row[i] as i64;
                sums[i] += zi;
                let base = i * n;
                for j in i + 1..n {
                    acc[base + j] += zi * row[j] as i64;
                }
            }
        }
        for i in 0..n {
            gram[[i, i]] = self.m() as i64;
            for j in i + 1..n {
                gram[[i, j]] = acc[i * n + j];
                gram[[j, i]] = acc[i * n + j];
            }
        }
        (sums, gram)
    }

    /// Stacks two batches with the same width.
    pub fn concat(&self, other: &SampleBatch) -> Result<SampleBatch> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        let values =
            ndarray::concatenate(ndarray::Axis(0), &[self.values.view(), other.values.view()])
                .expect("widths checked");
        Ok(SampleBatch {
            values,
            noisy: self.noisy || other.noisy,
        })
    }
}

/// Draws `m` exact samples by ancestral sampling from node 0.
pub fn sample_clean<T: Scalar>(model: &IsingModel<T>, m: usize, seed: u64) -> Result<SampleBatch> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let anc = model.ancestral();
    let n = model.n();
    let root_plus = anc.root_plus.as_f64();
    let cond: Vec<[f64; 2]> = anc
        .cond_plus
        .iter()
        .map(|c| [c[0].as_f64(), c[1].as_f64()])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::<i8>::zeros((m, n));
    for mut row in values.rows_mut() {
        let row = row.as_slice_mut().expect("standard layout");
        for &v in &anc.order {
            let p_plus = match anc.parent[v] {
                None => root_plus,
                Some(p) => cond[v][usize::from(row[p] == 1)],
            };
            row[v] = if rng.random::<f64>() < p_plus { 1 } else { -1 };
        }
    }
    Ok(SampleBatch {
        values,
        noisy: false,
    })
}

/// Flips column `i` of every row independently with probability `q_i`. Returns a new batch.
pub fn apply_noise<T: Scalar>(
    batch: &SampleBatch,
    noise: &NoiseSpec<T>,
    seed: u64,
) -> Result<SampleBatch> {
    if noise.len() != batch.n() {
        return Err(Error::DimensionMismatch {
            expected: batch.n(),
            found: noise.len(),
        });
    }
    let q: Vec<f64> = noise.q().iter().map(|v| v.as_f64()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    let mut values = batch.values.clone();
    for mut row in values.rows_mut() {
        for (z, &qi) in row.iter_mut().zip(&q) {
            if rng.random::<f64>() < qi {
                *z = -*z;
            }
        }
    }
    Ok(SampleBatch {
        values,
        noisy: true,
    })
}
