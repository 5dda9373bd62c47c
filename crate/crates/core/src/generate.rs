//! Random model and noise draws used by tests and the experiment harness.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{IsingModel, NoiseSpec};
use crate::tree::TreeGraph;

/// Weights drawn uniformly from `[w_min, w_max]`, every bias equal to `bias`.
pub fn random_weights<R: Rng + ?Sized>(
    tree: TreeGraph,
    w_min: f64,
    w_max: f64,
    bias: f64,
    rng: &mut R,
) -> Result<IsingModel> {
    if !(w_min <= w_max) {
        return Err(Error::InvalidParameter(format!(
            "weight range [{w_min}, {w_max}] is empty"
        )));
    }
    let weights = (0..tree.edges().len())
        .map(|_| rng.random_range(w_min..=w_max))
        .collect();
    let n = tree.n();
    IsingModel::new(tree, weights, vec![bias; n])
}

/// Weights from `[w_min, w_max]` and independent biases from `[b_min, b_max]`.
pub fn random_model<R: Rng + ?Sized>(
    tree: TreeGraph,
    (w_min, w_max): (f64, f64),
    (b_min, b_max): (f64, f64),
    rng: &mut R,
) -> Result<IsingModel> {
    if !(b_min <= b_max) {
        return Err(Error::InvalidParameter(format!(
            "bias range [{b_min}, {b_max}] is empty"
        )));
    }
    let mut model = random_weights(tree, w_min, w_max, 0.0, rng)?;
    let biases = (0..model.n())
        .map(|_| rng.random_range(b_min..=b_max))
        .collect();
    model = IsingModel::new(model.tree().clone(), model.weights().to_vec(), biases)?;
    Ok(model)
}

/// Independent flip probabilities drawn uniformly from `[lo, hi]`.
pub fn random_noise<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Result<NoiseSpec> {
    if !(lo <= hi) {
        return Err(Error::InvalidParameter(format!(
            "noise range [{lo}, {hi}] is empty"
        )));
    }
    NoiseSpec::new((0..n).map(|_| rng.random_range(lo..=hi)).collect())
}
