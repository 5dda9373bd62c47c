//! Closed-form relations between clean and noisy moments, the flip-probability quadratic,
//! the leaf-swap noise construction and the learner's thresholds and sample bound.

use ndarray::Array2;
use num_bigint::BigUint;
use num_traits::FromPrimitive;

use crate::error::{Error, Result};
use crate::estimator::{MomentEstimate, MomentSource};
use crate::model::{AssumptionParams, IsingModel, NoiseSpec};
use crate::scalar::Scalar;
use crate::tree::TreeGraph;

/// Slack allowed above `r = 1` when the quadratic consumes empirical moments.
pub const QUADRATIC_TOLERANCE: f64 = 1e-12;

#[inline]
fn gain<T: Scalar>(q: T) -> T {
    T::one() - T::lit(2.0) * q
}

/// `E[x^e] = (1 - 2q) E[x]`.
pub fn noisy_mean<T: Scalar>(mean: T, q: T) -> T {
    gain(q) * mean
}

/// `Σ'_ij = (1 - 2q_i)(1 - 2q_j) Σ_ij` for `i ≠ j`.
pub fn noisy_cov<T: Scalar>(cov: T, q_i: T, q_j: T) -> T {
    gain(q_i) * gain(q_j) * cov
}

/// Inverse of [`noisy_cov`].
pub fn clean_cov<T: Scalar>(noisy: T, q_i: T, q_j: T) -> T {
    noisy / (gain(q_i) * gain(q_j))
}

/// Noisy variance `1 - (1 - 2q)² (1 - Σ_ii)`.
pub fn noisy_var<T: Scalar>(var: T, q: T) -> T {
    let g = gain(q);
    T::one() - g * g * (T::one() - var)
}

/// Clean variance `1 - (1 - Σ'_ii)/(1 - 2q)²`; must land in `(0, 1]`.
pub fn noisy_var_to_clean<T: Scalar>(noisy_var: T, q: T) -> Result<T> {
    let g = gain(q);
    let v = T::one() - (T::one() - noisy_var) / (g * g);
    if v > T::zero() && v <= T::one() {
        Ok(v)
    } else {
        Err(Error::InfeasibleNoise(format!(
            "noisy variance {noisy_var} with q = {q} gives clean variance {v}"
        )))
    }
}

/// Correlation between the ends of a path: the product of its edge correlations.
pub fn path_correlation<T: Scalar>(edge_corrs: &[T]) -> T {
    edge_corrs.iter().fold(T::one(), |acc, &r| acc * r)
}

/// Exact clean moments of every pair, from belief propagation and path products. Works for any `n`.
pub fn exact_clean_moments<T: Scalar>(model: &IsingModel<T>) -> MomentEstimate<T> {
    let tree = model.tree();
    let n = tree.n();
    let mean = model.exact_means();
    let edge_rho = model.exact_edge_correlations();
    let mut corr = Array2::<T>::zeros((n, n));
    for s in 0..n {
        let (order, parent) = tree.bfs(s);
        corr[[s, s]] = T::one();
        for &v in &order[1..] {
            let p = parent[v].expect("non-root has a parent");
            let k = tree
                .edges()
                .binary_search(&(p.min(v), p.max(v)))
                .expect("tree edge");
            corr[[s, v]] = corr[[s, p]] * edge_rho[k];
        }
    }
    let sd: Vec<T> = mean.iter().map(|&m| (T::one() - m * m).sqrt()).collect();
    let cov = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            T::one() - mean[i] * mean[i]
        } else {
            corr[[i, j]] * sd[i] * sd[j]
        }
    });
    MomentEstimate::from_covariance(mean, cov, MomentSource::ExactClean)
}

/// Pushes clean moments through the flip channel.
pub fn noisy_moments<T: Scalar>(
    clean: &MomentEstimate<T>,
    noise: &NoiseSpec<T>,
) -> Result<MomentEstimate<T>> {
    let n = clean.n();
    if noise.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: noise.len(),
        });
    }
    let q = noise.q();
    let mean: Vec<T> = (0..n).map(|i| noisy_mean(clean.mean[i], q[i])).collect();
    let cov = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            T::one() - mean[i] * mean[i]
        } else {
            noisy_cov(clean.cov(i, j), q[i], q[j])
        }
    });
    Ok(MomentEstimate::from_covariance(
        mean,
        cov,
        MomentSource::ExactNoisy,
    ))
}

/// Flip probability recovered from the quadratic, with the triple it came from if known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipEstimate<T: Scalar = f64> {
    pub q_hat: T,
    /// Conditioning triple `(i; j, k)`.
    pub triple: Option<(usize, usize, usize)>,
    /// `r = (1 - 2 q_hat)²` before clamping.
    pub r: T,
}

/// Solves `(1 - 2q)² = 1 - s11 + s12·s13/s23` for the root below one half.
pub fn estimate_flip_quadratic<T: Scalar>(
    s11: T,
    s12: T,
    s13: T,
    s23: T,
) -> Result<FlipEstimate<T>> {
    solve_quadratic(s11, s12, s13, s23, None)
}

/// [`estimate_flip_quadratic`] for node `i` conditioned on `j`, `k`, reading covariances from `moments`.
pub fn flip_from_moments<T: Scalar>(
    moments: &MomentEstimate<T>,
    i: usize,
    j: usize,
    k: usize,
) -> Result<FlipEstimate<T>> {
    solve_quadratic(
        moments.cov(i, i),
        moments.cov(i, j),
        moments.cov(i, k),
        moments.cov(j, k),
        Some((i, j, k)),
    )
}

fn solve_quadratic<T: Scalar>(
    s11: T,
    s12: T,
    s13: T,
    s23: T,
    triple: Option<(usize, usize, usize)>,
) -> Result<FlipEstimate<T>> {
    let r = T::one() - s11 + s12 * s13 / s23;
    let (i, j, k) = triple.unwrap_or((0, 0, 0));
    let invalid = || Error::InvalidConfiguration {
        i,
        j,
        k,
        r: r.as_f64(),
    };
    if !r.is_finite() || r <= T::zero() || r > T::one() + T::lit(QUADRATIC_TOLERANCE) {
        return Err(invalid());
    }
    let q_hat = (T::one() - r.min(T::one()).sqrt()) / T::lit(2.0);
    Ok(FlipEstimate { q_hat, triple, r })
}

fn check_swaps(tree: &TreeGraph, swaps: &[(usize, usize)]) -> Result<()> {
    let mut parents = Vec::with_capacity(swaps.len());
    let mut touched = vec![false; tree.n()];
    for &(leaf, parent) in swaps {
        if leaf >= tree.n()
            || parent >= tree.n()
            || !tree.is_leaf(leaf)
            || !tree.has_edge(leaf, parent)
        {
            return Err(Error::InvalidParameter(format!(
                "({leaf}, {parent}) is not a leaf and its neighbor"
            )));
        }
        if parents.contains(&parent) {
            return Err(Error::InvalidParameter(format!(
                "parent {parent} appears in two swaps"
            )));
        }
        if touched[leaf] || touched[parent] {
            return Err(Error::InvalidParameter(format!(
                "node reused across swaps at ({leaf}, {parent})"
            )));
        }
        touched[leaf] = true;
        touched[parent] = true;
        parents.push(parent);
    }
    Ok(())
}

/// Noise vector under which the tree with each `(leaf, parent)` exchanged explains the same
/// noisy covariances: `q̂_leaf = (1 - (1 - 2q_leaf)·√(Σ_lp²/Σ_pp - Σ_ll + 1))/2`, `q̂_parent = 0`.
pub fn theorem2_qhat<T: Scalar>(
    model: &IsingModel<T>,
    noise: &NoiseSpec<T>,
    swaps: &[(usize, usize)],
) -> Result<NoiseSpec<T>> {
    if noise.len() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: noise.len(),
        });
    }
    check_swaps(model.tree(), swaps)?;
    if swaps.is_empty() {
        return Ok(noise.clone());
    }
    let clean = exact_clean_moments(model);
    let mut q = noise.q().to_vec();
    for &(l, p) in swaps {
        let s_lp = clean.cov(l, p);
        let inner = s_lp * s_lp / clean.cov(p, p) - clean.cov(l, l) + T::one();
        let q_hat = (T::one() - gain(noise.q()[l]) * inner.sqrt()) / T::lit(2.0);
        if !(q_hat >= T::zero() && q_hat < T::lit(0.5)) {
            return Err(Error::ConstructionFailure(format!(
                "q̂ for leaf {l} is {q_hat}"
            )));
        }
        q[l] = q_hat;
        q[p] = T::zero();
    }
    NoiseSpec::new(q).map_err(|e| Error::ConstructionFailure(e.to_string()))
}

/// The tree with every `(leaf, parent)` exchanged: the leaf takes over the parent's other
/// neighbours and the parent becomes its leaf.
pub fn swap_tree(tree: &TreeGraph, swaps: &[(usize, usize)]) -> Result<TreeGraph> {
    check_swaps(tree, swaps)?;
    let relabel = |v: usize| {
        swaps
            .iter()
            .find_map(|&(l, p)| {
                if v == l {
                    Some(p)
                } else if v == p {
                    Some(l)
                } else {
                    None
                }
            })
            .unwrap_or(v)
    };
    TreeGraph::new(
        tree.n(),
        tree.edges().iter().map(|&(u, v)| (relabel(u), relabel(v))),
    )
}

/// Model on the swapped tree and its noise vector, fitted so its noisy node and edge moments
/// match the original model's after de-noising with [`theorem2_qhat`].
pub fn swapped_model<T: Scalar>(
    model: &IsingModel<T>,
    noise: &NoiseSpec<T>,
    swaps: &[(usize, usize)],
) -> Result<(IsingModel<T>, NoiseSpec<T>)> {
    let q_hat = theorem2_qhat(model, noise, swaps)?;
    let tree = swap_tree(model.tree(), swaps)?;
    let observed = noisy_moments(&exact_clean_moments(model), noise)?;
    let g: Vec<T> = q_hat.q().iter().map(|&q| gain(q)).collect();
    let means: Vec<T> = (0..model.n()).map(|i| observed.mean[i] / g[i]).collect();
    let covs: Vec<T> = tree
        .edges()
        .iter()
        .map(|&(u, v)| observed.cov(u, v) / (g[u] * g[v]))
        .collect();
    let fitted = IsingModel::from_moments(tree, &means, &covs)
        .map_err(|e| Error::ConstructionFailure(e.to_string()))?;
    Ok((fitted, q_hat))
}

/// Population thresholds for the proximal sets and the quad test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T: Scalar = f64> {
    pub t1: T,
    pub t2: T,
    pub t3: T,
}

/// `t1 = (1-2q)²(1-μ²)ρ_min⁴`, `t2 = min(t1, t1(1-2q)√(1-μ²)/ρ_max)`, `t3 = (1+ρ_max²)/2`.
pub fn thresholds<T: Scalar>(params: &AssumptionParams<T>) -> Thresholds<T> {
    let g = gain(params.q_max);
    let spread = T::one() - params.mu_max * params.mu_max;
    let r = params.rho_min;
    let t1 = g * g * spread * (r * r * r * r);
    let t2 = t1.min(t1 * g * spread.sqrt() / params.rho_max);
    let t3 = (T::one() + params.rho_max * params.rho_max) / T::lit(2.0);
    Thresholds { t1, t2, t3 }
}

/// Sample count sufficient for exact recovery with probability `1 - τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBound {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub delta: f64,
    /// `ceil(128/δ² · ln(6n²/τ))`; far beyond `u64` for typical parameters.
    pub m_required: BigUint,
}

/// `δ = t2³(1 - t3)/128` and `m = ceil((128/δ²) ln(6n²/τ))`.
pub fn sample_bound(params: &AssumptionParams<f64>, n: usize, tau: f64) -> Result<SampleBound> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tau = {tau} not in (0, 1)"
        )));
    }
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "n = {n} must be at least 4"
        )));
    }
    let Thresholds { t1, t2, t3 } = thresholds(params);
    let delta = t2 * t2 * t2 * (1.0 - t3) / 128.0;
    let nf = n as f64;
    let m = (128.0 / (delta * delta) * (6.0 * nf * nf / tau).ln()).ceil();
    let m_required = BigUint::from_f64(m)
        .ok_or_else(|| Error::InvalidParameter(format!("sample bound {m} is not representable")))?;
    Ok(SampleBound {
        t1,
        t2,
        t3,
        delta,
        m_required,
    })
}
