//! Exhaustive-enumeration ground truth for small models.
//!
//! States are indexed so that bit `i` of the index is 1 exactly when `x_i = +1`.

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::categorizer::StarVerdict;
use crate::error::{Error, Result};
use crate::estimator::{MomentEstimate, MomentSource};
use crate::model::{IsingModel, NoiseSpec};
use crate::scalar::Scalar;
use crate::tree::TreeGraph;

/// Enumeration is capped at `2^20` states.
pub const MAX_NODES: usize = 20;

/// Probability of every one of the `2^n` states.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution<T: Scalar = f64> {
    n: usize,
    probs: Vec<T>,
    noisy: bool,
}

impl<T: Scalar> JointDistribution<T> {
    pub fn new(n: usize, probs: Vec<T>) -> Result<Self> {
        if probs.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                found: probs.len(),
            });
        }
        let total: T = probs.iter().copied().sum();
        if probs.iter().any(|&p| !(p >= T::zero())) || (total - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::InvalidParameter(
                "probabilities must be non-negative and sum to 1".into(),
            ));
        }
        Ok(Self {
            n,
            probs,
            noisy: false,
        })
    }

    /// Point mass on a single spin configuration.
    pub fn point_mass(spins: &[i8]) -> Self {
        let n = spins.len();
        let mut probs = vec![T::zero(); 1 << n];
        probs[state_index(spins)] = T::one();
        Self {
            n,
            probs,
            noisy: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, spins: &[i8]) -> T {
        self.probs[state_index(spins)]
    }

    pub fn is_noisy(&self) -> bool {
        self.noisy
    }
}

/// Index of a spin configuration in the fixed state order.
pub fn state_index(spins: &[i8]) -> usize {
    spins
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == 1)
        .map(|(i, _)| 1usize << i)
        .sum()
}

#[inline]
fn spin(state: usize, i: usize) -> i8 {
    if state >> i & 1 == 1 {
        1
    } else {
        -1
    }
}

/// Normalized Boltzmann weights of every state.
pub fn exact_joint<T: Scalar>(model: &IsingModel<T>) -> Result<JointDistribution<T>> {
    let n = model.n();
    if n > MAX_NODES {
        return Err(Error::TooLarge { n, max: MAX_NODES });
    }
    let edges = model.tree().edges();
    let weights = model.weights();
    let biases = model.biases();
    let energies: Vec<T> = (0..1usize << n)
        .map(|s| {
            let pair: T = edges
                .iter()
                .zip(weights)
                .map(|(&(u, v), &w)| if spin(s, u) == spin(s, v) { w } else { -w })
                .sum();
            let field: T = biases
                .iter()
                .enumerate()
                .map(|(i, &b)| if spin(s, i) == 1 { b } else { -b })
                .sum();
            pair + field
        })
        .collect();
    // shift by the max exponent before exponentiating
    let top = energies.iter().copied().fold(T::neg_infinity(), T::max);
    let unnorm: Vec<T> = energies.iter().map(|&e| (e - top).exp()).collect();
    let z: T = unnorm.iter().copied().sum();
    Ok(JointDistribution {
        n,
        probs: unnorm.into_iter().map(|p| p / z).collect(),
        noisy: false,
    })
}

/// Pushforward through independent bit flips, one node at a time (`O(n 2^n)`).
pub fn noisy_joint<T: Scalar>(
    dist: &JointDistribution<T>,
    noise: &NoiseSpec<T>,
) -> Result<JointDistribution<T>> {
    if noise.len() != dist.n {
        return Err(Error::DimensionMismatch {
            expected: dist.n,
            found: noise.len(),
        });
    }
    let mut probs = dist.probs.clone();
    for (i, &q) in noise.q().iter().enumerate() {
        let bit = 1usize << i;
        let keep = T::one() - q;
        for s in 0..probs.len() {
            if s & bit == 0 {
                let (a, b) = (probs[s], probs[s | bit]);
                probs[s] = keep * a + q * b;
                probs[s | bit] = q * a + keep * b;
            }
        }
    }
    Ok(JointDistribution {
        n: dist.n,
        probs,
        noisy: true,
    })
}

/// Direct double sum over clean and noisy states (`O(4^n)`); reference for [`noisy_joint`].
pub fn noisy_joint_naive<T: Scalar>(
    dist: &JointDistribution<T>,
    noise: &NoiseSpec<T>,
) -> Result<JointDistribution<T>> {
    if noise.len() != dist.n {
        return Err(Error::DimensionMismatch {
            expected: dist.n,
            found: noise.len(),
        });
    }
    let size = dist.probs.len();
    let probs = (0..size)
        .map(|y| {
            (0..size)
                .map(|x| {
                    let channel = noise.q().iter().enumerate().fold(T::one(), |acc, (i, &q)| {
                        acc * if (x ^ y) >> i & 1 == 1 {
                            q
                        } else {
                            T::one() - q
                        }
                    });
                    dist.probs[x] * channel
                })
                .sum()
        })
        .collect();
    Ok(JointDistribution {
        n: dist.n,
        probs,
        noisy: true,
    })
}

/// Exact means, covariances and correlations by summation over all states.
pub fn exact_moments<T: Scalar>(dist: &JointDistribution<T>) -> MomentEstimate<T> {
    let n = dist.n;
    let mut mean = vec![T::zero(); n];
    let mut second = Array2::<T>::zeros((n, n));
    for (s, &p) in dist.probs.iter().enumerate() {
        if p == T::zero() {
            continue;
        }
        for i in 0..n {
            let si = spin(s, i);
            mean[i] = if si == 1 { mean[i] + p } else { mean[i] - p };
            for j in i + 1..n {
                let agree = si == spin(s, j);
                second[[i, j]] = if agree {
                    second[[i, j]] + p
                } else {
                    second[[i, j]] - p
                };
            }
        }
    }
    let source = if dist.noisy {
        MomentSource::ExactNoisy
    } else {
        MomentSource::ExactClean
    };
    MomentEstimate::from_second_moments(mean, &second, source)
}

/// Exact mutual information (nats) between two nodes.
pub fn exact_mutual_information<T: Scalar>(dist: &JointDistribution<T>, i: usize, j: usize) -> T {
    let mut joint = [[T::zero(); 2]; 2];
    for (s, &p) in dist.probs.iter().enumerate() {
        let a = s >> i & 1;
        let b = s >> j & 1;
        joint[a][b] = joint[a][b] + p;
    }
    let pi = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let pj = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = T::zero();
    for a in 0..2 {
        for b in 0..2 {
            if joint[a][b] > T::zero() {
                mi = mi + joint[a][b] * (joint[a][b] / (pi[a] * pj[b])).ln();
            }
        }
    }
    mi
}

/// Star/non-star shape of four nodes from topology alone: non-star when removing some edge
/// leaves exactly two of them on each side.
pub fn brute_force_verdict(tree: &TreeGraph, quad: [usize; 4]) -> Result<StarVerdict> {
    let distinct: BTreeSet<usize> = quad.iter().copied().collect();
    if distinct.len() != 4 || quad.iter().any(|&v| v >= tree.n()) {
        return Err(Error::InvalidParameter(format!(
            "quad {quad:?} must be four distinct nodes"
        )));
    }
    for &(u, v) in tree.edges() {
        let side = tree.side_of(u, v);
        let near: Vec<usize> = quad.iter().copied().filter(|&x| side[x]).collect();
        if near.len() == 2 {
            let partner = if near.contains(&quad[0]) {
                *near.iter().find(|&&x| x != quad[0]).expect("two nodes")
            } else {
                *quad
                    .iter()
                    .find(|&&x| x != quad[0] && !near.contains(&x))
                    .expect("two nodes")
            };
            return Ok(StarVerdict::non_star(quad, partner));
        }
    }
    Ok(StarVerdict::Star)
}

pub fn tv_distance<T: Scalar>(d1: &JointDistribution<T>, d2: &JointDistribution<T>) -> Result<T> {
    if d1.n != d2.n {
        return Err(Error::DimensionMismatch {
            expected: d1.n,
            found: d2.n,
        });
    }
    let sum: T = d1
        .probs
        .iter()
        .zip(&d2.probs)
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(sum / T::lit(2.0))
}

/// One representative of every unlabeled tree shape on `n` nodes.
///
/// Walks all `n^(n-2)` Prüfer codes and keeps the first tree of each isomorphism class,
/// so it is only meant for small `n` (≤ 9 or so).
pub fn free_trees(n: usize) -> Result<Vec<TreeGraph>> {
    if n <= 2 {
        return Ok(vec![TreeGraph::new(n.max(1), (1..n).map(|i| (0, i)))?]);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut code = vec![0usize; n - 2];
    loop {
        let tree = TreeGraph::from_prufer(n, &code)?;
        if seen.insert(shape_key(&tree)) {
            out.push(tree);
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == code.len() {
                return Ok(out);
            }
            code[k] += 1;
            if code[k] < n {
                break;
            }
            code[k] = 0;
            k += 1;
        }
    }
}

/// Isomorphism-invariant string of an unlabeled tree (AHU encoding rooted at the center(s)).
pub fn shape_key(tree: &TreeGraph) -> String {
    fn encode(tree: &TreeGraph, v: usize, parent: Option<usize>) -> String {
        let mut kids: Vec<String> = tree
            .neighbors(v)
            .iter()
            .filter(|&&w| Some(w) != parent)
            .map(|&w| encode(tree, w, Some(v)))
            .collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    centers(tree)
        .into_iter()
        .map(|c| encode(tree, c, None))
        .min()
        .expect("at least one center")
}

fn centers(tree: &TreeGraph) -> Vec<usize> {
    let n = tree.n();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut degree: Vec<usize> = (0..n).map(|v| tree.degree(v)).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &leaf in &layer {
            degree[leaf] = 0;
            for &w in tree.neighbors(leaf) {
                if degree[w] > 0 {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        layer = next;
    }
    layer.sort_unstable();
    layer
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, edges: &[(usize, usize, f64)], biases: Vec<f64>) -> IsingModel {
        IsingModel::from_weighted_edges(n, edges, biases).unwrap()
    }

    #[test]
    fn single_node_without_field_is_fair() {
        let m = IsingModel::new(TreeGraph::new(1, []).unwrap(), vec![], vec![0.0]).unwrap();
        assert_eq!(exact_joint(&m).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn independent_pair_is_uniform() {
        let d = exact_joint(&model(2, &[(0, 1, 0.0)], vec![0.0; 2])).unwrap();
        assert!(d.probs().iter().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn agreement_ratio_follows_the_weight() {
        let d = exact_joint(&model(2, &[(0, 1, 0.7)], vec![0.0; 2])).unwrap();
        let ratio = d.prob(&[1, 1]) / d.prob(&[1, -1]);
        assert!((ratio - 1.4f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn single_bit_channel() {
        let d = JointDistribution::<f64>::point_mass(&[-1]);
        assert_eq!(d.probs(), &[1.0, 0.0]);
        let out = noisy_joint(&d, &NoiseSpec::new(vec![0.3]).unwrap()).unwrap();
        assert!((out.probs()[0] - 0.7).abs() < 1e-15 && (out.probs()[1] - 0.3).abs() < 1e-15);
        let same = noisy_joint(&d, &NoiseSpec::zero(1)).unwrap();
        assert_eq!(same.probs(), d.probs());
    }

    #[test]
    fn sequential_channel_matches_double_sum() {
        let m = model(
            6,
            &[
                (0, 1, 0.9),
                (1, 2, -0.5),
                (1, 3, 0.7),
                (3, 4, 1.1),
                (3, 5, 0.6),
            ],
            vec![0.1, -0.2, 0.0, 0.3, 0.05, -0.1],
        );
        let d = exact_joint(&m).unwrap();
        let noise = NoiseSpec::new(vec![0.1, 0.2, 0.05, 0.3, 0.0, 0.15]).unwrap();
        let fast = noisy_joint(&d, &noise).unwrap();
        let slow = noisy_joint_naive(&d, &noise).unwrap();
        assert!(tv_distance(&fast, &slow).unwrap() < 1e-15);
    }

    #[test]
    fn uniform_and_point_mass_moments() {
        let u = exact_moments(&exact_joint(&model(2, &[(0, 1, 0.0)], vec![0.0; 2])).unwrap());
        assert!(u.mean.iter().all(|m| m.abs() < 1e-15));
        assert!((u.cov(0, 0) - 1.0).abs() < 1e-15 && u.cov(0, 1).abs() < 1e-15);
        let p = exact_moments(&JointDistribution::<f64>::point_mass(&[1, 1]));
        assert_eq!(p.mean, vec![1.0, 1.0]);
        assert!(p.cov.iter().all(|&c| c == 0.0));
        assert!(p.corr(0, 1).is_nan());
    }

    #[test]
    fn chain_correlation_decays_multiplicatively() {
        let e = exact_moments(
            &exact_joint(&model(3, &[(0, 1, 0.7), (1, 2, 0.7)], vec![0.0; 3])).unwrap(),
        );
        assert!((e.corr(0, 2) - e.corr(0, 1) * e.corr(1, 2)).abs() < 1e-12);
    }

    #[test]
    fn tv_extremes() {
        let a = JointDistribution::<f64>::point_mass(&[1, -1]);
        let b = JointDistribution::<f64>::point_mass(&[-1, -1]);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn verdicts_on_basic_shapes() {
        let path = TreeGraph::chain(4).unwrap();
        assert_eq!(
            brute_force_verdict(&path, [0, 1, 2, 3]).unwrap(),
            StarVerdict::non_star([0, 1, 2, 3], 1)
        );
        assert_eq!(
            brute_force_verdict(&path, [0, 2, 1, 3]).unwrap(),
            StarVerdict::non_star([0, 2, 1, 3], 1)
        );
        let star = TreeGraph::star(5, 0).unwrap();
        assert_eq!(
            brute_force_verdict(&star, [0, 1, 2, 3]).unwrap(),
            StarVerdict::Star
        );
        assert_eq!(
            brute_force_verdict(&star, [1, 2, 3, 4]).unwrap(),
            StarVerdict::Star
        );
        assert!(brute_force_verdict(&star, [1, 1, 2, 3]).is_err());
    }

    #[test]
    fn free_tree_counts() {
        // OEIS A000055
        let counts: Vec<usize> = (1..=8).map(|n| free_trees(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 1, 2, 3, 6, 11, 23]);
    }
}
