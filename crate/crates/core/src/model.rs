//! Tree Ising models, noise vectors and the assumption bounds the learner relies on.

use crate::error::{Error, Result};
use crate::oracle;
use crate::scalar::Scalar;
use crate::tree::TreeGraph;

/// Largest model validated by exhaustive enumeration.
pub const ORACLE_MAX_NODES: usize = 20;

/// Tree-structured Ising model with `P(x) ∝ exp(Σ_(u,v) w_uv x_u x_v + Σ_i b_i x_i)`.
///
/// `weights[k]` belongs to `tree.edges()[k]`; the exponent counts each tree edge once,
/// which is the `xᵀWx/2` convention with a symmetric zero-diagonal `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel<T: Scalar = f64> {
    tree: TreeGraph,
    weights: Vec<T>,
    biases: Vec<T>,
}

impl<T: Scalar> IsingModel<T> {
    pub fn new(tree: TreeGraph, weights: Vec<T>, biases: Vec<T>) -> Result<Self> {
        if weights.len() != tree.edges().len() {
            return Err(Error::DimensionMismatch {
                expected: tree.edges().len(),
                found: weights.len(),
            });
        }
        if biases.len() != tree.n() {
            return Err(Error::DimensionMismatch {
                expected: tree.n(),
                found: biases.len(),
            });
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "weights and biases must be finite".into(),
            ));
        }
        Ok(Self {
            tree,
            weights,
            biases,
        })
    }

    /// Builds a model from `(u, v, w)` triples in any order.
    pub fn from_weighted_edges(
        n: usize,
        edges: &[(usize, usize, T)],
        biases: Vec<T>,
    ) -> Result<Self> {
        let tree = TreeGraph::new(n, edges.iter().map(|&(u, v, _)| (u, v)))?;
        let weights = tree
            .edges()
            .iter()
            .map(|&(a, b)| {
                edges
                    .iter()
                    .find(|&&(u, v, _)| (u.min(v), u.max(v)) == (a, b))
                    .map(|&(_, _, w)| w)
                    .expect("edge present")
            })
            .collect();
        Self::new(tree, weights, biases)
    }

    /// The unique tree model with the given node means and edge covariances (aligned with
    /// `tree.edges()`), built from the implied pairwise marginals.
    pub fn from_moments(tree: TreeGraph, means: &[T], edge_covs: &[T]) -> Result<Self> {
        let n = tree.n();
        if means.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: means.len(),
            });
        }
        if edge_covs.len() != tree.edges().len() {
            return Err(Error::DimensionMismatch {
                expected: tree.edges().len(),
                found: edge_covs.len(),
            });
        }
        let (one, two, four) = (T::one(), T::lit(2.0), T::lit(4.0));
        let quarter = one / four;
        let half = one / two;
        let mut biases: Vec<T> = Vec::with_capacity(n);
        for (v, &mu) in means.iter().enumerate() {
            if !(mu.abs() < one) {
                return Err(Error::InvalidModel(format!("mean of node {v} is {mu}")));
            }
            // node term of the factorization: -(d_v - 1)·½ ln(P+/P-)
            let g = half * ((one + mu) / (one - mu)).ln();
            biases.push((one - T::from_count(tree.degree(v))) * g);
        }
        let mut weights = Vec::with_capacity(edge_covs.len());
        for (&(u, v), &cov) in tree.edges().iter().zip(edge_covs) {
            let e = cov + means[u] * means[v];
            let p = |a: T, b: T| (one + a * means[u] + b * means[v] + a * b * e) / four;
            let (pp, pm, mp, mm) = (p(one, one), p(one, -one), p(-one, one), p(-one, -one));
            if !(pp > T::zero() && pm > T::zero() && mp > T::zero() && mm > T::zero()) {
                return Err(Error::InvalidModel(format!(
                    "edge ({u}, {v}) moments give a non-positive marginal"
                )));
            }
            weights.push(quarter * (pp * mm / (pm * mp)).ln());
            biases[u] = biases[u] + quarter * (pp * pm / (mp * mm)).ln();
            biases[v] = biases[v] + quarter * (pp * mp / (pm * mm)).ln();
        }
        Self::new(tree, weights, biases)
    }

    pub fn tree(&self) -> &TreeGraph {
        &self.tree
    }

    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn biases(&self) -> &[T] {
        &self.biases
    }

    /// Weight on edge `(u, v)`, or zero when the nodes are not adjacent.
    pub fn weight(&self, u: usize, v: usize) -> T {
        let key = (u.min(v), u.max(v));
        self.tree
            .edges()
            .binary_search(&key)
            .map(|k| self.weights[k])
            .unwrap_or_else(|_| T::zero())
    }

    /// Exact ancestral factorization rooted at node 0 (sum-product over `{-1, +1}`).
    pub fn ancestral(&self) -> Ancestral<T> {
        Ancestral::new(self)
    }

    /// Exact node means via belief propagation. Works for any `n`.
    pub fn exact_means(&self) -> Vec<T> {
        self.ancestral().means()
    }

    /// Exact correlation of every tree edge, aligned with `tree().edges()`.
    pub fn exact_edge_correlations(&self) -> Vec<T> {
        let anc = self.ancestral();
        let means = anc.means();
        self.tree
            .edges()
            .iter()
            .map(|&(u, v)| {
                let (p, c) = if anc.parent[v] == Some(u) {
                    (u, v)
                } else {
                    (v, u)
                };
                let cov = anc.edge_second_moment(p, c, &means) - means[p] * means[c];
                let one = T::one();
                cov / ((one - means[p] * means[p]) * (one - means[c] * means[c])).sqrt()
            })
            .collect()
    }
}

/// Rooted conditional tables: the root marginal and `P(x_v = +1 | x_parent)` for every other node.
#[derive(Debug, Clone)]
pub struct Ancestral<T: Scalar = f64> {
    /// Breadth-first order from the root (node 0).
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
    pub root_plus: T,
    /// `cond_plus[v][s]` = `P(x_v = +1 | x_parent = -1)` for `s = 0`, `+1` for `s = 1`.
    pub cond_plus: Vec<[T; 2]>,
}

impl<T: Scalar> Ancestral<T> {
    fn new(model: &IsingModel<T>) -> Self {
        let tree = model.tree();
        let n = tree.n();
        let (order, parent) = tree.bfs(0);
        // belief[v][s]: normalized exp(b_v x) times the product of child messages, x = -1 for s = 0.
        let mut belief = vec![[T::one(); 2]; n];
        let mut cond_plus = vec![[T::zero(); 2]; n];
        let signs = [-T::one(), T::one()];
        for &v in &order {
            let b = model.biases[v];
            belief[v] = [(-b).exp(), b.exp()];
        }
        for &v in order.iter().rev() {
            let z = belief[v][0] + belief[v][1];
            belief[v] = [belief[v][0] / z, belief[v][1] / z];
            if let Some(p) = parent[v] {
                let w = model.weight(p, v);
                let mut message = [T::zero(); 2];
                for (sp, &xp) in signs.iter().enumerate() {
                    let plus = (w * xp).exp() * belief[v][1];
                    let minus = (-w * xp).exp() * belief[v][0];
                    message[sp] = plus + minus;
                    cond_plus[v][sp] = plus / (plus + minus);
                }
                let mz = message[0] + message[1];
                belief[p][0] = belief[p][0] * message[0] / mz;
                belief[p][1] = belief[p][1] * message[1] / mz;
            }
        }
        let root_plus = belief[0][1] / (belief[0][0] + belief[0][1]);
        Self {
            order,
            parent,
            root_plus,
            cond_plus,
        }
    }

    /// `P(x_v = +1)` for every node.
    pub fn marginals_plus(&self) -> Vec<T> {
        let mut plus = vec![T::zero(); self.order.len()];
        for &v in &self.order {
            plus[v] = match self.parent[v] {
                None => self.root_plus,
                Some(p) => {
                    plus[p] * self.cond_plus[v][1] + (T::one() - plus[p]) * self.cond_plus[v][0]
                }
            };
        }
        plus
    }

    pub fn means(&self) -> Vec<T> {
        let two = T::lit(2.0);
        self.marginals_plus()
            .into_iter()
            .map(|p| two * p - T::one())
            .collect()
    }

    /// `E[x_p x_c]` for a parent/child pair.
    fn edge_second_moment(&self, p: usize, c: usize, means: &[T]) -> T {
        let one = T::one();
        let two = T::lit(2.0);
        let p_plus = (means[p] + one) / two;
        // E[x_c | x_p = s] = 2 P(x_c = + | s) - 1
        let mean_given_plus = two * self.cond_plus[c][1] - one;
        let mean_given_minus = two * self.cond_plus[c][0] - one;
        p_plus * mean_given_plus - (one - p_plus) * mean_given_minus
    }
}

/// Independent per-node flip probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<T: Scalar = f64> {
    q: Vec<T>,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(q: Vec<T>) -> Result<Self> {
        let half = T::lit(0.5);
        if let Some((i, v)) = q
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v >= T::zero() && v < half))
        {
            return Err(Error::InvalidParameter(format!(
                "flip probability q[{i}] = {v} not in [0, 0.5)"
            )));
        }
        Ok(Self { q })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            q: vec![T::zero(); n],
        }
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn max(&self) -> T {
        self.q.iter().copied().fold(T::zero(), T::max)
    }
}

/// Bounds on means, edge correlations and noise assumed by the learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionParams<T: Scalar = f64> {
    pub mu_max: T,
    pub rho_min: T,
    pub rho_max: T,
    pub q_max: T,
}

impl<T: Scalar> AssumptionParams<T> {
    pub fn new(mu_max: T, rho_min: T, rho_max: T, q_max: T) -> Result<Self> {
        let (zero, one, half) = (T::zero(), T::one(), T::lit(0.5));
        if !(mu_max >= zero && mu_max < one) {
            return Err(Error::InvalidParameter(format!(
                "mu_max = {mu_max} not in [0, 1)"
            )));
        }
        if !(rho_min > zero && rho_min <= rho_max && rho_max < one) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < rho_min <= rho_max < 1, got rho_min = {rho_min}, rho_max = {rho_max}"
            )));
        }
        if !(q_max >= zero && q_max < half) {
            return Err(Error::InvalidParameter(format!(
                "q_max = {q_max} not in [0, 0.5)"
            )));
        }
        Ok(Self {
            mu_max,
            rho_min,
            rho_max,
            q_max,
        })
    }

    /// Tightest bounds satisfied by a concrete model and noise vector.
    pub fn fitted(model: &IsingModel<T>, noise: &NoiseSpec<T>) -> Result<Self> {
        let mu_max = model
            .exact_means()
            .into_iter()
            .map(T::abs)
            .fold(T::zero(), T::max);
        let rhos: Vec<T> = model
            .exact_edge_correlations()
            .into_iter()
            .map(T::abs)
            .collect();
        let rho_min = rhos.iter().copied().fold(T::one(), T::min);
        let rho_max = rhos.iter().copied().fold(T::zero(), T::max);
        Self::new(mu_max, rho_min, rho_max, noise.max())
    }
}

/// A single assumption or structure check that failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Edge list does not form a tree.
    Structural(String),
    ZeroWeight {
        edge: (usize, usize),
    },
    CorrelationBelowMin {
        edge: (usize, usize),
        rho: f64,
    },
    CorrelationAboveMax {
        edge: (usize, usize),
        rho: f64,
    },
    MeanAboveMax {
        node: usize,
        mean: f64,
    },
    NoiseAboveMax {
        node: usize,
        q: f64,
    },
    /// Warning: the model is too large to enumerate, so moment bounds were not checked.
    OracleSkipped {
        n: usize,
    },
}

/// Checks a model against the mean and edge-correlation bounds using exact enumeration.
pub fn validate_model<T: Scalar>(
    model: &IsingModel<T>,
    params: &AssumptionParams<T>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (k, &w) in model.weights().iter().enumerate() {
        if w == T::zero() {
            out.push(Violation::ZeroWeight {
                edge: model.tree().edges()[k],
            });
        }
    }
    if model.n() > ORACLE_MAX_NODES {
        out.push(Violation::OracleSkipped { n: model.n() });
        return out;
    }
    let moments = oracle::exact_moments(&oracle::exact_joint(model).expect("n within oracle cap"));
    for (node, &mean) in moments.mean.iter().enumerate() {
        if mean.abs() > params.mu_max {
            out.push(Violation::MeanAboveMax {
                node,
                mean: mean.as_f64(),
            });
        }
    }
    for &(u, v) in model.tree().edges() {
        let rho = moments.corr[[u, v]];
        let r = if rho.is_finite() {
            rho.abs()
        } else {
            T::zero()
        };
        if r < params.rho_min {
            out.push(Violation::CorrelationBelowMin {
                edge: (u, v),
                rho: rho.as_f64(),
            });
        } else if r > params.rho_max {
            out.push(Violation::CorrelationAboveMax {
                edge: (u, v),
                rho: rho.as_f64(),
            });
        }
    }
    out
}

/// Like [`validate_model`], but starting from raw parts so structural defects surface as a violation.
pub fn validate_parts<T: Scalar>(
    n: usize,
    edges: &[(usize, usize, T)],
    biases: Vec<T>,
    params: &AssumptionParams<T>,
) -> Vec<Violation> {
    match IsingModel::from_weighted_edges(n, edges, biases) {
        Ok(model) => validate_model(&model, params),
        Err(e) => vec![Violation::Structural(e.to_string())],
    }
}

pub fn validate_noise<T: Scalar>(
    noise: &NoiseSpec<T>,
    params: &AssumptionParams<T>,
) -> Vec<Violation> {
    noise
        .q()
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > params.q_max)
        .map(|(node, &q)| Violation::NoiseAboveMax {
            node,
            q: q.as_f64(),
        })
        .collect()
}
