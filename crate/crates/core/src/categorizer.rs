//! Proximal neighbourhoods and the finite-sample star/non-star test for four nodes.
//!
//! For four nodes the three pairings `{ab|cd}`, `{ac|bd}`, `{ad|bc}` have within-pair
//! correlation products `P_ab·cd`, `P_ac·bd`, `P_ad·bc`. On a tree with pairing `ab|cd` the two
//! cross products are equal and the within-pair product dominates them by at least `1/ρ_max²`.
//! The test compares ratios of these products against `t3 = (1 + ρ_max²)/2`.

use crate::error::{Error, Result};
use crate::estimator::MomentEstimate;
use crate::model::AssumptionParams;
use crate::noise::thresholds;
use crate::scalar::Scalar;

/// Per-node sets of nodes whose noisy covariance clears `0.5·t1` (first set) or `0.5·t2` (second).
#[derive(Debug, Clone, PartialEq)]
pub struct ProximalSets<T: Scalar = f64> {
    first: Vec<Vec<usize>>,
    second: Vec<Vec<usize>>,
    first_mask: Vec<Vec<bool>>,
    second_mask: Vec<Vec<bool>>,
    pub first_cut: T,
    pub second_cut: T,
}

impl<T: Scalar> ProximalSets<T> {
    /// Thresholds `|Σ_ij| >= first_cut` and `|Σ_ij| >= second_cut`.
    pub fn with_cuts(moments: &MomentEstimate<T>, first_cut: T, second_cut: T) -> Self {
        let n = moments.n();
        let mut first_mask = vec![vec![false; n]; n];
        let mut second_mask = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let c = moments.cov(i, j).abs();
                    first_mask[i][j] = c >= first_cut;
                    second_mask[i][j] = c >= second_cut;
                }
            }
        }
        let collect = |mask: &Vec<Vec<bool>>| -> Vec<Vec<usize>> {
            mask.iter()
                .map(|row| (0..n).filter(|&j| row[j]).collect())
                .collect()
        };
        Self {
            first: collect(&first_mask),
            second: collect(&second_mask),
            first_mask,
            second_mask,
            first_cut,
            second_cut,
        }
    }

    pub fn n(&self) -> usize {
        self.first.len()
    }

    /// Members of the first (tighter) proximal set of `i`, ascending.
    pub fn first(&self, i: usize) -> &[usize] {
        &self.first[i]
    }

    pub fn second(&self, i: usize) -> &[usize] {
        &self.second[i]
    }

    #[inline]
    pub fn in_first(&self, i: usize, j: usize) -> bool {
        self.first_mask[i][j]
    }

    #[inline]
    pub fn in_second(&self, i: usize, j: usize) -> bool {
        self.second_mask[i][j]
    }
}

/// Proximal sets at half the population thresholds `t1`, `t2`.
pub fn build_proximal<T: Scalar>(
    moments: &MomentEstimate<T>,
    params: &AssumptionParams<T>,
) -> ProximalSets<T> {
    let t = thresholds(params);
    let half = T::lit(0.5);
    ProximalSets::with_cuts(moments, half * t.t1, half * t.t2)
}

/// Shape of four nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StarVerdict {
    Star,
    /// `pairs[0]` contains the first queried node; each pair is stored as given in the query order.
    NonStar {
        pairs: [(usize, usize); 2],
    },
}

impl StarVerdict {
    /// Non-star verdict for `quad` where `quad[0]` is paired with `partner`.
    pub fn non_star(quad: [usize; 4], partner: usize) -> Self {
        let rest: Vec<usize> = quad[1..]
            .iter()
            .copied()
            .filter(|&x| x != partner)
            .collect();
        StarVerdict::NonStar {
            pairs: [(quad[0], partner), (rest[0], rest[1])],
        }
    }

    pub fn is_star(&self) -> bool {
        matches!(self, StarVerdict::Star)
    }

    /// True when the verdict is non-star with `a` and `b` in the same pair.
    pub fn pairs_together(&self, a: usize, b: usize) -> bool {
        match self {
            StarVerdict::Star => false,
            StarVerdict::NonStar { pairs } => pairs
                .iter()
                .any(|&(x, y)| (x, y) == (a, b) || (x, y) == (b, a)),
        }
    }
}

/// Classifies four nodes from (noisy) correlations.
///
/// With within-pair products `P_k` of the three pairings, pairing `k` is a non-star when both
/// ratios of its two cross products exceed `t3` and both cross products over `P_k` fall below
/// `t3`. The quad is a star when every ratio `P_x / P_y` exceeds `t3`. Ties count as not
/// exceeding. Any other outcome is [`Error::AmbiguousQuad`].
pub fn classify_quad<T: Scalar>(
    moments: &MomentEstimate<T>,
    nodes: [usize; 4],
    t3: T,
) -> Result<StarVerdict> {
    let [a, b, c, d] = nodes;
    let pairs = [(a, b), (a, c), (a, d), (b, c), (b, d), (c, d)];
    if pairs.iter().any(|&(x, y)| {
        let r = moments.corr(x, y);
        r == T::zero() || !r.is_finite()
    }) {
        return Err(Error::DegenerateQuad { nodes });
    }
    let rho = |x: usize, y: usize| moments.corr(x, y);
    // within-pair products of ab|cd, ac|bd, ad|bc
    let products = [
        rho(a, b) * rho(c, d),
        rho(a, c) * rho(b, d),
        rho(a, d) * rho(b, c),
    ];
    let partners = [b, c, d];
    let mut found = None;
    for k in 0..3 {
        let (x, y) = (products[(k + 1) % 3], products[(k + 2) % 3]);
        let within = products[k];
        let cross_balanced = x / y > t3 && y / x > t3;
        let within_dominates = x / within < t3 && y / within < t3;
        if cross_balanced && within_dominates {
            if found.is_some() {
                return Err(Error::AmbiguousQuad { nodes });
            }
            found = Some(partners[k]);
        }
    }
    if let Some(partner) = found {
        return Ok(StarVerdict::non_star(nodes, partner));
    }
    let all_close = (0..3).all(|x| (0..3).all(|y| x == y || products[x] / products[y] > t3));
    if all_close {
        Ok(StarVerdict::Star)
    } else {
        Err(Error::AmbiguousQuad { nodes })
    }
}
