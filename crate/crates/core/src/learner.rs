//! Recovery of one member of the equivalence class from noisy moments.
//!
//! [`find_tree`] looks for the lowest-index node whose equivalence cluster has more than one
//! member, then grows the tree outwards cluster by cluster. Every step decides membership from
//! star/non-star verdicts on four nodes, so only ratios of noisy correlations are used and the
//! unknown flip probabilities cancel.

use std::collections::BTreeSet;

use crate::categorizer::{build_proximal, classify_quad, ProximalSets};
use crate::error::{Error, Result};
use crate::estimator::MomentEstimate;
use crate::model::AssumptionParams;
use crate::noise::thresholds;
use crate::scalar::Scalar;
use crate::tree::{DisjointSets, TreeGraph};

/// Edges accumulated by a learning run.
#[derive(Debug, Clone)]
pub struct LearnedEdges {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// Clusters in discovery order; each starts with the node it was grown from.
    pub clusters: Vec<Vec<usize>>,
    components: DisjointSets,
}

impl LearnedEdges {
    /// Empty accumulator over `n` nodes.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            clusters: Vec::new(),
            components: DisjointSets::new(n),
        }
    }

    fn push(&mut self, u: usize, v: usize) -> Result<()> {
        if u == v || !self.components.union(u, v) {
            return Err(Error::LearnerFailure(format!(
                "edge ({u}, {v}) would close a cycle"
            )));
        }
        self.edges.push((u.min(v), u.max(v)));
        Ok(())
    }

    /// Edges in the order they were learned.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edges sorted lexicographically.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The learned tree; fails unless exactly `n - 1` edges were found.
    pub fn tree(&self) -> Result<TreeGraph> {
        TreeGraph::new(self.n, self.edges.iter().copied())
    }
}

impl PartialEq for LearnedEdges {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges && self.clusters == other.clusters
    }
}

impl Eq for LearnedEdges {}

/// Read-only inputs shared by the subroutines.
#[derive(Debug, Clone)]
pub struct LearnerContext<'a, T: Scalar = f64> {
    pub moments: &'a MomentEstimate<T>,
    pub proximal: ProximalSets<T>,
    pub t3: T,
}

impl<'a, T: Scalar> LearnerContext<'a, T> {
    pub fn new(moments: &'a MomentEstimate<T>, params: &AssumptionParams<T>) -> Self {
        Self {
            moments,
            proximal: build_proximal(moments, params),
            t3: thresholds(params).t3,
        }
    }

    fn rho(&self, a: usize, b: usize) -> T {
        self.moments.corr(a, b)
    }
}

/// Equivalence cluster of `i` within `subset ∪ {i}`, returned as `[i, hub, rest…]` (just `[i]`
/// when `i` has no cluster mates). The cluster's edges all point at the hub, which is its first
/// accepted member, and `i` is joined to the hub.
pub fn find_ec<T: Scalar>(
    i: usize,
    subset: &[usize],
    ctx: &LearnerContext<'_, T>,
    acc: &mut LearnedEdges,
) -> Result<Vec<usize>> {
    match *subset {
        [] => return Ok(vec![i]),
        [s0] => {
            acc.push(i, s0)?;
            return Ok(vec![i, s0]);
        }
        [s0, s1] => {
            acc.push(i, s0)?;
            acc.push(s1, s0)?;
            return Ok(vec![i, s0, s1]);
        }
        _ => {}
    }
    let p = &ctx.proximal;
    let members: BTreeSet<usize> = subset.iter().copied().collect();
    let candidates: Vec<usize> = p
        .first(i)
        .iter()
        .copied()
        .filter(|j| members.contains(j))
        .collect();
    let mut ec = Vec::new();
    for &j in &candidates {
        // strongest correlate of i, so that witnesses beyond j stay inside its second proximal set
        let nearest =
            candidates
                .iter()
                .copied()
                .filter(|&k| k != j)
                .fold(None, |best: Option<usize>, k| match best {
                    Some(b) if ctx.rho(i, b).abs() >= ctx.rho(i, k).abs() => Some(b),
                    _ => Some(k),
                });
        let Some(k1) = nearest else {
            ec.push(j);
            continue;
        };
        let in_ec = p
            .second(i)
            .iter()
            .copied()
            .filter(|&k2| {
                k2 != j
                    && k2 != k1
                    && members.contains(&k2)
                    && p.in_second(j, k2)
                    && p.in_second(k1, k2)
            })
            .all(|k2| {
                let r = ctx.rho(i, k1) * ctx.rho(j, k2) / (ctx.rho(i, k2) * ctx.rho(j, k1));
                // NaN compares false, so a degenerate ratio rejects
                r.min(r.recip()) >= ctx.t3
            });
        if in_ec {
            ec.push(j);
        }
    }
    let Some(&hub) = ec.first() else {
        return Ok(vec![i]);
    };
    acc.push(i, hub)?;
    for &other in &ec[1..] {
        acc.push(other, hub)?;
    }
    let mut out = Vec::with_capacity(ec.len() + 1);
    out.push(i);
    out.extend(ec);
    Ok(out)
}

/// Groups the unassigned nodes close to both `i` and `leaf` into the subtrees hanging off `i`.
/// Two nodes share a subtree when `{i, leaf, p, q}` is a non-star pairing `i` with `leaf`.
/// A node that pairs with a member of `x_last` belongs to an already explored region and is dropped.
/// Quads the star/non-star table cannot place are skipped.
pub fn split_tree<T: Scalar>(
    i: usize,
    leaf: usize,
    x_last: &BTreeSet<usize>,
    ctx: &LearnerContext<'_, T>,
) -> Result<Vec<Vec<usize>>> {
    let p = &ctx.proximal;
    let base: Vec<usize> = p
        .first(i)
        .iter()
        .copied()
        .filter(|&v| v != leaf && p.in_first(leaf, v))
        .collect();
    let close: Vec<usize> = base
        .iter()
        .copied()
        .filter(|v| !x_last.contains(v))
        .collect();
    let index = |v: usize| close.binary_search(&v).ok();
    let mut groups = DisjointSets::new(close.len());
    let mut linked = vec![false; close.len()];
    for (a, &node) in close.iter().enumerate() {
        let mut row = Vec::new();
        let mut excluded = false;
        for &q in base.iter().filter(|&&q| q != node && p.in_second(node, q)) {
            // a quad the table cannot place carries no evidence either way
            let verdict = match classify_quad(ctx.moments, [i, leaf, node, q], ctx.t3) {
                Ok(v) => v,
                Err(Error::AmbiguousQuad { .. } | Error::DegenerateQuad { .. }) => continue,
                Err(e) => return Err(e),
            };
            if verdict.pairs_together(i, leaf) {
                match index(q) {
                    None => {
                        excluded = true;
                        break;
                    }
                    Some(b) => row.push(b),
                }
            }
        }
        if excluded {
            continue;
        }
        for b in row {
            groups.union(a, b);
            linked[a] = true;
            linked[b] = true;
        }
    }
    let mut by_root: Vec<(usize, Vec<usize>)> = Vec::new();
    for (a, &node) in close.iter().enumerate() {
        if !linked[a] {
            continue;
        }
        let root = groups.find(a);
        match by_root.iter_mut().find(|(r, _)| *r == root) {
            Some((_, g)) => g.push(node),
            None => by_root.push((root, vec![node])),
        }
    }
    // `close` is ascending, so groups come out ordered by their smallest member
    Ok(by_root.into_iter().map(|(_, g)| g).collect())
}

/// Learns every edge of the region reached from `i` away from `leaf` and `x_last`.
pub fn recurse<T: Scalar>(
    i: usize,
    leaf: usize,
    x_last: &BTreeSet<usize>,
    ctx: &LearnerContext<'_, T>,
    acc: &mut LearnedEdges,
) -> Result<()> {
    let subtrees = split_tree(i, leaf, x_last, ctx)?;
    for (s, subtree) in subtrees.iter().enumerate() {
        let ec = find_ec(i, subtree, ctx, acc)?;
        if ec.len() < 2 {
            return Err(Error::LearnerFailure(format!(
                "no node of subtree {subtree:?} attaches to node {i}"
            )));
        }
        acc.clusters.push(ec.clone());
        let mut next_last = x_last.clone();
        for (t, other) in subtrees.iter().enumerate() {
            if t != s {
                next_last.extend(other);
            }
        }
        next_last.extend(&ec);
        recurse(ec[1], i, &next_last, ctx, acc)?;
    }
    Ok(())
}

/// Learns a tree from noisy moments using the proximal sets and `t3` implied by `params`.
pub fn find_tree<T: Scalar>(
    moments: &MomentEstimate<T>,
    params: &AssumptionParams<T>,
) -> Result<LearnedEdges> {
    find_tree_with(&LearnerContext::new(moments, params))
}

/// [`find_tree`] with a prepared context.
pub fn find_tree_with<T: Scalar>(ctx: &LearnerContext<'_, T>) -> Result<LearnedEdges> {
    let n = ctx.moments.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if ctx.moments.corr.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidParameter(
            "moments contain non-finite correlations".into(),
        ));
    }
    let mut acc = LearnedEdges::new(n);
    let mut found = None;
    for i in 0..n {
        let rest: Vec<usize> = (0..n).filter(|&v| v != i).collect();
        let ec = find_ec(i, &rest, ctx, &mut acc)?;
        if ec.len() > 1 {
            found = Some(ec);
            break;
        }
    }
    let ec = found.ok_or_else(|| {
        Error::LearnerFailure("no node has a non-trivial equivalence cluster".into())
    })?;
    acc.clusters.push(ec.clone());
    let x_last: BTreeSet<usize> = ec.iter().copied().collect();
    if x_last.len() < n {
        // the hub is the cluster's learned centre, so further clusters must attach to it
        recurse(ec[1], ec[0], &x_last, ctx, &mut acc)?;
    }
    if acc.edges.len() != n - 1 {
        return Err(Error::LearnerFailure(format!(
            "learned {} edges, expected {}",
            acc.edges.len(),
            n - 1
        )));
    }
    Ok(acc)
}
