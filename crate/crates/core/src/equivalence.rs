//! The class of trees that noisy samples cannot tell apart: every tree obtained by choosing,
//! inside each leaf cluster, which member plays the internal node.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tree::TreeGraph;

/// Default limit on the number of members [`enumerate_members`] will build.
pub const DEFAULT_MEMBER_CAP: usize = 10_000;

/// Clusters of a tree and the skeleton joining them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    n: usize,
    /// Sorted node sets, ordered by smallest member. Leaf clusters hold an internal node and
    /// its leaves; other internal nodes are singletons.
    clusters: Vec<Vec<usize>>,
    /// Edges between cluster indices, each `(a, b)` with `a < b`, sorted.
    skeleton: Vec<(usize, usize)>,
}

impl EquivalenceClass {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn skeleton(&self) -> &[(usize, usize)] {
        &self.skeleton
    }

    /// Product of the sizes of the clusters with more than one member; saturates at `u128::MAX`.
    pub fn size(&self) -> u128 {
        self.clusters
            .iter()
            .filter(|c| c.len() > 1)
            .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
    }

    /// Index of the cluster containing `v`.
    pub fn cluster_of(&self, v: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&v))
    }

    /// Class-invariant key.
    pub fn key(&self) -> CanonicalKey {
        let skeleton = self
            .skeleton
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (self.clusters[a][0], self.clusters[b][0]);
                (x.min(y), x.max(y))
            })
            .collect::<Vec<_>>();
        let mut skeleton = skeleton;
        skeleton.sort_unstable();
        CanonicalKey {
            clusters: self.clusters.clone(),
            skeleton,
        }
    }
}

/// Builds the equivalence class of `tree`.
pub fn build_class(tree: &TreeGraph) -> Result<EquivalenceClass> {
    let n = tree.n();
    if n < 2 {
        return Err(Error::InvalidTree(format!(
            "equivalence classes need n >= 2, got {n}"
        )));
    }
    if n == 2 {
        return Ok(EquivalenceClass {
            n,
            clusters: vec![vec![0, 1]],
            skeleton: Vec::new(),
        });
    }
    let mut owner = vec![usize::MAX; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for v in (0..n).filter(|&v| !tree.is_leaf(v)) {
        let mut c = vec![v];
        c.extend(
            tree.neighbors(v)
                .iter()
                .copied()
                .filter(|&u| tree.is_leaf(u)),
        );
        c.sort_unstable();
        clusters.push(c);
    }
    clusters.sort_unstable_by_key(|c| c[0]);
    for (k, c) in clusters.iter().enumerate() {
        for &v in c {
            owner[v] = k;
        }
    }
    let mut skeleton: Vec<(usize, usize)> = tree
        .edges()
        .iter()
        .filter(|&&(u, v)| !tree.is_leaf(u) && !tree.is_leaf(v))
        .map(|&(u, v)| (owner[u].min(owner[v]), owner[u].max(owner[v])))
        .collect();
    skeleton.sort_unstable();
    Ok(EquivalenceClass {
        n,
        clusters,
        skeleton,
    })
}

/// Whether `candidate` lies in the equivalence class of `class_of`.
pub fn is_member(candidate: &TreeGraph, class_of: &TreeGraph) -> Result<bool> {
    if candidate.n() != class_of.n() {
        return Err(Error::DimensionMismatch {
            expected: class_of.n(),
            found: candidate.n(),
        });
    }
    Ok(canonical_form(candidate)? == canonical_form(class_of)?)
}

/// Sorted clusters plus skeleton edges between cluster minima. Equal exactly for trees in the same class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub clusters: Vec<Vec<usize>>,
    pub skeleton: Vec<(usize, usize)>,
}

pub fn canonical_form(tree: &TreeGraph) -> Result<CanonicalKey> {
    Ok(build_class(tree)?.key())
}

/// Text form: `clusters=0,1;2;3,4 skeleton=0-2,2-3`.
impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let clusters: Vec<String> = self
            .clusters
            .iter()
            .map(|c| c.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            .collect();
        let skeleton: Vec<String> = self
            .skeleton
            .iter()
            .map(|(a, b)| format!("{a}-{b}"))
            .collect();
        write!(
            f,
            "clusters={} skeleton={}",
            clusters.join(";"),
            skeleton.join(",")
        )
    }
}

impl FromStr for CanonicalKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            line: 1,
            msg: msg.to_string(),
        };
        let (c, k) = s
            .trim()
            .split_once(' ')
            .ok_or_else(|| bad("expected two fields"))?;
        let c = c
            .strip_prefix("clusters=")
            .ok_or_else(|| bad("missing clusters="))?;
        let k = k
            .trim()
            .strip_prefix("skeleton=")
            .ok_or_else(|| bad("missing skeleton="))?;
        let num = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| bad(&format!("bad node index {t:?}")))
        };
        let clusters = c
            .split(';')
            .map(|group| group.split(',').map(num).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let skeleton = if k.is_empty() {
            Vec::new()
        } else {
            k.split(',')
                .map(|e| {
                    let (a, b) = e
                        .split_once('-')
                        .ok_or_else(|| bad("skeleton edge needs a-b"))?;
                    Ok((num(a)?, num(b)?))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(CanonicalKey { clusters, skeleton })
    }
}

/// The `(leaf, parent)` exchanges of `tree` that produce `member`, one per cluster whose internal
/// node differs.
pub fn swaps_to_member(tree: &TreeGraph, member: &TreeGraph) -> Result<Vec<(usize, usize)>> {
    if !is_member(member, tree)? {
        return Err(Error::InvalidParameter(
            "tree is not in the equivalence class".into(),
        ));
    }
    if tree.n() == 2 {
        return Ok(Vec::new());
    }
    let class = build_class(tree)?;
    let mut swaps = Vec::new();
    for cluster in class.clusters.iter().filter(|c| c.len() > 1) {
        let centre = |t: &TreeGraph| cluster.iter().copied().find(|&v| !t.is_leaf(v));
        let (Some(old), Some(new)) = (centre(tree), centre(member)) else {
            return Err(Error::InvalidTree(
                "cluster without an internal node".into(),
            ));
        };
        if old != new {
            swaps.push((new, old));
        }
    }
    Ok(swaps)
}

/// Every tree in the class, distinct as labeled trees. Fails when the class is larger than `cap`.
///
/// The two-node class counts both choices of internal node, which give the same labeled tree,
/// so its single tree is returned once.
pub fn enumerate_members(class: &EquivalenceClass, cap: usize) -> Result<Vec<TreeGraph>> {
    let size = class.size();
    if size > cap as u128 {
        return Err(Error::CapExceeded { size, cap });
    }
    let clusters = &class.clusters;
    let mut choice = vec![0usize; clusters.len()];
    let mut out: Vec<TreeGraph> = Vec::with_capacity(size as usize);
    loop {
        let rep: Vec<usize> = clusters.iter().zip(&choice).map(|(c, &k)| c[k]).collect();
        let mut edges = Vec::with_capacity(class.n.saturating_sub(1));
        for (c, &r) in clusters.iter().zip(&rep) {
            edges.extend(c.iter().filter(|&&v| v != r).map(|&v| (r, v)));
        }
        edges.extend(class.skeleton.iter().map(|&(a, b)| (rep[a], rep[b])));
        let tree = TreeGraph::new(class.n, edges)?;
        if !out.contains(&tree) {
            out.push(tree);
        }
        // mixed-radix increment
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok(out);
            }
            choice[pos] += 1;
            if choice[pos] < clusters[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}
