//! Undirected labeled trees on dense node indices `0..n`.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `false` when `a` and `b` were already connected.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub(crate) fn components(&self) -> usize {
        self.components
    }
}

/// An undirected spanning tree over nodes `0..n`.
///
/// Edges are stored normalized as `(min, max)` and sorted lexicographically, so two
/// trees with the same edge set compare equal regardless of construction order.
/// A single isolated node (`n = 1`) is accepted for degenerate enumeration cases.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl TreeGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTree(
                "tree must have at least one node".into(),
            ));
        }
        let mut normalized = Vec::with_capacity(n - 1);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidTree(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidTree(format!("self-loop at node {u}")));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidTree(format!("duplicate edge {:?}", w[0])));
        }
        if normalized.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "a tree on {n} nodes has {} edges, got {}",
                n - 1,
                normalized.len()
            )));
        }
        let mut sets = DisjointSets::new(n);
        for &(u, v) in &normalized {
            if !sets.union(u, v) {
                return Err(Error::InvalidTree(format!(
                    "edge ({u}, {v}) closes a cycle"
                )));
            }
        }
        if sets.components() != 1 {
            return Err(Error::InvalidTree("edge set is disconnected".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &normalized {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges: normalized,
            adjacency,
        })
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Star with the given center connected to every other node.
    pub fn star(n: usize, center: usize) -> Result<Self> {
        if center >= n {
            return Err(Error::InvalidTree(format!("center {center} out of range")));
        }
        Self::new(n, (0..n).filter(|&i| i != center).map(|i| (center, i)))
    }

    /// Uniformly random labeled tree (Prüfer decoding).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n <= 2 {
            return Self::new(n, (1..n).map(|i| (0, i)));
        }
        let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
        Self::from_prufer(n, &code)
    }

    pub fn from_prufer(n: usize, code: &[usize]) -> Result<Self> {
        if n < 2 || code.len() != n - 2 {
            return Err(Error::InvalidTree(format!(
                "Prüfer code of length {} for n = {n}",
                code.len()
            )));
        }
        let mut degree = vec![1usize; n];
        for &c in code {
            if c >= n {
                return Err(Error::InvalidTree(format!("Prüfer entry {c} out of range")));
            }
            degree[c] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &c in code {
            let leaf = (0..n)
                .find(|&v| degree[v] == 1)
                .expect("a leaf always exists");
            edges.push((leaf, c));
            degree[leaf] = 0;
            degree[c] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
        edges.push((rest[0], rest[1]));
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(min, max)` pairs in ascending lexicographic order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.degree(v) == 1
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n).filter(|&v| self.is_leaf(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Breadth-first order from `root` together with each node's parent (`None` for the root).
    pub fn bfs(&self, root: usize) -> (Vec<usize>, Vec<Option<usize>>) {
        let mut order = Vec::with_capacity(self.n);
        let mut parent = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    queue.push_back(w);
                }
            }
        }
        (order, parent)
    }

    /// Hop distance from `source` to every node.
    pub fn distances_from(&self, source: usize) -> Vec<usize> {
        let (order, parent) = self.bfs(source);
        let mut dist = vec![0; self.n];
        for v in order {
            if let Some(p) = parent[v] {
                dist[v] = dist[p] + 1;
            }
        }
        dist
    }

    /// Node sequence of the unique path `from -> to`, endpoints included.
    pub fn path(&self, from: usize, to: usize) -> Vec<usize> {
        let (_, parent) = self.bfs(to);
        let mut path = vec![from];
        let mut cur = from;
        while let Some(p) = parent[cur] {
            path.push(p);
            cur = p;
        }
        path
    }

    /// The same shape with node `v` renamed to `perm[v]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidTree(format!(
                "permutation of length {} for n = {}",
                perm.len(),
                self.n
            )));
        }
        Self::new(self.n, self.edges.iter().map(|&(u, v)| (perm[u], perm[v])))
    }

    /// Nodes on the side of `u` after removing edge `(u, v)`.
    pub fn side_of(&self, u: usize, v: usize) -> Vec<bool> {
        let mut side = vec![false; self.n];
        let mut stack = vec![u];
        side[u] = true;
        while let Some(x) = stack.pop() {
            for &y in &self.adjacency[x] {
                if !side[y] && !(x == u && y == v) {
                    side[y] = true;
                    stack.push(y);
                }
            }
        }
        side
    }
}
