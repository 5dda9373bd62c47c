//! Chow-Liu: maximum-weight spanning tree of pairwise mutual information.

use crate::error::{Error, Result};
use crate::sampler::SampleBatch;
use crate::tree::{DisjointSets, TreeGraph};

/// Plug-in mutual information (nats) from joint counts `[[n--, n-+], [n+-, n++]]`.
fn mi_from_counts(counts: [[i64; 2]; 2], m: i64) -> f64 {
    let mf = m as f64;
    let row = [counts[0][0] + counts[0][1], counts[1][0] + counts[1][1]];
    let col = [counts[0][0] + counts[1][0], counts[0][1] + counts[1][1]];
    let term = |a: usize, b: usize| {
        let c = counts[a][b];
        if c == 0 {
            0.0
        } else {
            let cf = c as f64;
            cf / mf * (cf * mf / (row[a] as f64 * col[b] as f64)).ln()
        }
    };
    // grouped so that swapping the two variables gives bit-identical sums
    (term(1, 1) + term(0, 0)) + (term(1, 0) + term(0, 1))
}

fn counts(m: i64, s_i: i64, s_j: i64, g: i64) -> [[i64; 2]; 2] {
    [
        [(m - s_i - s_j + g) / 4, (m - s_i + s_j - g) / 4],
        [(m + s_i - s_j - g) / 4, (m + s_i + s_j + g) / 4],
    ]
}

/// Empirical mutual information between columns `i` and `j`, in nats.
pub fn mutual_information(batch: &SampleBatch, i: usize, j: usize) -> Result<f64> {
    if i >= batch.n() || j >= batch.n() {
        return Err(Error::InvalidParameter(format!(
            "node index out of range for n = {}",
            batch.n()
        )));
    }
    let (mut si, mut sj, mut g) = (0i64, 0i64, 0i64);
    for row in batch.values().rows() {
        let (a, b) = (row[i] as i64, row[j] as i64);
        si += a;
        sj += b;
        g += a * b;
    }
    let m = batch.m() as i64;
    Ok(mi_from_counts(counts(m, si, sj, g), m))
}

/// All pairwise mutual informations from one pass over the batch.
pub fn mutual_information_matrix(batch: &SampleBatch) -> Vec<Vec<f64>> {
    let n = batch.n();
    let m = batch.m() as i64;
    let (sums, gram) = batch.sufficient_stats();
    let mut mi = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = mi_from_counts(counts(m, sums[i], sums[j], gram[[i, j]]), m);
            mi[i][j] = v;
            mi[j][i] = v;
        }
    }
    mi
}

/// Maximum-weight spanning tree by Kruskal; equal weights go to the lexicographically smaller edge.
pub fn max_spanning_tree(n: usize, weight: impl Fn(usize, usize) -> f64) -> Result<TreeGraph> {
    let mut edges: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (weight(i, j), i, j))
        .collect();
    // stable sort keeps lexicographic order among ties
    edges.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut sets = DisjointSets::new(n);
    let mut chosen = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in edges {
        if sets.union(i, j) {
            chosen.push((i, j));
        }
    }
    TreeGraph::new(n, chosen)
}

/// Chow-Liu tree of a sample batch.
pub fn chow_liu(batch: &SampleBatch) -> Result<TreeGraph> {
    if batch.n() < 2 {
        return Err(Error::InvalidParameter(
            "Chow-Liu needs at least 2 nodes".into(),
        ));
    }
    let mi = mutual_information_matrix(batch);
    max_spanning_tree(batch.n(), |i, j| mi[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn extreme_pairs() {
        let same = SampleBatch::new(array![[1, 1], [-1, -1]], false).unwrap();
        assert!((mutual_information(&same, 0, 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        let indep = SampleBatch::new(array![[1, 1], [1, -1], [-1, 1], [-1, -1]], false).unwrap();
        assert_eq!(mutual_information(&indep, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn matrix_agrees_with_pairwise() {
        let b = SampleBatch::new(
            array![[1, 1, -1], [1, -1, -1], [-1, -1, 1], [1, 1, 1], [-1, 1, 1]],
            false,
        )
        .unwrap();
        let mi = mutual_information_matrix(&b);
        for (i, row) in mi.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(value, mutual_information(&b, i, j).unwrap());
                    assert_eq!(
                        mutual_information(&b, i, j).unwrap(),
                        mutual_information(&b, j, i).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn ties_break_lexicographically() {
        let t = max_spanning_tree(4, |_, _| 1.0).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (0, 2), (0, 3)]);
        let two = SampleBatch::new(array![[1, 1], [-1, 1]], false).unwrap();
        assert_eq!(chow_liu(&two).unwrap().edges(), &[(0, 1)]);
    }
}
