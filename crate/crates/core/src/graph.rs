//! Graph and matrix substrate: adjacency matrices, degree/Laplacian
//! construction, stochastic-block-model sampling, and spectral embedding.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::seed;

/// Symmetric binary judgment matrix over `n` nodes, zero diagonal.
///
/// Entries live in `{0, 1}`; symmetry and the empty diagonal are enforced at
/// construction, so a value of this type is always a simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    // row-major n*n, values 0/1
    data: Vec<u8>,
}

impl AdjacencyMatrix {
    /// Builds a matrix by evaluating `edge` once per unordered pair `{i, j}`, i < j.
    pub fn from_edge_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "adjacency matrix needs at least 2 nodes, got {n}"
            )));
        }
        let mut data = vec![0u8; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if edge(i, j) {
                    data[i * n + j] = 1;
                    data[j * n + i] = 1;
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Validates and wraps a dense 0/1 matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || n < 2 {
            return Err(Error::InvalidInput(format!(
                "expected square matrix with n >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {j}) = {v} is not 0/1"
                    )));
                }
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidInput(format!("asymmetry at ({i}, {j})")));
                }
            }
        }
        Self::from_edge_fn(n, |i, j| m[(i, j)] == 1.0)
    }

    /// Node count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether nodes `i` and `j` are connected. The diagonal is always false.
    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j] == 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.data.iter().map(|&b| b as usize).sum::<usize>() / 2
    }

    /// Dense real copy, useful as eigensolver input.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.data[i * self.n + j] as f64)
    }
}

/// Stochastic-block-model parameters: `K` blocks, within-block edge
/// probability `p`, between-block probability `q`, and block sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub sizes: Vec<usize>,
}

impl SbmParams {
    pub fn new(p: f64, q: f64, sizes: Vec<usize>) -> Result<Self> {
        let params = Self {
            k: sizes.len(),
            p,
            q,
            sizes,
        };
        params.validate()?;
        Ok(params)
    }

    /// Balanced blocks: `k` blocks of `size` nodes each.
    pub fn balanced(k: usize, size: usize, p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, vec![size; k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidInput("need at least one block".into()));
        }
        if self.sizes.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "expected {} sizes, got {}",
                self.k,
                self.sizes.len()
            )));
        }
        if self.sizes.contains(&0) {
            return Err(Error::InvalidInput("every block size must be >= 1".into()));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::InvalidInput(format!("{name} = {v} not in [0, 1]")));
            }
        }
        Ok(())
    }

    /// Total node count.
    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Separation `p - q`. May be non-positive; bound evaluators require > 0.
    pub fn separation(&self) -> f64 {
        self.p - self.q
    }

    /// Ground-truth assignment with nodes ordered by block.
    pub fn truth(&self) -> ClusterAssignment {
        let mut labels = Vec::with_capacity(self.n());
        for (block, &size) in self.sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(block, size));
        }
        ClusterAssignment::new(labels, self.k).expect("block labels are valid by construction")
    }
}

/// Samples an SBM: each unordered pair `{i, j}` is an independent Bernoulli
/// draw, `p` within a block and `q` across blocks.
///
/// Nodes are ordered by block (the first `sizes[0]` nodes form block 0, and
/// so on) and the returned assignment is the ground truth. Draws are keyed by
/// `(seed, pair)`, so identical `(params, seed)` yield identical output.
pub fn sample_sbm(params: &SbmParams, seed: u64) -> Result<(AdjacencyMatrix, ClusterAssignment)> {
    params.validate()?;
    let truth = params.truth();
    let adjacency = sample_conditional(&truth, params.p, params.q, seed)?;
    Ok((adjacency, truth))
}

/// Samples the noisy judgment matrix conditioned on an arbitrary assignment:
/// Bernoulli(`p`) within clusters, Bernoulli(`q`) across.
///
/// Unlike [`sample_sbm`] the labels need not be block-ordered; this is the
/// generative setting where cluster memberships are drawn i.i.d. first.
pub fn sample_conditional(
    truth: &ClusterAssignment,
    p: f64,
    q: f64,
    seed: u64,
) -> Result<AdjacencyMatrix> {
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(Error::InvalidInput(format!("{name} = {v} not in [0, 1]")));
        }
    }
    let n = truth.n();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 nodes in total".into()));
    }
    let labels = truth.labels();
    AdjacencyMatrix::from_edge_fn(n, |i, j| {
        let prob = if labels[i] == labels[j] { p } else { q };
        seed::pair_bernoulli(seed, i, j, prob)
    })
}

/// Per-node degree: `result[i]` is the sum of row `i`.
pub fn degrees(e: &AdjacencyMatrix) -> Vec<usize> {
    let n = e.n();
    (0..n)
        .map(|i| (0..n).filter(|&j| e.has_edge(i, j)).count())
        .collect()
}

/// Unnormalized Laplacian `L = D - E`.
///
/// Assembled from integer degrees so every row sums to exactly zero.
pub fn laplacian(e: &AdjacencyMatrix) -> DMatrix<f64> {
    let n = e.n();
    let deg = degrees(e);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            deg[i] as f64
        } else if e.has_edge(i, j) {
            -1.0
        } else {
            0.0
        }
    })
}

/// Symmetric normalized Laplacian `I - D^{-1/2} E D^{-1/2}`.
///
/// Isolated nodes keep a unit diagonal entry (their degree term vanishes).
pub fn normalized_laplacian(e: &AdjacencyMatrix) -> DMatrix<f64> {
    let n = e.n();
    let deg = degrees(e);
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let off = if e.has_edge(i, j) {
            -inv_sqrt[i] * inv_sqrt[j]
        } else {
            0.0
        };
        if i == j {
            1.0 + off
        } else {
            off
        }
    })
}

/// Which matrix and which end of its spectrum the embedding uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumVariant {
    /// Eigenvectors of `L = D - E` for the K algebraically smallest
    /// eigenvalues, reported ascending. The default.
    #[default]
    UnnormalizedSmallest,
    /// Eigenvectors of `I - D^{-1/2} E D^{-1/2}` for the K smallest
    /// eigenvalues, reported ascending.
    NormalizedLaplacian,
    /// Eigenvectors of `E` itself for the K largest-magnitude eigenvalues,
    /// reported in decreasing magnitude.
    AdjacencyLeading,
}

impl std::fmt::Display for SpectrumVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SpectrumVariant::UnnormalizedSmallest => "unnormalized-laplacian-smallest",
            SpectrumVariant::NormalizedLaplacian => "normalized-laplacian",
            SpectrumVariant::AdjacencyLeading => "adjacency-leading",
        };
        f.write_str(s)
    }
}

/// `n x K` spectral embedding: selected eigenvectors as columns plus their
/// eigenvalues in selection order.
#[derive(Debug, Clone)]
pub struct Embedding {
    values: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// The embedding matrix (rows are per-node coordinates).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Eigenvalues associated with the columns, in selection order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Eigensolver tolerance for the dense symmetric decomposition.
const EIGEN_EPS: f64 = 1e-10;

/// Dense symmetric eigendecomposition with explicit non-convergence failure.
///
/// Returns `(eigenvalues, eigenvectors)` in solver order; callers select and
/// sort. Exposed within the crate so cross-validation can embed imputed
/// (non-binary) symmetric matrices through the same path.
pub(crate) fn symmetric_eigen(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    // generous iteration cap; the QL sweep typically needs a handful per row
    let max_iter = 200 * n.max(8);
    let decomp = m.try_symmetric_eigen(EIGEN_EPS, max_iter).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolver did not converge within {max_iter} iterations (n = {n})"
        ))
    })?;
    let eigenvalues: Vec<f64> = decomp.eigenvalues.iter().copied().collect();
    Ok((eigenvalues, decomp.eigenvectors))
}

/// Fixes eigenvector sign indeterminacy: the largest-magnitude entry of each
/// column (lowest index on ties) is made positive.
fn fix_signs(mat: &mut DMatrix<f64>) {
    for c in 0..mat.ncols() {
        let col = mat.column(c);
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, v) in col.iter().enumerate() {
            let a = v.abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if mat[(best, c)] < 0.0 {
            for i in 0..mat.nrows() {
                mat[(i, c)] = -mat[(i, c)];
            }
        }
    }
}

/// Computes a K-column spectral embedding of `e` under the chosen variant.
pub fn spectral_embedding(
    e: &AdjacencyMatrix,
    k: usize,
    variant: SpectrumVariant,
) -> Result<Embedding> {
    embed_symmetric(
        match variant {
            SpectrumVariant::UnnormalizedSmallest => laplacian(e),
            SpectrumVariant::NormalizedLaplacian => normalized_laplacian(e),
            SpectrumVariant::AdjacencyLeading => e.to_dense(),
        },
        k,
        variant,
    )
}

/// Embedding of an arbitrary dense symmetric matrix (crate-internal; used by
/// cross-validation on imputed matrices).
pub(crate) fn embed_symmetric(
    matrix: DMatrix<f64>,
    k: usize,
    variant: SpectrumVariant,
) -> Result<Embedding> {
    let n = matrix.nrows();
    if k < 1 || k > n {
        return Err(Error::InvalidInput(format!(
            "embedding dimension K = {k} must satisfy 1 <= K <= n = {n}"
        )));
    }
    let (eigenvalues, vectors) = symmetric_eigen(matrix)?;
    let mut order: Vec<usize> = (0..n).collect();
    match variant {
        SpectrumVariant::UnnormalizedSmallest | SpectrumVariant::NormalizedLaplacian => {
            order.sort_by(|&a, &b| {
                eigenvalues[a]
                    .partial_cmp(&eigenvalues[b])
                    .expect("eigenvalues are finite")
                    .then(a.cmp(&b))
            });
        }
        SpectrumVariant::AdjacencyLeading => {
            order.sort_by(|&a, &b| {
                eigenvalues[b]
                    .abs()
                    .partial_cmp(&eigenvalues[a].abs())
                    .expect("eigenvalues are finite")
                    .then(a.cmp(&b))
            });
        }
    }
    let selected = &order[..k];
    let mut values = DMatrix::zeros(n, k);
    let mut selected_eigenvalues = Vec::with_capacity(k);
    for (c, &idx) in selected.iter().enumerate() {
        values.set_column(c, &vectors.column(idx));
        selected_eigenvalues.push(eigenvalues[idx]);
    }
    fix_signs(&mut values);
    Ok(Embedding {
        values,
        eigenvalues: selected_eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn complete(n: usize) -> AdjacencyMatrix {
        AdjacencyMatrix::from_edge_fn(n, |_, _| true).unwrap()
    }

    fn empty(n: usize) -> AdjacencyMatrix {
        AdjacencyMatrix::from_edge_fn(n, |_, _| false).unwrap()
    }

    fn two_cliques(a: usize, b: usize) -> AdjacencyMatrix {
        AdjacencyMatrix::from_edge_fn(a + b, |i, j| (i < a) == (j < a)).unwrap()
    }

    #[test]
    fn sbm_p_one_single_block_is_complete_graph() {
        let params = SbmParams::new(1.0, 0.0, vec![4]).unwrap();
        let (e, truth) = sample_sbm(&params, 0).unwrap();
        assert_eq!(e.edge_count(), 6);
        assert_eq!(truth.labels(), &[0, 0, 0, 0]);
    }

    #[test]
    fn sbm_all_zero_probabilities_is_empty_graph() {
        let params = SbmParams::new(0.0, 0.0, vec![3, 3]).unwrap();
        let (e, _) = sample_sbm(&params, 17).unwrap();
        assert_eq!(e.edge_count(), 0);
    }

    #[test]
    fn sbm_rejects_invalid_sizes() {
        assert!(SbmParams::new(0.5, 0.5, vec![]).is_err());
        assert!(SbmParams::new(0.5, 0.5, vec![3, 0]).is_err());
        assert!(SbmParams::new(1.5, 0.5, vec![3, 3]).is_err());
        assert!(SbmParams::new(0.5, -0.1, vec![3, 3]).is_err());
    }

    #[test]
    fn sbm_is_deterministic_and_symmetric() {
        let params = SbmParams::new(0.7, 0.2, vec![5, 7]).unwrap();
        let (e1, _) = sample_sbm(&params, 99).unwrap();
        let (e2, _) = sample_sbm(&params, 99).unwrap();
        assert_eq!(e1, e2);
        for i in 0..e1.n() {
            assert!(!e1.has_edge(i, i));
            for j in 0..e1.n() {
                assert_eq!(e1.has_edge(i, j), e1.has_edge(j, i));
            }
        }
        let (e3, _) = sample_sbm(&params, 100).unwrap();
        assert_ne!(e1, e3, "different seeds should differ for these params");
    }

    #[test]
    fn sbm_within_block_density_concentrates() {
        // Monte-Carlo: mean within-block edge density over 200 seeds in [0.88, 0.92]
        let params = SbmParams::new(0.9, 0.1, vec![50, 50]).unwrap();
        let mut total_edges = 0usize;
        let mut total_pairs = 0usize;
        for s in 0..200u64 {
            let (e, truth) = sample_sbm(&params, s).unwrap();
            let labels = truth.labels();
            for i in 0..e.n() {
                for j in (i + 1)..e.n() {
                    if labels[i] == labels[j] {
                        total_pairs += 1;
                        total_edges += e.has_edge(i, j) as usize;
                    }
                }
            }
        }
        let density = total_edges as f64 / total_pairs as f64;
        assert!(
            (0.88..=0.92).contains(&density),
            "within density {density} out of range"
        );
    }

    #[test]
    fn degrees_on_reference_graphs() {
        assert_eq!(degrees(&empty(4)), vec![0, 0, 0, 0]);
        assert_eq!(degrees(&complete(4)), vec![3, 3, 3, 3]);
        // path graph 0-1-2
        let path = AdjacencyMatrix::from_edge_fn(3, |i, j| j == i + 1).unwrap();
        assert_eq!(degrees(&path), vec![1, 2, 1]);
    }

    #[test]
    fn laplacian_of_reference_graphs() {
        let zero = laplacian(&empty(3));
        assert!(zero.iter().all(|&v| v == 0.0));

        let single = AdjacencyMatrix::from_edge_fn(2, |_, _| true).unwrap();
        let l = laplacian(&single);
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_psd() {
        let params = SbmParams::new(0.6, 0.3, vec![6, 6, 6]).unwrap();
        for s in 0..10u64 {
            let (e, _) = sample_sbm(&params, s).unwrap();
            let l = laplacian(&e);
            for i in 0..l.nrows() {
                let row_sum: f64 = l.row(i).iter().sum();
                assert_eq!(row_sum, 0.0, "row {i} sums to {row_sum}");
            }
            let (eigenvalues, _) = symmetric_eigen(l).unwrap();
            let min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-9, "smallest Laplacian eigenvalue {min}");
        }
    }

    #[test]
    fn two_cliques_have_two_zero_eigenvalues() {
        let e = two_cliques(3, 3);
        let emb = spectral_embedding(&e, 2, SpectrumVariant::UnnormalizedSmallest).unwrap();
        for &ev in emb.eigenvalues() {
            assert_abs_diff_eq!(ev, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn full_embedding_is_an_orthonormal_basis() {
        let params = SbmParams::new(0.5, 0.2, vec![4, 4]).unwrap();
        let (e, _) = sample_sbm(&params, 3).unwrap();
        let n = e.n();
        let emb = spectral_embedding(&e, n, SpectrumVariant::UnnormalizedSmallest).unwrap();
        let gram = emb.matrix().transpose() * emb.matrix();
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)], expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn two_clique_embedding_rows_take_two_values() {
        let e = two_cliques(3, 3);
        let emb = spectral_embedding(&e, 2, SpectrumVariant::UnnormalizedSmallest).unwrap();
        let m = emb.matrix();
        // Rows within a clique agree; across cliques they differ.
        for i in 1..3 {
            for c in 0..2 {
                assert_abs_diff_eq!(m[(i, c)], m[(0, c)], epsilon = 1e-6);
                assert_abs_diff_eq!(m[(3 + i, c)], m[(3, c)], epsilon = 1e-6);
            }
        }
        let row_gap: f64 = (0..2).map(|c| (m[(0, c)] - m[(3, c)]).abs()).sum();
        assert!(row_gap > 1e-3, "clique rows should separate, gap {row_gap}");
    }

    #[test]
    fn embedding_eigenvalues_are_sorted_per_variant() {
        let params = SbmParams::new(0.8, 0.1, vec![5, 5]).unwrap();
        let (e, _) = sample_sbm(&params, 11).unwrap();
        let asc = spectral_embedding(&e, 4, SpectrumVariant::UnnormalizedSmallest).unwrap();
        assert!(asc.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        let lead = spectral_embedding(&e, 4, SpectrumVariant::AdjacencyLeading).unwrap();
        assert!(lead
            .eigenvalues()
            .windows(2)
            .all(|w| w[0].abs() >= w[1].abs()));
    }

    #[test]
    fn normalized_variant_spectrum_and_blocks() {
        let e = two_cliques(4, 4);
        let emb = spectral_embedding(&e, 2, SpectrumVariant::NormalizedLaplacian).unwrap();
        // one zero eigenvalue per connected component
        for &ev in emb.eigenvalues() {
            assert_abs_diff_eq!(ev, 0.0, epsilon = 1e-9);
        }
        // normalized Laplacian spectrum lives in [0, 2]
        let full = spectral_embedding(&e, e.n(), SpectrumVariant::NormalizedLaplacian).unwrap();
        for &ev in full.eigenvalues() {
            assert!((-1e-9..=2.0 + 1e-9).contains(&ev), "eigenvalue {ev}");
        }
        // columns stay orthonormal
        let gram = full.matrix().transpose() * full.matrix();
        for i in 0..e.n() {
            for j in 0..e.n() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)], expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn embedding_rejects_bad_k() {
        let e = complete(4);
        assert!(spectral_embedding(&e, 0, SpectrumVariant::UnnormalizedSmallest).is_err());
        assert!(spectral_embedding(&e, 5, SpectrumVariant::UnnormalizedSmallest).is_err());
    }

    #[test]
    fn embedding_is_deterministic() {
        let params = SbmParams::new(0.9, 0.1, vec![10, 10]).unwrap();
        let (e, _) = sample_sbm(&params, 5).unwrap();
        let a = spectral_embedding(&e, 2, SpectrumVariant::UnnormalizedSmallest).unwrap();
        let b = spectral_embedding(&e, 2, SpectrumVariant::UnnormalizedSmallest).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.eigenvalues(), b.eigenvalues());
    }
}
