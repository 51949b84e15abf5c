//! Approximate k-means over embedding rows, end-to-end spectral clustering,
//! label alignment, and miscluster-error measurement.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{spectral_embedding, AdjacencyMatrix, SpectrumVariant};
use crate::seed;

/// Cluster membership for `n` items over `K` clusters.
///
/// Labels are 0-based cluster indices. The implied one-hot matrix `g` has
/// `g[i][j] = 1` iff `labels[i] == j`; each row sums to exactly 1. Empty
/// clusters are permitted (and reported by [`ClusterAssignment::has_empty_clusters`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    k: usize,
    labels: Vec<usize>,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("empty assignment".into()));
        }
        if k == 0 {
            return Err(Error::InvalidInput("K must be >= 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for K = {k}"
            )));
        }
        Ok(Self { k, labels })
    }

    /// All `n` items in a single cluster.
    pub fn single_cluster(n: usize) -> Result<Self> {
        Self::new(vec![0; n], 1)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Per-cluster item counts (length `K`; zeros are possible).
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn has_empty_clusters(&self) -> bool {
        self.counts().contains(&0)
    }

    /// Smallest and largest cluster counts.
    pub fn count_range(&self) -> (usize, usize) {
        let counts = self.counts();
        let min = counts.iter().copied().min().unwrap_or(0);
        let max = counts.iter().copied().max().unwrap_or(0);
        (min, max)
    }

    /// One-hot membership matrix `g` (n x K).
    pub fn one_hot(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            g[(i, l)] = 1.0;
        }
        g
    }

    /// Applies a label permutation: label `a` becomes `perm[a]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "permutation length {} != K = {}",
                perm.len(),
                self.k
            )));
        }
        let mut seen = vec![false; self.k];
        for &t in perm {
            if t >= self.k || seen[t] {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            seen[t] = true;
        }
        let labels = self.labels.iter().map(|&l| perm[l]).collect();
        Self::new(labels, self.k)
    }
}

/// Output of [`kmeans_approx`].
#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignment: ClusterAssignment,
    /// K x d matrix of cluster centers.
    pub centers: DMatrix<f64>,
    /// Sum over points of squared distance to the assigned center.
    pub cost: f64,
    pub restarts_used: usize,
}

impl KMeansResult {
    /// Recomputes the cost from the stored assignment and centers.
    pub fn recompute_cost(&self, points: &DMatrix<f64>) -> f64 {
        self.assignment
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &l)| dist2(points, i, &self.centers, l))
            .sum()
    }
}

#[inline]
fn dist2(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    let mut acc = 0.0;
    for d in 0..points.ncols() {
        let diff = points[(i, d)] - centers[(c, d)];
        acc += diff * diff;
    }
    acc
}

/// Nearest center for point `i`; strict comparison keeps the lowest index on ties.
#[inline]
fn nearest(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = dist2(points, i, centers, 0);
    for c in 1..centers.nrows() {
        let d = dist2(points, i, centers, c);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

fn kmeans_plus_plus_seed(
    points: &DMatrix<f64>,
    k: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> DMatrix<f64> {
    use rand::Rng;
    let n = points.nrows();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    chosen.push(rng.gen_range(0..n));
    let mut dist = vec![0.0f64; n];
    let mut centers = DMatrix::zeros(k, points.ncols());
    centers.set_row(0, &points.row(chosen[0]));
    for (i, d) in dist.iter_mut().enumerate() {
        *d = dist2(points, i, &centers, 0);
    }
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let x: f64 = rng.gen::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                cum += d;
                if x < cum {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // all remaining mass is zero (duplicate points); take the lowest
            // index not already chosen
            (0..n)
                .find(|i| !chosen.contains(i))
                .expect("k <= n guarantees an unchosen point")
        };
        chosen.push(next);
        centers.set_row(c, &points.row(next));
        for (i, d) in dist.iter_mut().enumerate() {
            let candidate = dist2(points, i, &centers, c);
            if candidate < *d {
                *d = candidate;
            }
        }
    }
    centers
}

const MAX_LLOYD_ITERS: usize = 300;

fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    mut centers: DMatrix<f64>,
) -> (Vec<usize>, DMatrix<f64>, f64) {
    let n = points.nrows();
    let d = points.ncols();
    let mut assign = vec![usize::MAX; n];
    let mut prev_cost = f64::INFINITY;
    for _iter in 0..MAX_LLOYD_ITERS {
        // assignment step
        let mut changed = false;
        let mut cost = 0.0;
        for (i, slot) in assign.iter_mut().enumerate() {
            let (c, dist) = nearest(points, i, &centers);
            cost += dist;
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        debug_assert!(
            cost <= prev_cost + 1e-9,
            "Lloyd cost increased: {prev_cost} -> {cost}"
        );
        prev_cost = cost;
        if !changed {
            return (assign, centers, cost);
        }
        // update step
        let mut sums: DMatrix<f64> = DMatrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &cluster) in assign.iter().enumerate() {
            counts[cluster] += 1;
            for dd in 0..d {
                sums[(cluster, dd)] += points[(i, dd)];
            }
        }
        let mut repaired: Vec<usize> = Vec::new();
        for c in 0..k {
            if counts[c] > 0 {
                for dd in 0..d {
                    centers[(c, dd)] = sums[(c, dd)] / counts[c] as f64;
                }
            } else {
                // reseed the empty center at the farthest point from its
                // assigned center (lowest index on ties, each point used once)
                let mut far_i = usize::MAX;
                let mut far_d = f64::NEG_INFINITY;
                for (i, &cluster) in assign.iter().enumerate() {
                    if repaired.contains(&i) {
                        continue;
                    }
                    let dcur = dist2(points, i, &centers, cluster);
                    if dcur > far_d {
                        far_d = dcur;
                        far_i = i;
                    }
                }
                repaired.push(far_i);
                centers.set_row(c, &points.row(far_i));
            }
        }
    }
    // hit the iteration cap: recompute a consistent assignment/cost pair
    let mut cost = 0.0;
    for (i, slot) in assign.iter_mut().enumerate() {
        let (c, dist) = nearest(points, i, &centers);
        *slot = c;
        cost += dist;
    }
    (assign, centers, cost)
}

/// k-means++ seeding plus Lloyd iterations, repeated over independent
/// restarts; the lowest-cost run wins (lowest restart index on ties).
///
/// Restart `r` draws from a stream derived from `(seed, r)`, so increasing
/// `restarts` extends the search without perturbing earlier runs, and the
/// reported cost is non-increasing in `restarts`. Restarts execute in
/// parallel; the reduction is order-independent.
pub fn kmeans_approx(
    points: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    master_seed: u64,
) -> Result<KMeansResult> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("no points to cluster".into()));
    }
    if k < 1 {
        return Err(Error::InvalidInput("K must be >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "K = {k} exceeds the number of points {n}"
        )));
    }
    if restarts < 1 {
        return Err(Error::InvalidInput("restarts must be >= 1".into()));
    }

    let runs: Vec<(Vec<usize>, DMatrix<f64>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(master_seed, r as u64);
            let centers = kmeans_plus_plus_seed(points, k, &mut rng);
            lloyd(points, k, centers)
        })
        .collect();

    let best = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.2.partial_cmp(&b.2)
                .expect("k-means cost is finite")
                .then(ia.cmp(ib))
        })
        .map(|(_, run)| run)
        .expect("restarts >= 1");

    let assignment = ClusterAssignment::new(best.0.clone(), k)?;
    Ok(KMeansResult {
        assignment,
        centers: best.1.clone(),
        cost: best.2,
        restarts_used: restarts,
    })
}

/// Configuration for [`spectral_cluster`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub variant: SpectrumVariant,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            variant: SpectrumVariant::default(),
            restarts: 10,
            seed: 0,
        }
    }
}

impl SpectralConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Spectral clustering: embed `e` into K dimensions, then k-means the rows.
pub fn spectral_cluster(
    e: &AdjacencyMatrix,
    k: usize,
    config: &SpectralConfig,
) -> Result<ClusterAssignment> {
    let embedding = spectral_embedding(e, k, config.variant)?;
    let result = kmeans_approx(embedding.matrix(), k, config.restarts, config.seed)?;
    Ok(result.assignment)
}

/// Minimum-cost perfect assignment on a square cost matrix (Kuhn–Munkres with
/// potentials, O(K^3)). Returns `perm` with row `r` assigned to column `perm[r]`.
fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched = vec![0usize; n + 1]; // matched[col] = row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        if matched[j] > 0 {
            perm[matched[j] - 1] = j - 1;
        }
    }
    perm
}

/// Finds the label permutation minimizing one-hot disagreements between
/// `pred` and `truth`, via optimal assignment on the K x K confusion matrix.
///
/// `perm[a] = b` means predicted label `a` corresponds to true label `b`.
pub fn align_labels(pred: &ClusterAssignment, truth: &ClusterAssignment) -> Result<Vec<usize>> {
    check_shapes(pred, truth)?;
    let k = pred.k();
    let mut confusion = vec![vec![0i64; k]; k];
    for (&a, &b) in pred.labels().iter().zip(truth.labels()) {
        confusion[a][b] += 1;
    }
    // maximize agreement = minimize negated confusion
    let cost: Vec<Vec<i64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| -c).collect())
        .collect();
    Ok(min_cost_assignment(&cost))
}

fn check_shapes(pred: &ClusterAssignment, truth: &ClusterAssignment) -> Result<()> {
    if pred.n() != truth.n() {
        return Err(Error::InvalidInput(format!(
            "item counts differ: {} vs {}",
            pred.n(),
            truth.n()
        )));
    }
    if pred.k() != truth.k() {
        return Err(Error::InvalidInput(format!(
            "cluster counts differ: {} vs {}",
            pred.k(),
            truth.k()
        )));
    }
    Ok(())
}

/// Total one-hot disagreement between `pred` and `truth`:
/// the number of `(i, j)` with `g[i][j] != g_true[i][j]`.
///
/// When `aligned` is set (the default in this crate), `pred` is first
/// relabeled by [`align_labels`], making the measure invariant to label
/// permutations. Each item assigned to a different cluster contributes
/// exactly 2 (its one-hot row differs in two positions).
pub fn miscluster_error(
    pred: &ClusterAssignment,
    truth: &ClusterAssignment,
    aligned: bool,
) -> Result<usize> {
    check_shapes(pred, truth)?;
    let effective = if aligned {
        let perm = align_labels(pred, truth)?;
        pred.relabeled(&perm)?
    } else {
        pred.clone()
    };
    let mismatches = effective
        .labels()
        .iter()
        .zip(truth.labels())
        .filter(|(a, b)| a != b)
        .count();
    Ok(2 * mismatches)
}
