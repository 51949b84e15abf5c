//! Choosing the number of clusters K by pair-holdout cross-validation.
//!
//! Unordered node pairs are split into folds. For each candidate K and fold,
//! held-out entries are imputed with the global observed edge density, the
//! imputed matrix is spectrally clustered into K blocks, block probabilities
//! are estimated from training pairs only, and held-out pairs are scored
//! against those probabilities. Too-small K cannot express the density
//! structure; too-large K overfits noise. The K minimizing mean held-out
//! loss wins, lowest K on ties.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::kmeans_approx;
use crate::error::{Error, Result};
use crate::graph::{embed_symmetric, AdjacencyMatrix, SpectrumVariant};
use crate::seed;

/// Held-out pair scoring rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvLoss {
    /// Mean squared error `(E_ij - B_hat)^2`. The default.
    #[default]
    SquaredError,
    /// Negative Bernoulli log-likelihood with probabilities clamped to
    /// `[1e-6, 1 - 1e-6]`.
    BernoulliNll,
}

/// Cross-validation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub loss: CvLoss,
    /// k-means restarts per (K, fold) evaluation.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            loss: CvLoss::default(),
            restarts: 10,
            seed: 0,
        }
    }
}

/// Outcome of a cross-validation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub candidate_ks: Vec<usize>,
    /// Mean held-out loss per candidate K.
    pub losses: Vec<f64>,
    pub chosen_k: usize,
    pub folds: usize,
    pub seed: u64,
}

/// Default candidate range `{1 .. min(10, n/4)}`.
pub fn default_candidates(n: usize) -> (usize, usize) {
    (1, (n / 4).clamp(1, 10))
}

/// Picks K from `k_min..=k_max` by pair-holdout cross-validation with
/// default loss and restarts.
pub fn select_k(
    e: &AdjacencyMatrix,
    k_min: usize,
    k_max: usize,
    folds: usize,
    seed: u64,
) -> Result<CvResult> {
    select_k_with(
        e,
        k_min,
        k_max,
        &CvConfig {
            folds,
            seed,
            ..CvConfig::default()
        },
    )
}

fn assign_folds(n_pairs: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed, 0xF01D);
    (0..n_pairs).map(|_| rng.gen_range(0..folds)).collect()
}

/// Full-control variant of [`select_k`].
pub fn select_k_with(
    e: &AdjacencyMatrix,
    k_min: usize,
    k_max: usize,
    config: &CvConfig,
) -> Result<CvResult> {
    let n = e.n();
    if k_min < 1 || k_min > k_max {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k_min <= k_max, got {k_min}..={k_max}"
        )));
    }
    if k_max > n / 2 {
        return Err(Error::InvalidInput(format!(
            "k_max = {k_max} exceeds n/2 = {}; the embedding is not stable there",
            n / 2
        )));
    }
    if config.folds < 2 {
        return Err(Error::InvalidInput("folds must be >= 2".into()));
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let fold_of = assign_folds(pairs.len(), config.folds, config.seed);
    let edge_total: usize = pairs.iter().filter(|&&(i, j)| e.has_edge(i, j)).count();
    let density = edge_total as f64 / pairs.len() as f64;

    let candidates: Vec<usize> = (k_min..=k_max).collect();
    let tasks: Vec<(usize, usize)> = candidates
        .iter()
        .flat_map(|&k| (0..config.folds).map(move |f| (k, f)))
        .collect();

    let fold_losses: Vec<Result<Option<f64>>> = tasks
        .par_iter()
        .map(|&(k, fold)| evaluate_fold(e, &pairs, &fold_of, fold, k, density, config))
        .collect();

    let mut losses = Vec::with_capacity(candidates.len());
    for (idx, &k) in candidates.iter().enumerate() {
        let mut total = 0.0;
        let mut used = 0usize;
        for f in 0..config.folds {
            match &fold_losses[idx * config.folds + f] {
                Ok(Some(loss)) => {
                    total += loss;
                    used += 1;
                }
                Ok(None) => {} // empty fold carries no information
                Err(e) => {
                    return Err(Error::InvalidInput(format!(
                        "cross-validation failed at K = {k}, fold {f}: {e}"
                    )))
                }
            }
        }
        if used == 0 {
            return Err(Error::InvalidInput(
                "every fold was empty; too few pairs for the requested folds".into(),
            ));
        }
        let mean = total / used as f64;
        if !mean.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite CV loss {mean} at K = {k}"
            )));
        }
        losses.push(mean);
    }

    let chosen_idx = losses
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.partial_cmp(b).expect("finite").then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .expect("at least one candidate");

    Ok(CvResult {
        chosen_k: candidates[chosen_idx],
        candidate_ks: candidates,
        losses,
        folds: config.folds,
        seed: config.seed,
    })
}

#[allow(clippy::too_many_arguments)]
fn evaluate_fold(
    e: &AdjacencyMatrix,
    pairs: &[(usize, usize)],
    fold_of: &[usize],
    fold: usize,
    k: usize,
    density: f64,
    config: &CvConfig,
) -> Result<Option<f64>> {
    let n = e.n();
    let held: Vec<usize> = (0..pairs.len()).filter(|&t| fold_of[t] == fold).collect();
    if held.is_empty() {
        return Ok(None);
    }

    // impute held-out entries with the global observed density
    let mut imputed = e.to_dense();
    for &t in &held {
        let (i, j) = pairs[t];
        imputed[(i, j)] = density;
        imputed[(j, i)] = density;
    }

    // weighted Laplacian of the imputed matrix
    let mut lap = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            let w = imputed[(i, j)];
            degree += w;
            if i != j {
                lap[(i, j)] = -w;
            }
        }
        lap[(i, i)] = degree;
    }

    let embedding = embed_symmetric(lap, k, SpectrumVariant::UnnormalizedSmallest)?;
    let km_seed = seed::derive2(config.seed, k as u64, fold as u64);
    let blocks = kmeans_approx(embedding.matrix(), k, config.restarts, km_seed)?;
    let labels = blocks.assignment.labels();

    // block probabilities from training pairs only
    let mut pair_count = vec![0usize; k * k];
    let mut edge_count = vec![0usize; k * k];
    for (t, &(i, j)) in pairs.iter().enumerate() {
        if fold_of[t] == fold {
            continue;
        }
        let (a, b) = (labels[i], labels[j]);
        pair_count[a * k + b] += 1;
        pair_count[b * k + a] += 1;
        let edge = e.has_edge(i, j) as usize;
        edge_count[a * k + b] += edge;
        edge_count[b * k + a] += edge;
    }
    let block_prob = |a: usize, b: usize| -> f64 {
        let c = pair_count[a * k + b];
        if c == 0 {
            density
        } else {
            edge_count[a * k + b] as f64 / c as f64
        }
    };

    let mut total = 0.0;
    for &t in &held {
        let (i, j) = pairs[t];
        let y = e.has_edge(i, j) as usize as f64;
        let prob = block_prob(labels[i], labels[j]);
        total += match config.loss {
            CvLoss::SquaredError => (y - prob) * (y - prob),
            CvLoss::BernoulliNll => {
                let clamped = prob.clamp(1e-6, 1.0 - 1e-6);
                -(y * clamped.ln() + (1.0 - y) * (1.0 - clamped).ln())
            }
        };
    }
    Ok(Some(total / held.len() as f64))
}
