//! Entropy estimators (true, empirical, plug-in) and evaluators for the
//! closed-form finite-sample bounds that accompany them.
//!
//! All entropies are in nats; [`nats_to_bits`] converts for display.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};

/// A discrete probability vector: non-negative entries summing to 1 (within 1e-9).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    values: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        if let Some(&bad) = values.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "probability entry {bad} is negative or non-finite"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { values })
    }

    /// Uniform distribution over `k` outcomes.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("K must be >= 1".into()));
        }
        Ok(Self {
            values: vec![1.0 / k as f64; k],
        })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Smallest entry. Bound evaluators require it to be positive.
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Shannon entropy `-sum p_j ln p_j` in nats, with `0 ln 0 = 0`.
///
/// Always in `[0, ln K]`.
pub fn entropy(p: &ProbabilityVector) -> f64 {
    let sum: f64 = p
        .values()
        .iter()
        .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
        .sum();
    let e = -sum;
    // avoid -0.0 for degenerate distributions
    if e == 0.0 {
        0.0
    } else {
        e
    }
}

/// Cluster proportions `count_j / n` of an assignment.
pub fn proportions(assignment: &ClusterAssignment) -> ProbabilityVector {
    let n = assignment.n() as f64;
    let values = assignment
        .counts()
        .into_iter()
        .map(|c| c as f64 / n)
        .collect();
    ProbabilityVector::new(values).expect("counts/n always form a probability vector")
}

/// Plug-in entropy of an assignment's cluster proportions, in nats.
pub fn assignment_entropy(assignment: &ClusterAssignment) -> f64 {
    entropy(&proportions(assignment))
}

/// Converts nats to bits (display only; all computation stays in nats).
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// The bound shape `h(x) = x + ln x`, defined for `x > 0`.
pub fn bound_shape(x: f64) -> Result<f64> {
    if x <= 0.0 || x.is_nan() {
        return Err(Error::InvalidInput(format!(
            "bound shape requires x > 0, got {x}"
        )));
    }
    Ok(x + x.ln())
}

/// Inputs shared by the finite-sample bound evaluators.
///
/// `c2` is the cluster-balance constant: validity requires `c2` in `(0, 1]`
/// and `2 K n_min / n >= c2`. Optional fields are only needed by the
/// evaluators that use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub c2: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Edge-density scale with `p = alpha_n * (q + lambda)`.
    pub alpha_n: Option<f64>,
    /// Separation `p - q`; evaluators require it positive.
    pub lambda: Option<f64>,
    /// Smallest cluster probability, in `(0, 1/K]`.
    pub p_min: Option<f64>,
}

impl BoundInputs {
    pub fn new(n: usize, k: usize, c2: f64, n_min: usize, n_max: usize) -> Result<Self> {
        let inputs = Self {
            n,
            k,
            c2,
            n_min,
            n_max,
            alpha_n: None,
            lambda: None,
            p_min: None,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Derives `(n, K, n_min, n_max)` from a ground-truth assignment, with the
    /// largest valid balance constant `c2 = min(1, 2 K n_min / n)`.
    pub fn from_truth(truth: &ClusterAssignment) -> Result<Self> {
        let (n_min, n_max) = truth.count_range();
        if n_min == 0 {
            return Err(Error::InvalidInput(
                "bound inputs need every cluster non-empty".into(),
            ));
        }
        let n = truth.n();
        let k = truth.k();
        let c2 = (2.0 * k as f64 * n_min as f64 / n as f64).min(1.0);
        Self::new(n, k, c2, n_min, n_max)
    }

    pub fn with_alpha(mut self, alpha_n: f64) -> Result<Self> {
        if alpha_n <= 0.0 || alpha_n.is_nan() {
            return Err(Error::InvalidInput(format!("alpha_n = {alpha_n} <= 0")));
        }
        self.alpha_n = Some(alpha_n);
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidInput("lambda must be finite".into()));
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn with_p_min(mut self, p_min: f64) -> Result<Self> {
        if p_min <= 0.0 || p_min.is_nan() || p_min > 1.0 / self.k as f64 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "p_min = {p_min} not in (0, 1/K] with K = {}",
                self.k
            )));
        }
        self.p_min = Some(p_min);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidInput("n and K must be >= 1".into()));
        }
        if self.c2 <= 0.0 || self.c2 > 1.0 || self.c2.is_nan() {
            return Err(Error::BoundCondition {
                condition: "0 < c2 <= 1",
                detail: format!("c2 = {}", self.c2),
            });
        }
        let balance = 2.0 * self.k as f64 * self.n_min as f64 / self.n as f64;
        if balance < self.c2 - 1e-12 {
            return Err(Error::BoundCondition {
                condition: "2*K*n_min/n >= c2",
                detail: format!("2*K*n_min/n = {balance} < c2 = {}", self.c2),
            });
        }
        if !(self.n_min <= self.n_max && self.n_max <= self.n) {
            return Err(Error::InvalidInput(format!(
                "need n_min <= n_max <= n, got {} <= {} <= {}",
                self.n_min, self.n_max, self.n
            )));
        }
        Ok(())
    }
}

/// Deterministic bound relating the entropy gap to the miscluster error:
/// `|e_bar - e_hat| <= h(2K/c2) * M_error / n` whenever `2 K n_min / n >= c2`.
pub fn miscluster_entropy_bound(inputs: &BoundInputs, m_error: usize) -> Result<f64> {
    inputs.validate()?;
    let shape = bound_shape(2.0 * inputs.k as f64 / inputs.c2)?;
    Ok(shape * m_error as f64 / inputs.n as f64)
}

/// Finite-sample high-probability bound on `|e_bar - e_hat|` for a fixed
/// collection: `h(2K/c2) * n_max / (4 c2^2 n_min^2 alpha_n K^2)`.
///
/// Requires `alpha_n` and a positive separation `lambda`.
pub fn finite_sample_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let alpha_n = inputs.alpha_n.ok_or(Error::BoundCondition {
        condition: "alpha_n supplied",
        detail: "finite-sample bound needs the edge-density scale".into(),
    })?;
    if alpha_n <= 0.0 || alpha_n.is_nan() {
        return Err(Error::BoundCondition {
            condition: "alpha_n > 0",
            detail: format!("alpha_n = {alpha_n}"),
        });
    }
    let lambda = inputs.lambda.ok_or(Error::BoundCondition {
        condition: "lambda supplied",
        detail: "finite-sample bound needs the separation".into(),
    })?;
    if lambda <= 0.0 || lambda.is_nan() {
        return Err(Error::BoundCondition {
            condition: "lambda > 0",
            detail: format!("lambda = {lambda}"),
        });
    }
    let shape = bound_shape(2.0 * inputs.k as f64 / inputs.c2)?;
    let k = inputs.k as f64;
    let denom = 4.0 * inputs.c2 * inputs.c2 * (inputs.n_min as f64).powi(2) * alpha_n * k * k;
    Ok(shape * inputs.n_max as f64 / denom)
}

/// Balanced-case rate bound `h(2K/c2) / (c2^4 * alpha * n)`; the `O(1/n)`
/// specialization of the finite-sample bound.
pub fn balanced_rate_bound(k: usize, c2: f64, alpha: f64, n: usize) -> Result<f64> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidInput("n and K must be >= 1".into()));
    }
    if c2 <= 0.0 || c2 > 1.0 || c2.is_nan() {
        return Err(Error::BoundCondition {
            condition: "0 < c2 <= 1",
            detail: format!("c2 = {c2}"),
        });
    }
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::BoundCondition {
            condition: "alpha > 0",
            detail: format!("alpha = {alpha}"),
        });
    }
    let shape = bound_shape(2.0 * k as f64 / c2)?;
    Ok(shape / (c2.powi(4) * alpha * n as f64))
}

/// Shrinkage factor `m(n) = 1 - sqrt(2 ln(nK) / (n p_min))`.
///
/// Positive only when `2 ln(nK) / (n p_min) < 1`; the generative bound is
/// vacuous otherwise.
pub fn chernoff_shrinkage(n: usize, k: usize, p_min: f64) -> Result<f64> {
    if n < 2 || k < 1 {
        return Err(Error::InvalidInput(format!(
            "need n >= 2 and K >= 1, got n = {n}, K = {k}"
        )));
    }
    if p_min <= 0.0 || p_min.is_nan() || p_min > 1.0 / k as f64 + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "p_min = {p_min} not in (0, 1/K] for K = {k}"
        )));
    }
    let radical = 2.0 * ((n * k) as f64).ln() / (n as f64 * p_min);
    Ok(1.0 - radical.sqrt())
}

/// High-probability bound on `|e_true - e_hat|` under i.i.d. cluster labels:
///
/// `h(1/p_min) K sqrt(ln(2Kn)/(2n)) + h(1/(m p_min)) / (16 K^4 m^4 p_min^4 n)`
///
/// with `m = m(n)` from [`chernoff_shrinkage`]. Fails when `m(n) <= 0`
/// (the bound is vacuous at that sample size).
pub fn generative_bound(n: usize, k: usize, p_min: f64) -> Result<f64> {
    let m = chernoff_shrinkage(n, k, p_min)?;
    if m <= 0.0 {
        return Err(Error::BoundCondition {
            condition: "m(n) > 0",
            detail: format!("m(n) = {m} at n = {n}, K = {k}, p_min = {p_min}"),
        });
    }
    let first = bound_shape(1.0 / p_min)? * hoeffding_radius(n, k)?;
    let kf = k as f64;
    let second = bound_shape(1.0 / (m * p_min))?
        / (16.0 * kf.powi(4) * m.powi(4) * p_min.powi(4) * n as f64);
    Ok(first + second)
}

/// Hoeffding deviation radius `K sqrt(ln(2Kn) / (2n))` for the total-variation
/// distance between true and empirical cluster proportions.
pub fn hoeffding_radius(n: usize, k: usize) -> Result<f64> {
    if n < 2 || k < 1 {
        return Err(Error::InvalidInput(format!(
            "need n >= 2 and K >= 1, got n = {n}, K = {k}"
        )));
    }
    let kf = k as f64;
    Ok(kf * ((2.0 * kf * n as f64).ln() / (2.0 * n as f64)).sqrt())
}

/// Data-independent balance constant `2 K m(n) p_min` guaranteed (w.h.p.) to
/// satisfy `2 K n_min / n >= c2` under i.i.d. labels.
pub fn chernoff_c2(n: usize, k: usize, p_min: f64) -> Result<f64> {
    let m = chernoff_shrinkage(n, k, p_min)?;
    if m <= 0.0 {
        return Err(Error::BoundCondition {
            condition: "2*ln(nK)/(n*p_min) < 1",
            detail: format!("shrinkage m(n) = {m} is non-positive"),
        });
    }
    Ok(2.0 * k as f64 * m * p_min)
}

/// Entropy summary of one pipeline run: plug-in entropy, reference entropies
/// when the ground truth is known, their gaps, and evaluated bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Plug-in entropy of the recovered clustering, nats.
    pub e_hat: f64,
    /// Empirical entropy of the true-cluster proportions, when truth is known.
    pub e_bar: Option<f64>,
    /// Entropy of the generating distribution, when one exists.
    pub e_true: Option<f64>,
    /// `|e_bar - e_hat|`.
    pub gap_bar_hat: Option<f64>,
    /// `|e_true - e_hat|`.
    pub gap_true_hat: Option<f64>,
    /// Aligned one-hot disagreement count against the truth.
    pub m_error: Option<u64>,
    /// Recovered per-cluster counts.
    pub cluster_counts: Vec<usize>,
    pub n: usize,
    pub k: usize,
    /// Measured within/between edge frequencies against the truth.
    pub p_hat: Option<f64>,
    pub q_hat: Option<f64>,
    /// Evaluated bound values by name.
    pub bounds: BTreeMap<String, f64>,
}

impl EntropyReport {
    /// Checks that stored gaps match the stored entropies to 1e-12.
    pub fn validate_gaps(&self) -> Result<()> {
        if let (Some(e_bar), Some(gap)) = (self.e_bar, self.gap_bar_hat) {
            if (gap - (e_bar - self.e_hat).abs()).abs() > 1e-12 {
                return Err(Error::InvariantViolated(format!(
                    "gap_bar_hat {gap} != |e_bar - e_hat| = {}",
                    (e_bar - self.e_hat).abs()
                )));
            }
        }
        if let (Some(e_true), Some(gap)) = (self.e_true, self.gap_true_hat) {
            if (gap - (e_true - self.e_hat).abs()).abs() > 1e-12 {
                return Err(Error::InvariantViolated(format!(
                    "gap_true_hat {gap} != |e_true - e_hat| = {}",
                    (e_true - self.e_hat).abs()
                )));
            }
        }
        Ok(())
    }
}
