//! Experiment harness: end-to-end pipeline runs and the desk-scale studies
//! (grid replication, phase sweep, rate study, generative study, and
//! concentration checks), with persistent reports.

mod report;
mod scenarios;

pub use report::{
    aggregate_runs, export_grid_csv, load_report, persist_report, write_summary, CellAggregate,
    RunRecord, SimulationReport, REPORT_FORMAT_VERSION,
};
pub use scenarios::{
    run_concentration, run_generative_study, run_phase_sweep, run_rate_study, run_scenario,
    run_table1,
};

use serde::{Deserialize, Serialize};

use crate::cluster::{miscluster_error, spectral_cluster, ClusterAssignment, SpectralConfig};
use crate::entropy::{
    assignment_entropy, balanced_rate_bound, finite_sample_bound, generative_bound,
    miscluster_entropy_bound, BoundInputs, EntropyReport,
};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, SpectrumVariant};
use crate::model_selection::{default_candidates, select_k_with, CvConfig};
use crate::oracle::{build_adjacency, estimate_pq, EdgeOracle, SymmetrizationPolicy};
use crate::seed;

/// How the pipeline resolves the number of clusters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KPolicy {
    /// A fixed, caller-supplied K.
    Fixed(usize),
    /// The ground-truth K (requires truth labels).
    #[default]
    TrueK,
    /// Cross-validation over the default candidate range.
    CrossValidation { folds: usize },
}

/// Pipeline settings shared by single runs and studies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k_policy: KPolicy,
    pub variant: SpectrumVariant,
    pub restarts: usize,
    pub policy: SymmetrizationPolicy,
    pub max_inflight: usize,
    pub seed: u64,
    /// Known oracle noise `(p, q)` for mock runs; enables the model-based
    /// bound evaluations with `alpha_n = 1`, `lambda = p - q`.
    pub known_pq: Option<(f64, f64)>,
    /// Smallest generating-cluster probability, when a generative model exists.
    pub p_min: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k_policy: KPolicy::default(),
            variant: SpectrumVariant::default(),
            restarts: 10,
            policy: SymmetrizationPolicy::default(),
            max_inflight: 4,
            seed: 0,
            known_pq: None,
            p_min: None,
        }
    }
}

impl PipelineConfig {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// What the pipeline starts from.
pub enum PipelineInput<'a> {
    /// Raw texts; the oracle builds the judgment matrix.
    Texts {
        texts: &'a [String],
        truth: Option<&'a ClusterAssignment>,
    },
    /// A pre-built (e.g. sampled) judgment matrix.
    Graph {
        adjacency: &'a AdjacencyMatrix,
        truth: Option<&'a ClusterAssignment>,
    },
}

/// Runs the full pipeline: adjacency, K resolution, spectral clustering,
/// entropy estimates, and every applicable bound evaluation.
///
/// When the ground truth is known, the run re-verifies the deterministic
/// miscluster entropy bound inline and fails with an invariant violation if
/// it does not hold (that would indicate an implementation bug).
pub fn run_pipeline(
    input: PipelineInput<'_>,
    oracle: Option<&dyn EdgeOracle>,
    config: &PipelineConfig,
) -> Result<EntropyReport> {
    // stage: adjacency
    let (owned, borrowed, truth) = match input {
        PipelineInput::Texts { texts, truth } => {
            let oracle = oracle.ok_or_else(|| {
                Error::InvalidInput("text input requires an oracle".into()).at_stage("adjacency")
            })?;
            let e = build_adjacency(texts, oracle, config.policy, config.max_inflight)
                .map_err(|e| e.at_stage("adjacency"))?;
            (Some(e), None, truth)
        }
        PipelineInput::Graph { adjacency, truth } => {
            if adjacency.n() < 2 {
                return Err(
                    Error::InvalidInput("need at least 2 nodes".into()).at_stage("adjacency")
                );
            }
            if let Some(t) = truth {
                if t.n() != adjacency.n() {
                    return Err(Error::InvalidInput(format!(
                        "truth covers {} items but the matrix has {}",
                        t.n(),
                        adjacency.n()
                    ))
                    .at_stage("adjacency"));
                }
            }
            (None, Some(adjacency), truth)
        }
    };
    let e = owned
        .as_ref()
        .or(borrowed)
        .expect("either built or supplied");

    // stage: k-selection
    let k = match config.k_policy {
        KPolicy::Fixed(k) => {
            if k < 1 || k > e.n() {
                return Err(Error::InvalidInput(format!(
                    "K = {k} must satisfy 1 <= K <= n = {}",
                    e.n()
                ))
                .at_stage("k-selection"));
            }
            k
        }
        KPolicy::TrueK => truth
            .ok_or_else(|| {
                Error::InvalidInput("true-K policy requires truth labels".into())
                    .at_stage("k-selection")
            })?
            .k(),
        KPolicy::CrossValidation { folds } => {
            let (k_min, k_max) = default_candidates(e.n());
            let cv = select_k_with(
                e,
                k_min,
                k_max,
                &CvConfig {
                    folds,
                    seed: seed::derive(config.seed, 0xCF),
                    restarts: config.restarts,
                    ..CvConfig::default()
                },
            )
            .map_err(|err| err.at_stage("k-selection"))?;
            cv.chosen_k
        }
    };

    // stage: clustering
    let pred = spectral_cluster(
        e,
        k,
        &SpectralConfig {
            variant: config.variant,
            restarts: config.restarts,
            seed: seed::derive(config.seed, 0xC1),
        },
    )
    .map_err(|err| err.at_stage("clustering"))?;

    // stage: entropy
    let e_hat = assignment_entropy(&pred);
    let mut report = EntropyReport {
        e_hat,
        e_bar: None,
        e_true: None,
        gap_bar_hat: None,
        gap_true_hat: None,
        m_error: None,
        cluster_counts: pred.counts(),
        n: e.n(),
        k,
        p_hat: None,
        q_hat: None,
        bounds: Default::default(),
    };

    if let Some(truth) = truth {
        let e_bar = assignment_entropy(truth);
        report.e_bar = Some(e_bar);
        report.gap_bar_hat = Some((e_bar - e_hat).abs());
        if truth.k() == k {
            let m = miscluster_error(&pred, truth, true).map_err(|e| e.at_stage("entropy"))?;
            report.m_error = Some(m as u64);
        }
        if let Ok(est) = estimate_pq(e, truth) {
            report.p_hat = Some(est.p_hat);
            report.q_hat = Some(est.q_hat);
        }

        // stage: bounds
        if let (Some(m), Ok(inputs)) = (report.m_error, BoundInputs::from_truth(truth)) {
            let bound =
                miscluster_entropy_bound(&inputs, m as usize).map_err(|e| e.at_stage("bounds"))?;
            report.bounds.insert("miscluster_entropy".into(), bound);
            let gap = report.gap_bar_hat.expect("set alongside e_bar");
            if gap > bound + 1e-12 {
                return Err(Error::InvariantViolated(format!(
                    "entropy gap {gap} exceeds the deterministic bound {bound} \
                     (m_error = {m}, n = {}, k = {k})",
                    e.n()
                )));
            }
            if let Some((p, q)) = config.known_pq {
                let lambda = p - q;
                if lambda > 0.0 {
                    if let Ok(with_model) = inputs
                        .clone()
                        .with_alpha(1.0)
                        .and_then(|i| i.with_lambda(lambda))
                    {
                        if let Ok(b) = finite_sample_bound(&with_model) {
                            report.bounds.insert("finite_sample".into(), b);
                        }
                    }
                    if let Ok(b) = balanced_rate_bound(truth.k(), inputs.c2, 1.0, e.n()) {
                        report.bounds.insert("balanced_rate".into(), b);
                    }
                }
            }
            if let Some(p_min) = config.p_min {
                if let Ok(b) = generative_bound(e.n(), truth.k(), p_min) {
                    report.bounds.insert("generative".into(), b);
                }
            }
        }
    }

    report.validate_gaps().map_err(|e| e.at_stage("entropy"))?;
    Ok(report)
}

/// Scenario selector plus its scenario-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    /// Ratio-by-size grid at measured `(p, q)` rows.
    Table1 {
        rows: Vec<PqRow>,
        ratios: Vec<Vec<f64>>,
        sizes: Vec<usize>,
    },
    /// Separation sweep at fixed q.
    PhaseSweep {
        q: f64,
        p_grid: Vec<f64>,
        ratios: Vec<f64>,
        n: usize,
    },
    /// Gap decay across a sample-size grid, balanced clusters.
    RateStudy {
        p: f64,
        q: f64,
        k: usize,
        n_grid: Vec<usize>,
    },
    /// I.i.d. cluster labels each replication; gap measured to the true entropy.
    GenerativeStudy {
        p: f64,
        q: f64,
        probs: Vec<f64>,
        n_grid: Vec<usize>,
    },
    /// Label-sampling concentration checks only (no graph).
    Concentration { probs: Vec<f64>, n: usize },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Table1 { .. } => "table1",
            Scenario::PhaseSweep { .. } => "phase_sweep",
            Scenario::RateStudy { .. } => "rate_study",
            Scenario::GenerativeStudy { .. } => "generative_study",
            Scenario::Concentration { .. } => "concentration",
        }
    }
}

/// One measured `(p, q)` parameter row of the grid scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqRow {
    pub label: String,
    pub p: f64,
    pub q: f64,
}

/// Full study configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub k_policy: KPolicy,
    pub replications: usize,
    pub seed: u64,
    /// Destination the caller intends to persist to (echoed only).
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidInput("replications must be >= 1".into()));
        }
        let check_prob = |name: &str, v: f64| -> Result<()> {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::InvalidInput(format!("{name} = {v} not in [0, 1]")));
            }
            Ok(())
        };
        let check_ratio = |ratio: &[f64]| -> Result<()> {
            crate::entropy::ProbabilityVector::new(ratio.to_vec()).map(|_| ())
        };
        match &self.scenario {
            Scenario::Table1 {
                rows,
                ratios,
                sizes,
            } => {
                if rows.is_empty() || ratios.is_empty() || sizes.is_empty() {
                    return Err(Error::InvalidInput(
                        "table1 needs rows, ratios, and sizes".into(),
                    ));
                }
                for row in rows {
                    check_prob("p", row.p)?;
                    check_prob("q", row.q)?;
                }
                for ratio in ratios {
                    check_ratio(ratio)?;
                }
                if sizes.iter().any(|&s| s < 2) {
                    return Err(Error::InvalidInput("sizes must be >= 2".into()));
                }
            }
            Scenario::PhaseSweep {
                q,
                p_grid,
                ratios,
                n,
            } => {
                check_prob("q", *q)?;
                if p_grid.is_empty() {
                    return Err(Error::InvalidInput("empty p grid".into()));
                }
                for &p in p_grid {
                    check_prob("p", p)?;
                }
                check_ratio(ratios)?;
                if *n < 2 {
                    return Err(Error::InvalidInput("n must be >= 2".into()));
                }
            }
            Scenario::RateStudy { p, q, k, n_grid } => {
                check_prob("p", *p)?;
                check_prob("q", *q)?;
                if *k < 1 {
                    return Err(Error::InvalidInput("K must be >= 1".into()));
                }
                if n_grid.is_empty() || n_grid.iter().any(|&n| n < 2 * k) {
                    return Err(Error::InvalidInput(
                        "rate study needs n >= 2K across the grid".into(),
                    ));
                }
                if self.replications < 50 {
                    return Err(Error::InvalidInput(
                        "rate study needs at least 50 replications".into(),
                    ));
                }
            }
            Scenario::GenerativeStudy {
                p,
                q,
                probs,
                n_grid,
            } => {
                check_prob("p", *p)?;
                check_prob("q", *q)?;
                check_ratio(probs)?;
                if probs.iter().any(|&v| v <= 0.0) {
                    return Err(Error::InvalidInput(
                        "generative cluster probabilities must be positive".into(),
                    ));
                }
                if n_grid.is_empty() || n_grid.iter().any(|&n| n < 2) {
                    return Err(Error::InvalidInput("bad n grid".into()));
                }
            }
            Scenario::Concentration { probs, n } => {
                check_ratio(probs)?;
                if probs.iter().any(|&v| v <= 0.0) {
                    return Err(Error::InvalidInput(
                        "cluster probabilities must be positive".into(),
                    ));
                }
                if *n < 2 {
                    return Err(Error::InvalidInput("n must be >= 2".into()));
                }
            }
        }
        Ok(())
    }
}
