//! Simulated oracle: Bernoulli verdicts driven by a known ground truth.

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, OracleError, Result};
use crate::oracle::{fingerprint_of, EdgeOracle, PairQuery};
use crate::seed;

/// Configuration of the simulated judge.
///
/// The verdict for pair `{i, j}` is a single Bernoulli draw fixed by
/// `(seed, i, j)`: within-truth pairs succeed with probability `p`, others
/// with probability `q`. Re-asking (in either order) returns the same answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockOracleConfig {
    pub p: f64,
    pub q: f64,
    pub truth: ClusterAssignment,
    pub seed: u64,
}

/// Noisy block-structured judge over indexed texts.
#[derive(Debug, Clone)]
pub struct MockOracle {
    config: MockOracleConfig,
}

impl MockOracle {
    pub fn new(config: MockOracleConfig) -> Result<Self> {
        for (name, v) in [("p", config.p), ("q", config.q)] {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                return Err(Error::InvalidInput(format!("{name} = {v} not in [0, 1]")));
            }
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &MockOracleConfig {
        &self.config
    }

    /// The keyed Bernoulli verdict for an index pair.
    pub fn judge_pair(&self, i: usize, j: usize) -> std::result::Result<bool, OracleError> {
        let n = self.config.truth.n();
        if i == j || i >= n || j >= n {
            return Err(OracleError::IndexOutOfRange { i, j });
        }
        let labels = self.config.truth.labels();
        let prob = if labels[i] == labels[j] {
            self.config.p
        } else {
            self.config.q
        };
        Ok(seed::pair_bernoulli(self.config.seed, i, j, prob))
    }
}

impl EdgeOracle for MockOracle {
    fn judge(&self, query: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
        self.judge_pair(query.i, query.j)
    }

    fn fingerprint(&self) -> String {
        let labels = self
            .config
            .truth
            .labels()
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        fingerprint_of(&[
            "mock",
            &self.config.p.to_bits().to_string(),
            &self.config.q.to_bits().to_string(),
            &self.config.seed.to_string(),
            &labels,
        ])
    }

    fn symmetric_by_construction(&self) -> bool {
        true
    }
}
