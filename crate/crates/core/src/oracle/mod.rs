//! The pairwise-equivalence judge: an abstract oracle contract with a
//! simulated implementation, a persistent caching layer, an external
//! chat-completion client, adjacency assembly, and edge-frequency estimation.

mod cache;
mod llm;
mod mock;
mod prompt;

pub use cache::{CachedOracle, VerdictCache};
pub use llm::{parse_verdict, LlmOracle, LlmOracleConfig};
pub use mock::{MockOracle, MockOracleConfig};
pub use prompt::PromptTemplate;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, OracleError, Result};
use crate::graph::AdjacencyMatrix;

/// One pairwise question: indices into the text list plus the texts themselves.
#[derive(Debug, Clone, Copy)]
pub struct PairQuery<'a> {
    pub i: usize,
    pub j: usize,
    pub text_i: &'a str,
    pub text_j: &'a str,
}

/// A pairwise-equivalence judge.
///
/// `judge` must be well-defined for any ordered pair of distinct texts.
/// Implementations declare via [`EdgeOracle::symmetric_by_construction`]
/// whether asking both orders can ever disagree.
pub trait EdgeOracle: Sync {
    /// Returns `true` when the two texts are judged semantically equivalent.
    fn judge(&self, query: &PairQuery<'_>) -> std::result::Result<bool, OracleError>;

    /// Stable identity (hash of oracle kind + configuration) for cache keying.
    fn fingerprint(&self) -> String;

    /// Whether `judge(i, j) == judge(j, i)` holds by construction.
    fn symmetric_by_construction(&self) -> bool;
}

impl<T: EdgeOracle + ?Sized> EdgeOracle for &T {
    fn judge(&self, query: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
        (**self).judge(query)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }

    fn symmetric_by_construction(&self) -> bool {
        (**self).symmetric_by_construction()
    }
}

/// Hex SHA-256 of a text, used for cache keys and fingerprints.
pub fn text_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

/// Short stable hash over an oracle's kind and configuration fields.
pub(crate) fn fingerprint_of(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    hex::encode(&hasher.finalize()[..8])
}

/// How the two orders of a pair are combined into one undirected edge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetrizationPolicy {
    /// Ask each unordered pair once (the prompt already demands mutual
    /// implication). The default.
    #[default]
    SingleQuery,
    /// Ask both orders; edge iff both verdicts are positive.
    AndBoth,
    /// Ask both orders; edge iff either verdict is positive.
    OrBoth,
}

/// Builds the full judgment matrix over `texts`.
///
/// Every pair's verdict is obtained exactly per `policy`; queries run on up
/// to `max_inflight` worker threads. Verdicts land in slots indexed by query,
/// so the assembled matrix is independent of completion order. The first
/// failing query (in pair order) aborts the build with the pair identified.
pub fn build_adjacency(
    texts: &[String],
    oracle: &dyn EdgeOracle,
    policy: SymmetrizationPolicy,
    max_inflight: usize,
) -> Result<AdjacencyMatrix> {
    let n = texts.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 texts, got {n}"
        )));
    }
    let mut queries: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            queries.push((i, j));
            if policy != SymmetrizationPolicy::SingleQuery {
                queries.push((j, i));
            }
        }
    }

    let workers = max_inflight.max(1).min(queries.len());
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<std::result::Result<bool, OracleError>>>> =
        (0..queries.len()).map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= queries.len() {
                    break;
                }
                let (i, j) = queries[idx];
                let verdict = oracle.judge(&PairQuery {
                    i,
                    j,
                    text_i: &texts[i],
                    text_j: &texts[j],
                });
                *slots[idx].lock().expect("slot lock") = Some(verdict);
            });
        }
    });

    let mut verdicts = Vec::with_capacity(queries.len());
    for (slot, &(i, j)) in slots.into_iter().zip(&queries) {
        let outcome = slot
            .into_inner()
            .expect("slot lock")
            .expect("every query slot is filled");
        match outcome {
            Ok(v) => verdicts.push(v),
            Err(source) => {
                return Err(Error::Oracle(OracleError::PairFailed {
                    i,
                    j,
                    source: Box::new(source),
                }))
            }
        }
    }

    let mut edges = vec![false; n * n];
    match policy {
        SymmetrizationPolicy::SingleQuery => {
            for (&(i, j), &v) in queries.iter().zip(&verdicts) {
                edges[i * n + j] = v;
                edges[j * n + i] = v;
            }
        }
        SymmetrizationPolicy::AndBoth | SymmetrizationPolicy::OrBoth => {
            for pair in queries.chunks(2).zip(verdicts.chunks(2)) {
                let (&(i, j), v) = (&pair.0[0], pair.1);
                let combined = if policy == SymmetrizationPolicy::AndBoth {
                    v[0] && v[1]
                } else {
                    v[0] || v[1]
                };
                edges[i * n + j] = combined;
                edges[j * n + i] = combined;
            }
        }
    }
    AdjacencyMatrix::from_edge_fn(n, |i, j| edges[i * n + j])
}

/// Empirical within/between edge frequencies against a known truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqEstimate {
    pub p_hat: f64,
    pub q_hat: f64,
    pub within_pairs: usize,
    pub between_pairs: usize,
}

/// Estimates `(p, q)` as edge frequencies within and between true clusters.
///
/// Requires at least one within pair and one between pair (a single-cluster
/// truth has no between pairs and is rejected).
pub fn estimate_pq(e: &AdjacencyMatrix, truth: &ClusterAssignment) -> Result<PqEstimate> {
    if e.n() != truth.n() {
        return Err(Error::InvalidInput(format!(
            "matrix has {} nodes but truth has {}",
            e.n(),
            truth.n()
        )));
    }
    let labels = truth.labels();
    let mut within_pairs = 0usize;
    let mut between_pairs = 0usize;
    let mut within_edges = 0usize;
    let mut between_edges = 0usize;
    for i in 0..e.n() {
        for j in (i + 1)..e.n() {
            if labels[i] == labels[j] {
                within_pairs += 1;
                within_edges += e.has_edge(i, j) as usize;
            } else {
                between_pairs += 1;
                between_edges += e.has_edge(i, j) as usize;
            }
        }
    }
    if within_pairs == 0 {
        return Err(Error::InvalidInput(
            "no within-cluster pairs; p_hat is undefined".into(),
        ));
    }
    if between_pairs == 0 {
        return Err(Error::InvalidInput(
            "degenerate truth with a single cluster; q_hat is undefined".into(),
        ));
    }
    Ok(PqEstimate {
        p_hat: within_edges as f64 / within_pairs as f64,
        q_hat: between_edges as f64 / between_pairs as f64,
        within_pairs,
        between_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_sbm, SbmParams};

    fn truth(sizes: &[usize]) -> ClusterAssignment {
        let mut labels = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            labels.extend(std::iter::repeat_n(b, s));
        }
        ClusterAssignment::new(labels, sizes.len()).unwrap()
    }

    fn texts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("text {i}")).collect()
    }

    #[test]
    fn exact_blocks_from_noiseless_mock() {
        let t = truth(&[3, 3]);
        let oracle = MockOracle::new(MockOracleConfig {
            p: 1.0,
            q: 0.0,
            truth: t.clone(),
            seed: 0,
        })
        .unwrap();
        let e = build_adjacency(&texts(6), &oracle, SymmetrizationPolicy::SingleQuery, 4).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = i != j && (i < 3) == (j < 3);
                assert_eq!(e.has_edge(i, j), expected, "({i}, {j})");
            }
        }
    }

    /// Counts queries and judges everything equivalent.
    struct CountingOracle {
        calls: AtomicUsize,
    }

    impl EdgeOracle for CountingOracle {
        fn judge(&self, _q: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
            self.calls.fetch_add(1, Ordering::Relaxed);
            Ok(true)
        }

        fn fingerprint(&self) -> String {
            "counting".into()
        }

        fn symmetric_by_construction(&self) -> bool {
            true
        }
    }

    #[test]
    fn query_counts_per_policy() {
        for (policy, expected) in [
            (SymmetrizationPolicy::SingleQuery, 1),
            (SymmetrizationPolicy::AndBoth, 2),
            (SymmetrizationPolicy::OrBoth, 2),
        ] {
            let oracle = CountingOracle {
                calls: AtomicUsize::new(0),
            };
            build_adjacency(&texts(2), &oracle, policy, 3).unwrap();
            assert_eq!(oracle.calls.load(Ordering::Relaxed), expected, "{policy:?}");
        }
    }

    /// Judges by parity and stalls pseudo-randomly so completion order varies.
    struct JitteryOracle {
        nonce: u64,
    }

    impl EdgeOracle for JitteryOracle {
        fn judge(&self, q: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
            let delay = crate::seed::pair_uniform(self.nonce, q.i as u64, q.j as u64);
            std::thread::sleep(std::time::Duration::from_micros((delay * 300.0) as u64));
            Ok((q.i + q.j).is_multiple_of(3))
        }

        fn fingerprint(&self) -> String {
            "jittery".into()
        }

        fn symmetric_by_construction(&self) -> bool {
            true
        }
    }

    #[test]
    fn assembly_is_schedule_independent() {
        let ts = texts(12);
        let reference = build_adjacency(
            &ts,
            &JitteryOracle { nonce: 1 },
            SymmetrizationPolicy::SingleQuery,
            1,
        )
        .unwrap();
        for nonce in [2u64, 3, 4] {
            for inflight in [2usize, 4, 8] {
                let e = build_adjacency(
                    &ts,
                    &JitteryOracle { nonce },
                    SymmetrizationPolicy::SingleQuery,
                    inflight,
                )
                .unwrap();
                assert_eq!(e, reference);
            }
        }
    }

    /// Fails on one specific ordered pair.
    struct FailingOracle;

    impl EdgeOracle for FailingOracle {
        fn judge(&self, q: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
            if (q.i, q.j) == (1, 3) {
                Err(OracleError::Transport {
                    attempts: 1,
                    message: "boom".into(),
                })
            } else {
                Ok(false)
            }
        }

        fn fingerprint(&self) -> String {
            "failing".into()
        }

        fn symmetric_by_construction(&self) -> bool {
            true
        }
    }

    #[test]
    fn failures_identify_the_offending_pair() {
        let err = build_adjacency(
            &texts(5),
            &FailingOracle,
            SymmetrizationPolicy::SingleQuery,
            2,
        )
        .unwrap_err();
        match err {
            Error::Oracle(OracleError::PairFailed { i, j, .. }) => {
                assert_eq!((i, j), (1, 3));
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn and_both_or_both_combine_orders() {
        /// Asymmetric on purpose: true only when i < j.
        struct OrderSensitive;
        impl EdgeOracle for OrderSensitive {
            fn judge(&self, q: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
                Ok(q.i < q.j)
            }
            fn fingerprint(&self) -> String {
                "order".into()
            }
            fn symmetric_by_construction(&self) -> bool {
                false
            }
        }
        let ts = texts(3);
        let and = build_adjacency(&ts, &OrderSensitive, SymmetrizationPolicy::AndBoth, 2).unwrap();
        assert_eq!(and.edge_count(), 0);
        let or = build_adjacency(&ts, &OrderSensitive, SymmetrizationPolicy::OrBoth, 2).unwrap();
        assert_eq!(or.edge_count(), 3);
    }

    #[test]
    fn pq_estimates_on_reference_matrices() {
        let t = truth(&[3, 3]);
        let block = AdjacencyMatrix::from_edge_fn(6, |i, j| (i < 3) == (j < 3)).unwrap();
        let est = estimate_pq(&block, &t).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.q_hat, 0.0);
        assert_eq!(est.within_pairs, 6);
        assert_eq!(est.between_pairs, 9);

        let empty = AdjacencyMatrix::from_edge_fn(6, |_, _| false).unwrap();
        let est = estimate_pq(&empty, &t).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.q_hat, 0.0);
    }

    #[test]
    fn pq_estimate_rejects_single_cluster_truth() {
        let t = truth(&[4]);
        let e = AdjacencyMatrix::from_edge_fn(4, |_, _| true).unwrap();
        assert!(estimate_pq(&e, &t).is_err());
    }

    #[test]
    fn pq_estimate_concentrates() {
        // SBM(p = 0.75, q = 0.0, sizes [10, 10, 10]) over 100 seeds:
        // mean p_hat within [0.72, 0.78]
        let params = SbmParams::new(0.75, 0.0, vec![10, 10, 10]).unwrap();
        let mut p_sum = 0.0;
        for s in 0..100u64 {
            let (e, t) = sample_sbm(&params, 7000 + s).unwrap();
            p_sum += estimate_pq(&e, &t).unwrap().p_hat;
        }
        let mean = p_sum / 100.0;
        assert!((0.72..=0.78).contains(&mean), "mean p_hat {mean}");
    }

    #[test]
    fn mock_adjacency_pq_estimates_match_table_parameters() {
        // mock oracle at (p, q) = (0.96, 0.15), blocks (6, 9, 15), 200 seeds:
        // mean p_hat in [0.93, 0.99], mean q_hat in [0.12, 0.18]
        let t = truth(&[6, 9, 15]);
        let ts = texts(30);
        let mut p_sum = 0.0;
        let mut q_sum = 0.0;
        for s in 0..200u64 {
            let oracle = MockOracle::new(MockOracleConfig {
                p: 0.96,
                q: 0.15,
                truth: t.clone(),
                seed: s,
            })
            .unwrap();
            let e = build_adjacency(&ts, &oracle, SymmetrizationPolicy::SingleQuery, 4).unwrap();
            let est = estimate_pq(&e, &t).unwrap();
            p_sum += est.p_hat;
            q_sum += est.q_hat;
        }
        let (p_mean, q_mean) = (p_sum / 200.0, q_sum / 200.0);
        assert!((0.93..=0.99).contains(&p_mean), "mean p_hat {p_mean}");
        assert!((0.12..=0.18).contains(&q_mean), "mean q_hat {q_mean}");
    }
}
