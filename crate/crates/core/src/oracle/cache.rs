//! Persistent verdict cache: append-only newline-delimited records keyed by
//! oracle fingerprint and text digests.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{OracleError, Result};
use crate::oracle::{text_digest, EdgeOracle, PairQuery};

/// One persisted verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub fingerprint: String,
    pub digest_a: String,
    pub digest_b: String,
    pub verdict: bool,
    pub timestamp: u64,
}

/// File-backed verdict store.
///
/// Records are appended as they are produced; the file is never rewritten.
/// Corrupt lines found at load time are dropped with a warning and their
/// verdicts recomputed on demand.
pub struct VerdictCache {
    path: PathBuf,
    map: HashMap<(String, String, String), bool>,
    file: File,
}

impl VerdictCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(OracleError::CacheIo)?);
            for (line_no, line) in reader.lines().enumerate() {
                let line = line.map_err(OracleError::CacheIo)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(rec) => {
                        map.insert((rec.fingerprint, rec.digest_a, rec.digest_b), rec.verdict);
                    }
                    Err(e) => {
                        log::warn!(
                            "dropping corrupt cache entry at {}:{}: {e}",
                            path.display(),
                            line_no + 1
                        );
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(OracleError::CacheIo)?;
        Ok(Self { path, map, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn get(&self, fingerprint: &str, digest_a: &str, digest_b: &str) -> Option<bool> {
        self.map
            .get(&(
                fingerprint.to_owned(),
                digest_a.to_owned(),
                digest_b.to_owned(),
            ))
            .copied()
    }

    fn put(
        &mut self,
        fingerprint: String,
        digest_a: String,
        digest_b: String,
        verdict: bool,
    ) -> std::result::Result<(), OracleError> {
        let record = CacheRecord {
            fingerprint: fingerprint.clone(),
            digest_a: digest_a.clone(),
            digest_b: digest_b.clone(),
            verdict,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let line = serde_json::to_string(&record).expect("cache records always serialize");
        writeln!(self.file, "{line}").map_err(OracleError::CacheIo)?;
        self.map.insert((fingerprint, digest_a, digest_b), verdict);
        Ok(())
    }
}

/// Wraps an oracle with the persistent cache: hits skip the inner judge.
///
/// Keys are `(inner fingerprint, ordered pair of text digests)`, so changing
/// the inner oracle's configuration invalidates nothing but simply misses.
pub struct CachedOracle<O> {
    inner: O,
    cache: Mutex<VerdictCache>,
    inner_queries: AtomicUsize,
    hits: AtomicUsize,
}

impl<O: EdgeOracle> CachedOracle<O> {
    pub fn new(inner: O, cache: VerdictCache) -> Self {
        Self {
            inner,
            cache: Mutex::new(cache),
            inner_queries: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    /// Number of queries that reached the inner oracle.
    pub fn inner_queries(&self) -> usize {
        self.inner_queries.load(Ordering::Relaxed)
    }

    /// Number of queries answered from the cache.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: EdgeOracle> EdgeOracle for CachedOracle<O> {
    fn judge(&self, query: &PairQuery<'_>) -> std::result::Result<bool, OracleError> {
        let fingerprint = self.inner.fingerprint();
        let digest_a = text_digest(query.text_i);
        let digest_b = text_digest(query.text_j);
        if let Some(verdict) =
            self.cache
                .lock()
                .expect("cache lock")
                .get(&fingerprint, &digest_a, &digest_b)
        {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(verdict);
        }
        let verdict = self.inner.judge(query)?;
        self.inner_queries.fetch_add(1, Ordering::Relaxed);
        self.cache
            .lock()
            .expect("cache lock")
            .put(fingerprint, digest_a, digest_b, verdict)?;
        Ok(verdict)
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn symmetric_by_construction(&self) -> bool {
        self.inner.symmetric_by_construction()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::ClusterAssignment;
    use crate::oracle::{build_adjacency, MockOracle, MockOracleConfig, SymmetrizationPolicy};

    fn mock(seed: u64) -> MockOracle {
        let truth = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        MockOracle::new(MockOracleConfig {
            p: 0.8,
            q: 0.3,
            truth,
            seed,
        })
        .unwrap()
    }

    fn texts() -> Vec<String> {
        (0..4).map(|i| format!("text number {i}")).collect()
    }

    #[test]
    fn second_identical_build_issues_zero_inner_queries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.jsonl");

        let first = CachedOracle::new(mock(9), VerdictCache::open(&path).unwrap());
        let e1 = build_adjacency(&texts(), &first, SymmetrizationPolicy::SingleQuery, 2).unwrap();
        assert_eq!(first.inner_queries(), 6);

        let second = CachedOracle::new(mock(9), VerdictCache::open(&path).unwrap());
        let e2 = build_adjacency(&texts(), &second, SymmetrizationPolicy::SingleQuery, 2).unwrap();
        assert_eq!(second.inner_queries(), 0, "all verdicts served from cache");
        assert_eq!(second.hits(), 6);
        assert_eq!(e1, e2);
    }

    #[test]
    fn changed_configuration_misses_the_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.jsonl");

        let first = CachedOracle::new(mock(9), VerdictCache::open(&path).unwrap());
        build_adjacency(&texts(), &first, SymmetrizationPolicy::SingleQuery, 2).unwrap();

        // different seed -> different fingerprint -> full re-query
        let second = CachedOracle::new(mock(10), VerdictCache::open(&path).unwrap());
        build_adjacency(&texts(), &second, SymmetrizationPolicy::SingleQuery, 2).unwrap();
        assert_eq!(second.inner_queries(), 6);
    }

    #[test]
    fn corrupt_lines_are_dropped_and_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.jsonl");

        let first = CachedOracle::new(mock(9), VerdictCache::open(&path).unwrap());
        build_adjacency(&texts(), &first, SymmetrizationPolicy::SingleQuery, 2).unwrap();

        // corrupt one line in place
        let contents = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = contents.lines().collect();
        let garbled = format!("{}garbage", lines[2]);
        lines[2] = &garbled;
        std::fs::write(&path, lines.join("\n")).unwrap();

        let reloaded = VerdictCache::open(&path).unwrap();
        assert_eq!(reloaded.len(), 5, "corrupt entry dropped");
        let second = CachedOracle::new(mock(9), reloaded);
        build_adjacency(&texts(), &second, SymmetrizationPolicy::SingleQuery, 2).unwrap();
        assert_eq!(
            second.inner_queries(),
            1,
            "only the dropped pair re-queried"
        );
    }

    #[test]
    fn round_trip_preserves_all_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.jsonl");
        let mut cache = VerdictCache::open(&path).unwrap();
        let mut expected = Vec::new();
        for i in 0..50u32 {
            let fp = format!("fp{}", i % 3);
            let da = format!("a{i}");
            let db = format!("b{i}");
            let verdict = i % 2 == 0;
            cache
                .put(fp.clone(), da.clone(), db.clone(), verdict)
                .unwrap();
            expected.push((fp, da, db, verdict));
        }
        drop(cache);

        let reloaded = VerdictCache::open(&path).unwrap();
        assert_eq!(reloaded.len(), 50);
        for (fp, da, db, verdict) in expected {
            assert_eq!(reloaded.get(&fp, &da, &db), Some(verdict));
        }
    }
}
