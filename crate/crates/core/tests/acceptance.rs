//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;

use sse_core::cluster::{miscluster_error, ClusterAssignment};
use sse_core::corpus::{allocate_counts, builtin_lists, generate_collection, Template};
use sse_core::entropy::{
    assignment_entropy, bound_shape, chernoff_c2, hoeffding_radius, miscluster_entropy_bound,
    BoundInputs, ProbabilityVector,
};
use sse_core::graph::{sample_sbm, AdjacencyMatrix, SbmParams};
use sse_core::model_selection::select_k;
use sse_core::oracle::{
    build_adjacency, CachedOracle, LlmOracle, LlmOracleConfig, MockOracle, MockOracleConfig,
    PromptTemplate, SymmetrizationPolicy, VerdictCache,
};
use sse_core::sim::{
    run_generative_study, run_phase_sweep, run_rate_study, run_table1, ExperimentConfig, KPolicy,
    PipelineConfig, PipelineInput, PqRow, Scenario,
};
use sse_core::{run_pipeline, OracleError};

fn conclude(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}): {detail}");
}

fn ratios(values: &[f64]) -> ProbabilityVector {
    ProbabilityVector::new(values.to_vec()).unwrap()
}

#[test]
fn criterion_1_exact_recovery_identity() {
    let started = Instant::now();
    let (hobbies, _) = builtin_lists();
    let r = ratios(&[0.2, 0.3, 0.5]);
    let mut worst_gap = 0.0f64;
    let mut worst_m = 0u64;
    for seed in 0..20u64 {
        let collection =
            generate_collection(&hobbies, 3, &r, 30, seed, Template::FreeTime).unwrap();
        let oracle = MockOracle::new(MockOracleConfig {
            p: 1.0,
            q: 0.0,
            truth: collection.truth.clone(),
            seed,
        })
        .unwrap();
        let mut config = PipelineConfig::seeded(seed);
        config.known_pq = Some((1.0, 0.0));
        let report = run_pipeline(
            PipelineInput::Texts {
                texts: &collection.texts,
                truth: Some(&collection.truth),
            },
            Some(&oracle),
            &config,
        )
        .unwrap();
        worst_m = worst_m.max(report.m_error.expect("truth supplied"));
        worst_gap = worst_gap.max(report.gap_bar_hat.expect("truth supplied"));
    }
    let elapsed = started.elapsed();
    let pass = worst_m == 0 && worst_gap <= 1e-12 && elapsed < Duration::from_secs(5);
    conclude(
        1,
        "exact recovery identity",
        pass,
        &format!("worst M_error {worst_m}, worst gap {worst_gap}, elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_2_miscluster_entropy_bound_fuzz() {
    let started = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xACCE);
    let mut tested = 0usize;
    let mut violations = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    while tested < 10_000 {
        let k = rng.gen_range(1..=8usize);
        let n = rng.gen_range(k..=80usize);
        let truth_labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let truth = ClusterAssignment::new(truth_labels, k).unwrap();
        if truth.has_empty_clusters() {
            continue;
        }
        let pred_labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let pred = ClusterAssignment::new(pred_labels, k).unwrap();
        let inputs = BoundInputs::from_truth(&truth).unwrap();
        let m = miscluster_error(&pred, &truth, true).unwrap();
        let gap = (assignment_entropy(&truth) - assignment_entropy(&pred)).abs();
        let bound = miscluster_entropy_bound(&inputs, m).unwrap();
        worst_margin = worst_margin.max(gap - bound);
        if gap > bound + 1e-12 {
            violations += 1;
        }
        tested += 1;
    }
    let elapsed = started.elapsed();
    let pass = violations == 0 && elapsed < Duration::from_secs(60);
    conclude(
        2,
        "deterministic miscluster entropy bound",
        pass,
        &format!(
            "{violations} violations over {tested} pairs, worst margin {worst_margin:.3e}, elapsed {elapsed:?}"
        ),
    );
}

fn table1_config(label: &str, p: f64, q: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        scenario: Scenario::Table1 {
            rows: vec![PqRow {
                label: label.into(),
                p,
                q,
            }],
            ratios: vec![vec![0.2, 0.3, 0.5], vec![0.3, 0.3, 0.4], vec![0.5, 0.5]],
            sizes: vec![30, 50, 70],
        },
        k_policy: KPolicy::TrueK,
        replications: 10,
        seed,
        out: None,
    }
}

#[test]
fn criterion_3_grid_replication_mock() {
    let started = Instant::now();

    let clean = run_table1(&table1_config("a21", 0.96, 0.15, 31)).unwrap();
    let mut worst_cell_gap = 0.0f64;
    for agg in &clean.aggregates {
        worst_cell_gap = worst_cell_gap.max(agg.mean_gap.expect("gaps recorded"));
    }

    let noisy = run_table1(&table1_config("ministral", 0.99, 0.77, 32)).unwrap();
    let noisy_mean = noisy.summary["mean_gap_overall"];

    let elapsed = started.elapsed();
    let pass = worst_cell_gap <= 0.10 && noisy_mean >= 0.08 && elapsed < Duration::from_secs(300);
    conclude(
        3,
        "grid replication at measured (p, q)",
        pass,
        &format!(
            "worst low-noise cell mean gap {worst_cell_gap:.4}, high-noise grid mean {noisy_mean:.4}, elapsed {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_4_phase_pattern() {
    let started = Instant::now();
    let config = ExperimentConfig {
        scenario: Scenario::PhaseSweep {
            q: 0.05,
            p_grid: vec![0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95],
            ratios: vec![0.2, 0.3, 0.5],
            n: 50,
        },
        k_policy: KPolicy::TrueK,
        replications: 20,
        seed: 41,
        out: None,
    };
    let report = run_phase_sweep(&config).unwrap();
    let high = report.summary["mean_gap_high_sep"];
    let low = report.summary["mean_gap_low_sep"];
    let elapsed = started.elapsed();
    let pass = high <= 0.10 && high < low && elapsed < Duration::from_secs(180);
    conclude(
        4,
        "separation phase pattern",
        pass,
        &format!(
            "high-separation mean {high:.4}, low-separation mean {low:.4}, elapsed {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_5_rate_study() {
    let started = Instant::now();
    let n_grid = vec![30usize, 60, 120, 240];
    let config = ExperimentConfig {
        scenario: Scenario::RateStudy {
            p: 0.9,
            q: 0.1,
            k: 3,
            n_grid: n_grid.clone(),
        },
        k_policy: KPolicy::TrueK,
        replications: 50,
        seed: 51,
        out: None,
    };
    let report = run_rate_study(&config).unwrap();

    let stats: Vec<(f64, f64)> = n_grid
        .iter()
        .map(|n| {
            let agg = report
                .aggregates
                .iter()
                .find(|a| a.cell == format!("n={n}"))
                .expect("cell exists");
            (agg.mean_gap.unwrap(), agg.se_gap.unwrap())
        })
        .collect();

    // non-increasing, allowing one inversion within 1 combined standard error
    let mut inversions = 0usize;
    let mut inversion_ok = true;
    for w in stats.windows(2) {
        let (m0, s0) = w[0];
        let (m1, s1) = w[1];
        if m1 > m0 {
            inversions += 1;
            if m1 - m0 > (s0 * s0 + s1 * s1).sqrt() {
                inversion_ok = false;
            }
        }
    }
    let monotone_pass = inversions <= 1 && inversion_ok;

    // slope over cells with positive mean gap; fewer than 2 positive cells
    // means the gap already collapsed to zero, which satisfies any decay rate
    let positive = report.summary["positive_cells"];
    let slope_pass = match report.summary.get("slope_log_log") {
        Some(&slope) => slope <= -0.5,
        None => positive < 2.0,
    };

    let elapsed = started.elapsed();
    let pass = monotone_pass && slope_pass && elapsed < Duration::from_secs(600);
    conclude(
        5,
        "rate study",
        pass,
        &format!(
            "means {:?}, inversions {inversions}, slope {:?}, elapsed {elapsed:?}",
            stats.iter().map(|(m, _)| *m).collect::<Vec<_>>(),
            report.summary.get("slope_log_log"),
        ),
    );
}

#[test]
fn criterion_6_concentration_coverage() {
    let started = Instant::now();
    let n = 100usize;
    let k = 3usize;
    let probs = ratios(&[0.2, 0.3, 0.5]);
    let reps = 1000usize;
    let e_true = sse_core::entropy::entropy(&probs);
    let threshold = bound_shape(1.0 / probs.min()).unwrap() * hoeffding_radius(n, k).unwrap();
    let c2 = chernoff_c2(n, k, probs.min()).unwrap();
    let floor = n as f64 * c2 / (2.0 * k as f64);

    let mut exceed = 0usize;
    let mut shortfall = 0usize;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
    for _ in 0..reps {
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            let x: f64 = rng.gen();
            let mut cum = 0.0;
            let mut label = k - 1;
            for (j, &p) in probs.values().iter().enumerate() {
                cum += p;
                if x < cum {
                    label = j;
                    break;
                }
            }
            counts[label] += 1;
        }
        let labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j, c))
            .collect();
        let e_bar = assignment_entropy(&ClusterAssignment::new(labels, k).unwrap());
        if (e_true - e_bar).abs() > threshold {
            exceed += 1;
        }
        if (*counts.iter().min().unwrap() as f64) < floor {
            shortfall += 1;
        }
    }
    let slack = 3.0 * (0.01f64 * 0.99 / reps as f64).sqrt();
    let cap = 0.01 + slack;
    let exceed_rate = exceed as f64 / reps as f64;
    let shortfall_rate = shortfall as f64 / reps as f64;
    let elapsed = started.elapsed();
    let pass = exceed_rate <= cap && shortfall_rate <= cap && elapsed < Duration::from_secs(120);
    conclude(
        6,
        "concentration coverage",
        pass,
        &format!(
            "hoeffding exceedance {exceed_rate:.4}, chernoff shortfall {shortfall_rate:.4}, cap {cap:.4}, elapsed {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_7_generative_bound_probability() {
    let started = Instant::now();
    let reps = 300usize;
    let config = ExperimentConfig {
        scenario: Scenario::GenerativeStudy {
            p: 0.9,
            q: 0.1,
            probs: vec![0.2, 0.3, 0.5],
            n_grid: vec![500],
        },
        k_policy: KPolicy::TrueK,
        replications: reps,
        seed: 71,
        out: None,
    };
    let report = run_generative_study(&config).unwrap();
    let agg = &report.aggregates[0];
    let vacuous = agg.extra["bound_vacuous"] == 1.0;
    let exceed = agg.extra.get("exceed_generative_bound").copied();
    let p0 = 3.0 / 500.0;
    let cap = p0 + 3.0 * (p0 * (1.0 - p0) / reps as f64).sqrt();
    let elapsed = started.elapsed();
    let pass =
        !vacuous && exceed.is_some_and(|rate| rate <= cap) && elapsed < Duration::from_secs(600);
    conclude(
        7,
        "generative bound probability",
        pass,
        &format!(
            "vacuous {vacuous}, exceedance {exceed:?}, cap {cap:.4}, bound {:?}, elapsed {elapsed:?}",
            agg.extra.get("generative_bound"),
        ),
    );
}

#[test]
fn criterion_8_k_selection() {
    let started = Instant::now();

    let params = SbmParams::new(0.9, 0.1, vec![40, 40, 40]).unwrap();
    let mut hits = 0usize;
    for seed in 0..20u64 {
        let (e, _) = sample_sbm(&params, 8100 + seed).unwrap();
        let result = select_k(&e, 1, 6, 5, seed).unwrap();
        hits += (result.chosen_k == 3) as usize;
    }

    let mut exact_hits = 0usize;
    let exact = AdjacencyMatrix::from_edge_fn(20, |i, j| (i < 10) == (j < 10)).unwrap();
    for seed in 0..10u64 {
        let result = select_k(&exact, 1, 3, 5, seed).unwrap();
        exact_hits += (result.chosen_k == 2) as usize;
    }

    let elapsed = started.elapsed();
    let pass = hits >= 16 && exact_hits == 10 && elapsed < Duration::from_secs(300);
    conclude(
        8,
        "k selection by cross-validation",
        pass,
        &format!("noisy hits {hits}/20, exact hits {exact_hits}/10, elapsed {elapsed:?}"),
    );
}

/// Minimal canned-response chat-completion server on a local port.
struct CannedServer {
    endpoint: String,
    bodies: Arc<Mutex<Vec<String>>>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl CannedServer {
    /// Serves `replies[i]` (wrapped as a chat completion) to request `i`,
    /// repeating the last reply when the script runs out.
    fn start(replies: Vec<String>) -> Self {
        Self::start_scripted(replies.into_iter().map(|r| (200, r)).collect())
    }

    /// Same, but each reply carries an HTTP status; non-200 replies are sent
    /// as plain bodies rather than completion payloads.
    fn start_scripted(replies: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind local port");
        let endpoint = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let bodies: Arc<Mutex<Vec<String>>> = Arc::new(Mutex::new(Vec::new()));
        let served_in = AtomicUsize::new(0);
        let bodies_in = bodies.clone();
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                // read headers
                while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
                    match stream.read(&mut chunk) {
                        Ok(0) => break,
                        Ok(n) => buf.extend_from_slice(&chunk[..n]),
                        Err(_) => break,
                    }
                }
                let header_end = buf
                    .windows(4)
                    .position(|w| w == b"\r\n\r\n")
                    .map(|p| p + 4)
                    .unwrap_or(buf.len());
                let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                let content_length: usize = headers
                    .lines()
                    .find_map(|l| {
                        let (name, value) = l.split_once(':')?;
                        name.eq_ignore_ascii_case("content-length")
                            .then(|| value.trim().parse().ok())?
                    })
                    .unwrap_or(0);
                while buf.len() < header_end + content_length {
                    match stream.read(&mut chunk) {
                        Ok(0) => break,
                        Ok(n) => buf.extend_from_slice(&chunk[..n]),
                        Err(_) => break,
                    }
                }
                let body = String::from_utf8_lossy(&buf[header_end..]).to_string();
                if headers.starts_with("POST /shutdown") {
                    let _ = stream.write_all(b"HTTP/1.1 200 OK\r\ncontent-length: 0\r\n\r\n");
                    break;
                }
                bodies_in.lock().unwrap().push(body);
                let idx = served_in.fetch_add(1, Ordering::SeqCst);
                let (status, reply) = {
                    let r = &replies;
                    r.get(idx)
                        .unwrap_or_else(|| r.last().expect("nonempty script"))
                };
                let payload = if *status == 200 {
                    serde_json::json!({
                        "choices": [{"message": {"role": "assistant", "content": reply}}]
                    })
                    .to_string()
                } else {
                    reply.clone()
                };
                let reason = if *status == 200 { "OK" } else { "Error" };
                let response = format!(
                    "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    payload.len(),
                    payload
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        Self {
            endpoint,
            bodies,
            handle: Some(handle),
        }
    }

    fn shutdown(mut self) -> Vec<String> {
        let client = reqwest::blocking::Client::new();
        let _ = client
            .post(self.endpoint.replace("/v1/chat/completions", "/shutdown"))
            .body("")
            .send();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        let bodies = self.bodies.lock().unwrap().clone();
        bodies
    }
}

fn fast_client(endpoint: &str, template: PromptTemplate) -> LlmOracle {
    let mut config = LlmOracleConfig::new(endpoint, "canned-judge");
    config.template = template;
    config.max_retries = 2;
    config.initial_backoff = Duration::from_millis(1);
    config.timeout = Duration::from_secs(5);
    LlmOracle::new(config).unwrap()
}

#[test]
fn criterion_9_oracle_client_correctness() {
    let started = Instant::now();
    let mut checks: BTreeMap<&str, bool> = BTreeMap::new();

    // verdict mapping through a live local endpoint
    {
        let server = CannedServer::start(vec!["TRUE".into()]);
        let oracle = fast_client(&server.endpoint, PromptTemplate::Plain);
        checks.insert("true reply", oracle.judge_texts("a", "b").unwrap());
        server.shutdown();
    }
    {
        let server = CannedServer::start(vec![
            "FALSE — TEXT A mentions a crowning, TEXT B does not".into(),
        ]);
        let oracle = fast_client(&server.endpoint, PromptTemplate::Plain);
        checks.insert("false reply", !oracle.judge_texts("a", "b").unwrap());
        server.shutdown();
    }
    {
        let server = CannedServer::start(vec!["The answer is maybe".into()]);
        let oracle = fast_client(&server.endpoint, PromptTemplate::Plain);
        let err = oracle.judge_texts("a", "b").unwrap_err();
        checks.insert(
            "garbage reply",
            matches!(err, OracleError::UnparseableVerdict { attempts: 2, .. }),
        );
        server.shutdown();
    }

    // rendered prompts match the templates byte for byte
    {
        let text_a = "Water is vital to human survival";
        let text_b = "Humans must have water to survive";
        for (template, name) in [
            (PromptTemplate::Plain, "plain prompt bytes"),
            (PromptTemplate::Formatted, "formatted prompt bytes"),
        ] {
            let server = CannedServer::start(vec!["TRUE".into()]);
            let oracle = fast_client(&server.endpoint, template);
            oracle.judge_texts(text_a, text_b).unwrap();
            let bodies = server.shutdown();
            let body: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
            let sent = body["messages"][0]["content"].as_str().unwrap();
            let expected = template
                .text()
                .replace("{text_A}", text_a)
                .replace("{text_B}", text_b);
            checks.insert(name, sent == expected);
        }
    }

    // cache round-trip is bit-exact
    {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.jsonl");
        let truth = ClusterAssignment::new(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
        let texts: Vec<String> = (0..6).map(|i| format!("text {i}")).collect();
        let mock = MockOracle::new(MockOracleConfig {
            p: 0.7,
            q: 0.3,
            truth,
            seed: 9,
        })
        .unwrap();
        let first = CachedOracle::new(&mock, VerdictCache::open(&path).unwrap());
        let e1 = build_adjacency(&texts, &first, SymmetrizationPolicy::SingleQuery, 2).unwrap();
        let bytes_first = std::fs::read(&path).unwrap();

        let second = CachedOracle::new(&mock, VerdictCache::open(&path).unwrap());
        let e2 = build_adjacency(&texts, &second, SymmetrizationPolicy::SingleQuery, 2).unwrap();
        let bytes_second = std::fs::read(&path).unwrap();

        checks.insert("cache round trip", e1 == e2 && bytes_first == bytes_second);
        checks.insert("cache serves all verdicts", second.inner_queries() == 0);
    }

    let elapsed = started.elapsed();
    let all = checks.values().all(|&ok| ok) && elapsed < Duration::from_secs(10);
    conclude(
        9,
        "oracle client correctness",
        all,
        &format!("checks {checks:?}, elapsed {elapsed:?}"),
    );
}

#[test]
fn non_success_status_is_its_own_error_kind() {
    // 429 twice, then the client gives up with the status preserved
    let server = CannedServer::start_scripted(vec![(429, "slow down".into())]);
    let oracle = fast_client(&server.endpoint, PromptTemplate::Plain);
    let err = oracle.judge_texts("a", "b").unwrap_err();
    server.shutdown();
    match err {
        OracleError::HttpStatus {
            status: 429,
            attempts: 2,
            ..
        } => {}
        other => panic!("expected an http-status error, got {other:?}"),
    }
}

#[test]
fn status_failures_recover_when_the_endpoint_does() {
    // first attempt 500, second succeeds
    let server =
        CannedServer::start_scripted(vec![(500, "transient".into()), (200, "TRUE".into())]);
    let oracle = fast_client(&server.endpoint, PromptTemplate::Plain);
    let verdict = oracle.judge_texts("a", "b").unwrap();
    server.shutdown();
    assert!(verdict);
}

#[test]
fn criterion_10_corpus_ground_truth() {
    let started = Instant::now();
    let (hobbies, events) = builtin_lists();
    let mut relation_ok = true;
    let mut entropy_ok = true;

    for (list, template) in [
        (&hobbies, Template::FreeTime),
        (&events, Template::DateEvents),
    ] {
        for (ratio_values, n) in [
            (vec![0.2, 0.3, 0.5], 30usize),
            (vec![0.5, 0.5], 40),
            (vec![0.2, 0.3, 0.5], 50),
        ] {
            let r = ratios(&ratio_values);
            let collection = generate_collection(list, 3, &r, n, 100 + n as u64, template).unwrap();

            // exhaustive triple check of the ground-truth relation
            let eq = |x: usize, y: usize| {
                sse_core::corpus::true_equivalent(&collection.meta[x], &collection.meta[y]).unwrap()
            };
            for i in 0..n {
                relation_ok &= eq(i, i);
                for j in 0..n {
                    relation_ok &= eq(i, j) == eq(j, i);
                    for l in 0..n {
                        if eq(i, j) && eq(j, l) {
                            relation_ok &= eq(i, l);
                        }
                    }
                }
            }

            // empirical entropy equals the entropy of the ratio allocation
            let counts = allocate_counts(&r, n);
            let manual: f64 = -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n as f64;
                    p * p.ln()
                })
                .sum::<f64>();
            let e_bar = assignment_entropy(&collection.truth);
            entropy_ok &= (e_bar - manual).abs() <= 1e-12;
        }
    }

    let elapsed = started.elapsed();
    let pass = relation_ok && entropy_ok;
    conclude(
        10,
        "corpus ground truth",
        pass,
        &format!("relation_ok {relation_ok}, entropy_ok {entropy_ok}, elapsed {elapsed:?}"),
    );
}
