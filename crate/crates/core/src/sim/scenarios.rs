//! The desk-scale studies: grid replication with mock oracles, separation
//! sweep, rate study, generative study, and label-concentration checks.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::cluster::ClusterAssignment;
use crate::corpus::{builtin_lists, generate_collection, Template};
use crate::entropy::{
    assignment_entropy, bound_shape, chernoff_c2, entropy, generative_bound, hoeffding_radius,
    ProbabilityVector,
};
use crate::error::{Error, Result};
use crate::graph::sample_conditional;
use crate::oracle::{MockOracle, MockOracleConfig};
use crate::seed;
use crate::sim::report::{aggregate_runs, table1_cell, RunRecord, SimulationReport};
use crate::sim::{
    run_pipeline, ExperimentConfig, KPolicy, PipelineConfig, PipelineInput, Scenario,
    REPORT_FORMAT_VERSION,
};

/// Dispatches a validated configuration to its scenario runner.
pub fn run_scenario(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    match &config.scenario {
        Scenario::Table1 { .. } => run_table1(config),
        Scenario::PhaseSweep { .. } => run_phase_sweep(config),
        Scenario::RateStudy { .. } => run_rate_study(config),
        Scenario::GenerativeStudy { .. } => run_generative_study(config),
        Scenario::Concentration { .. } => run_concentration(config),
    }
}

fn pipeline_config(k_policy: KPolicy, p: f64, q: f64, task_seed: u64) -> PipelineConfig {
    PipelineConfig {
        k_policy,
        seed: seed::derive(task_seed, 0xB1),
        known_pq: Some((p, q)),
        ..PipelineConfig::default()
    }
}

/// Draws i.i.d. labels from a probability vector.
fn sample_labels(
    probs: &ProbabilityVector,
    n: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Vec<usize> {
    let values = probs.values();
    (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            let mut cum = 0.0;
            for (j, &p) in values.iter().enumerate() {
                cum += p;
                if x < cum {
                    return j;
                }
            }
            values.len() - 1
        })
        .collect()
}

/// Grid replication: for each `(p, q)` row, ratio configuration, and data
/// size, generate a text collection, judge it with the mock oracle at that
/// row's noise level, and record the entropy gap.
pub fn run_table1(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let Scenario::Table1 {
        rows,
        ratios,
        sizes,
    } = &config.scenario
    else {
        return Err(Error::InvalidInput("expected the table1 scenario".into()));
    };
    let (hobbies, _) = builtin_lists();

    struct Cell<'a> {
        row: &'a crate::sim::PqRow,
        ratio: &'a Vec<f64>,
        size: usize,
    }
    let mut cells = Vec::new();
    for row in rows {
        for ratio in ratios {
            for &size in sizes {
                cells.push(Cell { row, ratio, size });
            }
        }
    }

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();

    let runs: Vec<RunRecord> = tasks
        .par_iter()
        .map(|&(cell_idx, rep)| -> Result<RunRecord> {
            let cell = &cells[cell_idx];
            let task_seed = seed::derive2(config.seed, cell_idx as u64, rep as u64);
            let started = Instant::now();

            let ratios_vec = ProbabilityVector::new(cell.ratio.clone())?;
            let collection = generate_collection(
                &hobbies,
                3,
                &ratios_vec,
                cell.size,
                seed::derive(task_seed, 1),
                Template::FreeTime,
            )?;
            let oracle = MockOracle::new(MockOracleConfig {
                p: cell.row.p,
                q: cell.row.q,
                truth: collection.truth.clone(),
                seed: seed::derive(task_seed, 2),
            })?;
            let report = run_pipeline(
                PipelineInput::Texts {
                    texts: &collection.texts,
                    truth: Some(&collection.truth),
                },
                Some(&oracle),
                &pipeline_config(config.k_policy, cell.row.p, cell.row.q, task_seed),
            )?;

            Ok(RunRecord {
                cell: table1_cell(&cell.row.label, cell.ratio, cell.size),
                replicate: rep,
                seed: task_seed,
                n: report.n,
                k: report.k,
                e_bar: report.e_bar,
                e_hat: Some(report.e_hat),
                e_true: None,
                gap: report.gap_bar_hat,
                gap_true: None,
                m_error: report.m_error,
                p_hat: report.p_hat,
                q_hat: report.q_hat,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let aggregates = aggregate_runs(&runs);
    let mut summary = BTreeMap::new();
    let gaps: Vec<f64> = runs.iter().filter_map(|r| r.gap).collect();
    if !gaps.is_empty() {
        summary.insert(
            "mean_gap_overall".into(),
            gaps.iter().sum::<f64>() / gaps.len() as f64,
        );
    }
    Ok(SimulationReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        runs,
        aggregates,
        summary,
    })
}

/// Separation sweep: fixed `q`, `p` over a grid straddling the phase change.
pub fn run_phase_sweep(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let Scenario::PhaseSweep {
        q,
        p_grid,
        ratios,
        n,
    } = &config.scenario
    else {
        return Err(Error::InvalidInput(
            "expected the phase-sweep scenario".into(),
        ));
    };
    let ratios_vec = ProbabilityVector::new(ratios.clone())?;
    let counts = crate::corpus::allocate_counts(&ratios_vec, *n);
    let truth = block_truth(&counts)?;

    let tasks: Vec<(usize, usize)> = (0..p_grid.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();

    let runs: Vec<RunRecord> = tasks
        .par_iter()
        .map(|&(cell_idx, rep)| -> Result<RunRecord> {
            let p = p_grid[cell_idx];
            let task_seed = seed::derive2(config.seed, cell_idx as u64, rep as u64);
            graph_run(
                &truth,
                p,
                *q,
                config.k_policy,
                task_seed,
                format!("p-q={:.2}", p - q),
                rep,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let aggregates = aggregate_runs(&runs);
    let mut summary = BTreeMap::new();
    let sep_means: Vec<(f64, f64)> = p_grid
        .iter()
        .filter_map(|p| {
            aggregates
                .iter()
                .find(|a| a.cell == format!("p-q={:.2}", p - q))
                .and_then(|a| a.mean_gap)
                .map(|g| (p - q, g))
        })
        .collect();
    let low: Vec<f64> = sep_means
        .iter()
        .filter(|(s, _)| *s <= 0.15)
        .map(|(_, g)| *g)
        .collect();
    let high: Vec<f64> = sep_means
        .iter()
        .filter(|(s, _)| *s >= 0.55)
        .map(|(_, g)| *g)
        .collect();
    if !low.is_empty() {
        summary.insert(
            "mean_gap_low_sep".into(),
            low.iter().sum::<f64>() / low.len() as f64,
        );
    }
    if !high.is_empty() {
        summary.insert(
            "mean_gap_high_sep".into(),
            high.iter().sum::<f64>() / high.len() as f64,
        );
    }
    let inversions = sep_means.windows(2).filter(|w| w[1].1 > w[0].1).count();
    summary.insert("gap_increases_along_separation".into(), inversions as f64);
    Ok(SimulationReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        runs,
        aggregates,
        summary,
    })
}

/// Rate study: balanced clusters at fixed `(p, q)` over an `n` grid; reports
/// the fitted log-log slope of mean gap against `n`.
pub fn run_rate_study(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let Scenario::RateStudy { p, q, k, n_grid } = &config.scenario else {
        return Err(Error::InvalidInput(
            "expected the rate-study scenario".into(),
        ));
    };
    let uniform = ProbabilityVector::uniform(*k)?;

    let tasks: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();

    let runs: Vec<RunRecord> = tasks
        .par_iter()
        .map(|&(cell_idx, rep)| -> Result<RunRecord> {
            let n = n_grid[cell_idx];
            let counts = crate::corpus::allocate_counts(&uniform, n);
            let truth = block_truth(&counts)?;
            let task_seed = seed::derive2(config.seed, cell_idx as u64, rep as u64);
            graph_run(
                &truth,
                *p,
                *q,
                config.k_policy,
                task_seed,
                format!("n={n}"),
                rep,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let aggregates = aggregate_runs(&runs);
    let mut summary = BTreeMap::new();
    let points: Vec<(f64, f64)> = n_grid
        .iter()
        .filter_map(|n| {
            aggregates
                .iter()
                .find(|a| a.cell == format!("n={n}"))
                .and_then(|a| a.mean_gap)
                .filter(|g| *g > 0.0)
                .map(|g| (*n as f64, g))
        })
        .collect();
    summary.insert("positive_cells".into(), points.len() as f64);
    if let Some(slope) = fit_log_log_slope(&points) {
        summary.insert("slope_log_log".into(), slope);
    }
    Ok(SimulationReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        runs,
        aggregates,
        summary,
    })
}

/// Generative study: cluster labels drawn i.i.d. each replication, so the
/// empirical entropy itself is random; measures deviations from the true
/// entropy and their exceedance of the generative bound.
pub fn run_generative_study(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let Scenario::GenerativeStudy {
        p,
        q,
        probs,
        n_grid,
    } = &config.scenario
    else {
        return Err(Error::InvalidInput(
            "expected the generative-study scenario".into(),
        ));
    };
    let probs_vec = ProbabilityVector::new(probs.clone())?;
    let k = probs_vec.k();
    let p_min = probs_vec.min();
    let e_true = entropy(&probs_vec);
    let hoeffding_envelope = bound_shape(1.0 / p_min)?;

    struct Flags {
        exceed_generative: Option<bool>,
        exceed_hoeffding: bool,
        chernoff_shortfall: Option<bool>,
    }

    let tasks: Vec<(usize, usize)> = (0..n_grid.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();

    let outcomes: Vec<(RunRecord, Flags)> = tasks
        .par_iter()
        .map(|&(cell_idx, rep)| -> Result<(RunRecord, Flags)> {
            let n = n_grid[cell_idx];
            let task_seed = seed::derive2(config.seed, cell_idx as u64, rep as u64);
            let started = Instant::now();

            let mut rng = seed::rng(task_seed, 0x6E);
            let labels = sample_labels(&probs_vec, n, &mut rng);
            let truth = ClusterAssignment::new(labels, k)?;
            let adjacency = sample_conditional(&truth, *p, *q, seed::derive(task_seed, 0xAD))?;

            let mut pc = pipeline_config(config.k_policy, *p, *q, task_seed);
            pc.p_min = Some(p_min);
            let report = run_pipeline(
                PipelineInput::Graph {
                    adjacency: &adjacency,
                    truth: Some(&truth),
                },
                None,
                &pc,
            )?;

            let e_bar = report.e_bar.expect("truth supplied");
            let gap_true = (e_true - report.e_hat).abs();
            let bound = generative_bound(n, k, p_min).ok();
            let radius = hoeffding_envelope * hoeffding_radius(n, k)?;
            let (n_min, _) = truth.count_range();
            let shortfall = chernoff_c2(n, k, p_min)
                .ok()
                .map(|c2| (n_min as f64) < n as f64 * c2 / (2.0 * k as f64));

            let flags = Flags {
                exceed_generative: bound.map(|b| gap_true > b),
                exceed_hoeffding: (e_true - e_bar).abs() > radius,
                chernoff_shortfall: shortfall,
            };
            let record = RunRecord {
                cell: format!("n={n}"),
                replicate: rep,
                seed: task_seed,
                n,
                k: report.k,
                e_bar: Some(e_bar),
                e_hat: Some(report.e_hat),
                e_true: Some(e_true),
                gap: report.gap_bar_hat,
                gap_true: Some(gap_true),
                m_error: report.m_error,
                p_hat: report.p_hat,
                q_hat: report.q_hat,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            };
            Ok((record, flags))
        })
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<RunRecord> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    let mut aggregates = aggregate_runs(&runs);
    for (cell_idx, &n) in n_grid.iter().enumerate() {
        let cell = format!("n={n}");
        let agg = aggregates
            .iter_mut()
            .find(|a| a.cell == cell)
            .expect("every grid cell produced runs");
        let cell_outcomes: Vec<&(RunRecord, Flags)> = outcomes
            .iter()
            .skip(cell_idx * config.replications)
            .take(config.replications)
            .collect();
        let reps = cell_outcomes.len() as f64;

        match generative_bound(n, k, p_min) {
            Ok(bound) => {
                agg.extra.insert("generative_bound".into(), bound);
                agg.extra.insert("bound_vacuous".into(), 0.0);
                let exceed = cell_outcomes
                    .iter()
                    .filter(|(_, f)| f.exceed_generative == Some(true))
                    .count() as f64;
                agg.extra
                    .insert("exceed_generative_bound".into(), exceed / reps);
            }
            Err(_) => {
                agg.extra.insert("bound_vacuous".into(), 1.0);
            }
        }
        let hoeff = cell_outcomes
            .iter()
            .filter(|(_, f)| f.exceed_hoeffding)
            .count() as f64;
        agg.extra.insert("exceed_hoeffding".into(), hoeff / reps);
        if cell_outcomes
            .iter()
            .all(|(_, f)| f.chernoff_shortfall.is_some())
        {
            let short = cell_outcomes
                .iter()
                .filter(|(_, f)| f.chernoff_shortfall == Some(true))
                .count() as f64;
            agg.extra.insert("chernoff_shortfall".into(), short / reps);
        }
        let mut gaps: Vec<f64> = cell_outcomes
            .iter()
            .filter_map(|(r, _)| r.gap_true)
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        for (name, quantile) in [("q50", 0.5), ("q90", 0.9), ("q95", 0.95)] {
            if !gaps.is_empty() {
                let idx = ((gaps.len() as f64 - 1.0) * quantile).round() as usize;
                agg.extra.insert(format!("{name}_gap_true"), gaps[idx]);
            }
        }
    }

    let mut summary = BTreeMap::new();
    summary.insert("e_true".into(), e_true);
    summary.insert("p_min".into(), p_min);
    Ok(SimulationReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        runs,
        aggregates,
        summary,
    })
}

/// Concentration checks on label sampling alone: no graph, no clustering.
pub fn run_concentration(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let Scenario::Concentration { probs, n } = &config.scenario else {
        return Err(Error::InvalidInput(
            "expected the concentration scenario".into(),
        ));
    };
    let probs_vec = ProbabilityVector::new(probs.clone())?;
    let k = probs_vec.k();
    let p_min = probs_vec.min();
    let n = *n;
    let e_true = entropy(&probs_vec);
    let radius = bound_shape(1.0 / p_min)? * hoeffding_radius(n, k)?;
    let c2 = chernoff_c2(n, k, p_min)?;
    let n_min_floor = n as f64 * c2 / (2.0 * k as f64);

    let outcomes: Vec<(RunRecord, bool, bool)> = (0..config.replications)
        .into_par_iter()
        .map(|rep| -> Result<(RunRecord, bool, bool)> {
            let task_seed = seed::derive2(config.seed, 0, rep as u64);
            let started = Instant::now();
            let mut rng = seed::rng(task_seed, 0x6E);
            let labels = sample_labels(&probs_vec, n, &mut rng);
            let truth = ClusterAssignment::new(labels, k)?;
            let e_bar = assignment_entropy(&truth);
            let (n_min, _) = truth.count_range();
            let record = RunRecord {
                cell: format!("n={n}"),
                replicate: rep,
                seed: task_seed,
                n,
                k,
                e_bar: Some(e_bar),
                e_hat: None,
                e_true: Some(e_true),
                gap: None,
                gap_true: Some((e_true - e_bar).abs()),
                m_error: None,
                p_hat: None,
                q_hat: None,
                wall_ms: started.elapsed().as_secs_f64() * 1e3,
            };
            let exceed = (e_true - e_bar).abs() > radius;
            let shortfall = (n_min as f64) < n_min_floor;
            Ok((record, exceed, shortfall))
        })
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<RunRecord> = outcomes.iter().map(|(r, _, _)| r.clone()).collect();
    let mut aggregates = aggregate_runs(&runs);
    let reps = outcomes.len() as f64;
    let agg = &mut aggregates[0];
    agg.extra.insert("hoeffding_threshold".into(), radius);
    agg.extra.insert("chernoff_c2".into(), c2);
    agg.extra.insert("chernoff_floor".into(), n_min_floor);
    agg.extra.insert(
        "exceed_hoeffding".into(),
        outcomes.iter().filter(|(_, e, _)| *e).count() as f64 / reps,
    );
    agg.extra.insert(
        "chernoff_shortfall".into(),
        outcomes.iter().filter(|(_, _, s)| *s).count() as f64 / reps,
    );

    let mut summary = BTreeMap::new();
    summary.insert("e_true".into(), e_true);
    summary.insert("p_min".into(), p_min);
    Ok(SimulationReport {
        format_version: REPORT_FORMAT_VERSION,
        config: config.clone(),
        runs,
        aggregates,
        summary,
    })
}

/// Block-ordered truth from explicit counts.
fn block_truth(counts: &[usize]) -> Result<ClusterAssignment> {
    let mut labels = Vec::new();
    for (block, &count) in counts.iter().enumerate() {
        labels.extend(std::iter::repeat_n(block, count));
    }
    ClusterAssignment::new(labels, counts.len())
}

/// One sampled-graph pipeline run with full bookkeeping.
fn graph_run(
    truth: &ClusterAssignment,
    p: f64,
    q: f64,
    k_policy: KPolicy,
    task_seed: u64,
    cell: String,
    rep: usize,
) -> Result<RunRecord> {
    let started = Instant::now();
    let adjacency = sample_conditional(truth, p, q, seed::derive(task_seed, 0xAD))?;
    let report = run_pipeline(
        PipelineInput::Graph {
            adjacency: &adjacency,
            truth: Some(truth),
        },
        None,
        &pipeline_config(k_policy, p, q, task_seed),
    )?;
    Ok(RunRecord {
        cell,
        replicate: rep,
        seed: task_seed,
        n: report.n,
        k: report.k,
        e_bar: report.e_bar,
        e_hat: Some(report.e_hat),
        e_true: None,
        gap: report.gap_bar_hat,
        gap_true: None,
        m_error: report.m_error,
        p_hat: report.p_hat,
        q_hat: report.q_hat,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Least-squares slope of `ln(gap)` against `ln(n)`; `None` with fewer than
/// two positive points.
fn fit_log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::PqRow;

    fn base_config(scenario: Scenario, replications: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            scenario,
            k_policy: KPolicy::TrueK,
            replications,
            seed,
            out: None,
        }
    }

    #[test]
    fn table1_report_shape() {
        let config = base_config(
            Scenario::Table1 {
                rows: vec![PqRow {
                    label: "clean".into(),
                    p: 1.0,
                    q: 0.0,
                }],
                ratios: vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]],
                sizes: vec![20, 30],
            },
            3,
            7,
        );
        let report = run_table1(&config).unwrap();
        // 1 row x 2 ratios x 2 sizes x 3 replications
        assert_eq!(report.runs.len(), 12);
        assert_eq!(report.aggregates.len(), 4);
        // p = 1, q = 0 recovers exactly
        for agg in &report.aggregates {
            assert_eq!(agg.mean_gap, Some(0.0), "{}", agg.cell);
        }
    }

    #[test]
    fn table1_is_a_pure_function_of_config_and_seed() {
        let config = base_config(
            Scenario::Table1 {
                rows: vec![PqRow {
                    label: "a21".into(),
                    p: 0.96,
                    q: 0.15,
                }],
                ratios: vec![vec![0.5, 0.5]],
                sizes: vec![20],
            },
            2,
            11,
        );
        let a = run_table1(&config).unwrap();
        let b = run_table1(&config).unwrap();
        assert!(a.content_equal(&b));
    }

    #[test]
    fn phase_sweep_orders_gap_by_separation() {
        let config = base_config(
            Scenario::PhaseSweep {
                q: 0.05,
                p_grid: vec![0.15, 0.95],
                ratios: vec![0.2, 0.3, 0.5],
                n: 30,
            },
            5,
            13,
        );
        let report = run_phase_sweep(&config).unwrap();
        let low = report.summary["mean_gap_low_sep"];
        let high = report.summary["mean_gap_high_sep"];
        assert!(
            high < low,
            "high-separation gap {high} should undercut low-separation {low}"
        );
    }

    #[test]
    fn rate_study_slope_and_monotonicity_fields() {
        let config = base_config(
            Scenario::RateStudy {
                p: 0.9,
                q: 0.1,
                k: 2,
                n_grid: vec![16, 32],
            },
            50,
            17,
        );
        let report = run_rate_study(&config).unwrap();
        assert_eq!(report.runs.len(), 100);
        assert!(report.summary.contains_key("positive_cells"));
        for agg in &report.aggregates {
            assert!(agg.mean_m_error_rate.is_some());
        }
    }

    #[test]
    fn rate_study_slope_is_steeply_negative_near_threshold() {
        // weaker separation keeps early cells positive so the fit is defined
        let config = base_config(
            Scenario::RateStudy {
                p: 0.55,
                q: 0.05,
                k: 3,
                n_grid: vec![30, 60],
            },
            50,
            8,
        );
        let report = run_rate_study(&config).unwrap();
        let slope = report.summary.get("slope_log_log");
        assert!(
            matches!(slope, Some(&s) if s <= -0.5),
            "expected a steep negative slope, got {slope:?}"
        );
    }

    #[test]
    fn generative_study_records_exceedances() {
        let config = base_config(
            Scenario::GenerativeStudy {
                p: 0.9,
                q: 0.1,
                probs: vec![0.2, 0.3, 0.5],
                n_grid: vec![60],
            },
            10,
            19,
        );
        let report = run_generative_study(&config).unwrap();
        let agg = &report.aggregates[0];
        assert!(agg.extra.contains_key("exceed_hoeffding"));
        assert!(agg.extra.contains_key("bound_vacuous"));
        assert!((report.summary["e_true"] - 1.029_653_014_064_573_7).abs() < 1e-12);
    }

    #[test]
    fn concentration_exceedances_are_rare() {
        let config = base_config(
            Scenario::Concentration {
                probs: vec![0.2, 0.3, 0.5],
                n: 100,
            },
            200,
            23,
        );
        let report = run_concentration(&config).unwrap();
        let agg = &report.aggregates[0];
        assert!(agg.extra["exceed_hoeffding"] <= 0.02);
        assert!(agg.extra["chernoff_shortfall"] <= 0.02);
    }

    #[test]
    fn slope_fit_reference() {
        // y = 8/x exactly: slope -1
        let points: Vec<(f64, f64)> = [30.0f64, 60.0, 120.0]
            .iter()
            .map(|&n| (n, 8.0 / n))
            .collect();
        let slope = fit_log_log_slope(&points).unwrap();
        assert!((slope + 1.0).abs() < 1e-12);
        assert_eq!(fit_log_log_slope(&points[..1]), None);
    }
}
