//! Persistent simulation reports: newline-delimited records, a human-readable
//! summary, and a flat CSV export for the ratio-by-size grid scenario.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::ExperimentConfig;

/// Format version stamped into every persisted report.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// One pipeline run inside a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Grid-cell key, e.g. `a21|0.2,0.3,0.5|n=30`.
    pub cell: String,
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub e_bar: Option<f64>,
    pub e_hat: Option<f64>,
    pub e_true: Option<f64>,
    /// `|e_bar - e_hat|`.
    pub gap: Option<f64>,
    /// `|e_true - e_hat|` (or `|e_true - e_bar|` for label-only studies).
    pub gap_true: Option<f64>,
    pub m_error: Option<u64>,
    pub p_hat: Option<f64>,
    pub q_hat: Option<f64>,
    /// Wall time of this run; excluded from content equality.
    pub wall_ms: f64,
}

/// Per-cell aggregate statistics, recomputable from the runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub cell: String,
    pub runs: usize,
    pub mean_gap: Option<f64>,
    pub se_gap: Option<f64>,
    pub mean_gap_true: Option<f64>,
    /// Mean of `m_error / n`.
    pub mean_m_error_rate: Option<f64>,
    pub mean_p_hat: Option<f64>,
    pub mean_q_hat: Option<f64>,
    /// Scenario-specific per-cell statistics (exceedance fractions, bounds, quantiles).
    pub extra: BTreeMap<String, f64>,
}

/// A full study: configuration echo, per-run records, aggregates, and
/// scenario-level summary statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub aggregates: Vec<CellAggregate>,
    pub summary: BTreeMap<String, f64>,
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn se_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    if values.len() == 1 {
        return Some(0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
    Some((var / values.len() as f64).sqrt())
}

/// Aggregates runs cell by cell, preserving first-appearance cell order.
pub fn aggregate_runs(runs: &[RunRecord]) -> Vec<CellAggregate> {
    let mut order: Vec<&str> = Vec::new();
    for run in runs {
        if !order.contains(&run.cell.as_str()) {
            order.push(&run.cell);
        }
    }
    order
        .into_iter()
        .map(|cell| {
            let cell_runs: Vec<&RunRecord> = runs.iter().filter(|r| r.cell == cell).collect();
            let gaps: Vec<f64> = cell_runs.iter().filter_map(|r| r.gap).collect();
            let gap_trues: Vec<f64> = cell_runs.iter().filter_map(|r| r.gap_true).collect();
            let m_rates: Vec<f64> = cell_runs
                .iter()
                .filter_map(|r| r.m_error.map(|m| m as f64 / r.n as f64))
                .collect();
            let p_hats: Vec<f64> = cell_runs.iter().filter_map(|r| r.p_hat).collect();
            let q_hats: Vec<f64> = cell_runs.iter().filter_map(|r| r.q_hat).collect();
            CellAggregate {
                cell: cell.to_owned(),
                runs: cell_runs.len(),
                mean_gap: mean_of(&gaps),
                se_gap: se_of(&gaps),
                mean_gap_true: mean_of(&gap_trues),
                mean_m_error_rate: mean_of(&m_rates),
                mean_p_hat: mean_of(&p_hats),
                mean_q_hat: mean_of(&q_hats),
                extra: BTreeMap::new(),
            }
        })
        .collect()
}

impl SimulationReport {
    /// Content equality modulo wall-clock fields: reports are otherwise a
    /// pure function of `(config, seed)`.
    pub fn content_equal(&self, other: &SimulationReport) -> bool {
        if self.format_version != other.format_version
            || self.aggregates != other.aggregates
            || self.summary != other.summary
            || self.runs.len() != other.runs.len()
        {
            return false;
        }
        self.runs.iter().zip(&other.runs).all(|(a, b)| {
            let mut b_clone = b.clone();
            b_clone.wall_ms = a.wall_ms;
            *a == b_clone
        })
    }

    /// Re-derives the per-cell aggregates from the stored runs (the stored
    /// `extra` maps are scenario-computed and carried over unchanged).
    pub fn recompute_aggregates(&self) -> Vec<CellAggregate> {
        let mut recomputed = aggregate_runs(&self.runs);
        for agg in &mut recomputed {
            if let Some(stored) = self.aggregates.iter().find(|a| a.cell == agg.cell) {
                agg.extra = stored.extra.clone();
            }
        }
        recomputed
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine {
    Header {
        format_version: u32,
        config: ExperimentConfig,
    },
    Run(RunRecord),
    Aggregate(CellAggregate),
    Summary {
        values: BTreeMap<String, f64>,
    },
}

/// Writes the report as newline-delimited records with a stable field order.
pub fn persist_report(report: &SimulationReport, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path.as_ref())?;
    let mut write_line = |line: &ReportLine| -> Result<()> {
        let serialized = serde_json::to_string(line)?;
        writeln!(file, "{serialized}")?;
        Ok(())
    };
    write_line(&ReportLine::Header {
        format_version: report.format_version,
        config: report.config.clone(),
    })?;
    for run in &report.runs {
        write_line(&ReportLine::Run(run.clone()))?;
    }
    for agg in &report.aggregates {
        write_line(&ReportLine::Aggregate(agg.clone()))?;
    }
    write_line(&ReportLine::Summary {
        values: report.summary.clone(),
    })?;
    Ok(())
}

/// Loads a persisted report, rejecting unknown format versions explicitly.
pub fn load_report(path: impl AsRef<Path>) -> Result<SimulationReport> {
    let reader = BufReader::new(std::fs::File::open(path.as_ref())?);
    let mut config: Option<ExperimentConfig> = None;
    let mut format_version = 0u32;
    let mut runs = Vec::new();
    let mut aggregates = Vec::new();
    let mut summary = BTreeMap::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ReportLine>(&line)? {
            ReportLine::Header {
                format_version: v,
                config: c,
            } => {
                if v != REPORT_FORMAT_VERSION {
                    return Err(Error::ReportVersion {
                        found: v,
                        expected: REPORT_FORMAT_VERSION,
                    });
                }
                format_version = v;
                config = Some(c);
            }
            ReportLine::Run(run) => runs.push(run),
            ReportLine::Aggregate(agg) => aggregates.push(agg),
            ReportLine::Summary { values } => summary = values,
        }
    }
    let config =
        config.ok_or_else(|| Error::InvalidInput("report file has no header line".into()))?;
    Ok(SimulationReport {
        format_version,
        config,
        runs,
        aggregates,
        summary,
    })
}

/// Writes the human-readable side document.
pub fn write_summary(report: &SimulationReport, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::fs::File::create(path.as_ref())?;
    writeln!(file, "scenario: {}", report.config.scenario.name())?;
    writeln!(
        file,
        "replications: {}  seed: {}",
        report.config.replications, report.config.seed
    )?;
    writeln!(file, "runs: {}", report.runs.len())?;
    writeln!(file)?;
    writeln!(
        file,
        "{:<40} {:>6} {:>12} {:>12} {:>12}",
        "cell", "runs", "mean_gap", "se_gap", "m_err_rate"
    )?;
    for agg in &report.aggregates {
        writeln!(
            file,
            "{:<40} {:>6} {:>12} {:>12} {:>12}",
            agg.cell,
            agg.runs,
            agg.mean_gap.map_or("-".into(), |v| format!("{v:.6}")),
            agg.se_gap.map_or("-".into(), |v| format!("{v:.6}")),
            agg.mean_m_error_rate
                .map_or("-".into(), |v| format!("{v:.6}")),
        )?;
        for (key, value) in &agg.extra {
            writeln!(file, "    {key} = {value:.6}")?;
        }
    }
    if !report.summary.is_empty() {
        writeln!(file)?;
        for (key, value) in &report.summary {
            writeln!(file, "summary {key} = {value:.6}")?;
        }
    }
    Ok(())
}

/// Flat CSV export of the ratio-by-size grid: one row per parameter row,
/// one column per (ratio, size) cell, then the separation columns.
pub fn export_grid_csv(report: &SimulationReport, path: impl AsRef<Path>) -> Result<()> {
    use crate::sim::Scenario;
    let Scenario::Table1 {
        rows,
        ratios,
        sizes,
    } = &report.config.scenario
    else {
        return Err(Error::InvalidInput(
            "CSV grid export applies to the table1 scenario only".into(),
        ));
    };
    let mut writer = csv::Writer::from_path(path.as_ref())
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    let mut header = vec!["row".to_owned()];
    for ratio in ratios {
        for size in sizes {
            header.push(format!("{}|{}", ratio_key(ratio), size));
        }
    }
    header.extend(["p-q".into(), "p".into(), "q".into()]);
    writer
        .write_record(&header)
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;

    for row in rows {
        let mut record = vec![row.label.clone()];
        for ratio in ratios {
            for size in sizes {
                let cell = table1_cell(&row.label, ratio, *size);
                let value = report
                    .aggregates
                    .iter()
                    .find(|a| a.cell == cell)
                    .and_then(|a| a.mean_gap)
                    .map_or("-".into(), |v| format!("{v:.6}"));
                record.push(value);
            }
        }
        record.push(format!("{:.2}", row.p - row.q));
        record.push(format!("{:.2}", row.p));
        record.push(format!("{:.2}", row.q));
        writer
            .write_record(&record)
            .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(())
}

pub(crate) fn ratio_key(ratio: &[f64]) -> String {
    ratio
        .iter()
        .map(|r| format!("{r}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn table1_cell(label: &str, ratio: &[f64], size: usize) -> String {
    format!("{label}|{}|n={size}", ratio_key(ratio))
}
