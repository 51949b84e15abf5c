//! Input text collections: newline-delimited JSON records or plain text.

use std::path::Path;

use serde::Deserialize;
use sse_core::ClusterAssignment;

use crate::CliError;

/// One record of the structured input format.
#[derive(Debug, Deserialize)]
struct InputRecord {
    #[serde(default)]
    id: Option<String>,
    text: String,
    #[serde(default)]
    truth_label: Option<serde_json::Value>,
}

/// A loaded collection, with ground truth when every record carried a label.
#[derive(Debug)]
pub struct LoadedInput {
    /// Record ids (unique; synthesized from position when absent).
    #[allow(dead_code)]
    pub ids: Vec<String>,
    pub texts: Vec<String>,
    pub truth: Option<ClusterAssignment>,
}

/// Reads the input file.
///
/// In plain mode every non-empty line is a text and no truth is available.
/// In record mode each line is `{"id": ..., "text": ..., "truth_label": ...}`;
/// truth labels must be present on all records or none.
pub fn load_input(path: &Path, plain: bool) -> Result<LoadedInput, CliError> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
    if plain {
        let texts: Vec<String> = raw
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect();
        let ids = (0..texts.len()).map(|i| i.to_string()).collect();
        return Ok(LoadedInput {
            ids,
            texts,
            truth: None,
        });
    }

    let mut ids = Vec::new();
    let mut texts = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    for (line_no, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: InputRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Input(format!(
                "{}:{}: bad record: {e}",
                path.display(),
                line_no + 1
            ))
        })?;
        ids.push(record.id.unwrap_or_else(|| texts.len().to_string()));
        texts.push(record.text);
        labels.push(record.truth_label.map(|v| canonical_label(&v)));
    }

    let mut sorted_ids = ids.clone();
    sorted_ids.sort();
    if let Some(dup) = sorted_ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Input(format!("duplicate record id {:?}", dup[0])));
    }

    let with_labels = labels.iter().filter(|l| l.is_some()).count();
    let truth = if with_labels == 0 {
        None
    } else if with_labels == labels.len() {
        Some(truth_from_labels(
            labels.iter().map(|l| l.as_deref().expect("checked")),
        )?)
    } else {
        return Err(CliError::Input(format!(
            "{} of {} records carry truth_label; labels must be on all records or none",
            with_labels,
            labels.len()
        )));
    };

    Ok(LoadedInput { ids, texts, truth })
}

fn canonical_label(value: &serde_json::Value) -> String {
    match value {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn truth_from_labels<'a>(
    labels: impl Iterator<Item = &'a str>,
) -> Result<ClusterAssignment, CliError> {
    let mut seen: Vec<String> = Vec::new();
    let mut indices = Vec::new();
    for label in labels {
        let idx = match seen.iter().position(|s| s == label) {
            Some(i) => i,
            None => {
                seen.push(label.to_owned());
                seen.len() - 1
            }
        };
        indices.push(idx);
    }
    ClusterAssignment::new(indices, seen.len())
        .map_err(|e| CliError::Input(format!("building truth assignment: {e}")))
}
