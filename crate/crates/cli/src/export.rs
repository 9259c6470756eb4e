//! Per-evaluation aggregates across trials, ready for plotting.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::runner::ResultRow;
use crate::stats::summarize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub optimizer: String,
    pub dimension: usize,
    pub index: u64,
    pub trials: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub p02: f64,
    pub p98: f64,
}

/// Reads a rows file; malformed records report their line number.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: ResultRow = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Mean, median, std and 2nd/98th percentiles of the metric at every index,
/// grouped by optimizer and dimension.
pub fn curves(rows: &[ResultRow]) -> Vec<CurveRow> {
    let mut groups: BTreeMap<(String, usize, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.optimizer.clone(), r.dimension, r.index))
            .or_default()
            .push(r.metric);
    }
    groups
        .into_iter()
        .map(|((optimizer, dimension, index), values)| {
            let s = summarize(&values);
            CurveRow {
                optimizer,
                dimension,
                index,
                trials: s.n,
                mean: s.mean,
                median: s.median,
                std: s.std,
                p02: s.p02,
                p98: s.p98,
            }
        })
        .collect()
}

pub fn export_curves(rows_path: &Path, out: &Path) -> Result<Vec<CurveRow>, CliError> {
    let rows = read_rows(rows_path)?;
    let curves = curves(&rows);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(out)?;
    for c in &curves {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(curves)
}
