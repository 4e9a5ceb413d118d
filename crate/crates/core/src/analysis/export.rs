use super::knn::KnnReport;
use crate::dataset::{write_atomic, WindowKey};
use crate::error::{Error, Result};
use crate::features::{column_names, WindowFeatureVector};
use crate::loco::{class_names, ConfusionMatrix, WindowPrediction};
use ndarray::Array2;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct CkaTable {
    pub names: Vec<String>,
    pub matrix: Array2<f64>,
}

impl CkaTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("backbone,{}\n", self.names.join(","));
        for (i, n) in self.names.iter().enumerate() {
            let row: Vec<String> = self.matrix.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{n},{}", row.join(",")).unwrap();
        }
        out
    }
}

pub fn write_cka_csv(path: &Path, table: &CkaTable) -> Result<()> {
    write_atomic(path, table.to_csv().as_bytes())
}

pub fn knn_csv(report: &KnnReport) -> String {
    let mut out = String::from("fine_label,neighbour_label,fraction\n");
    for (label, row) in &report.distribution {
        for (nl, f) in row {
            writeln!(out, "{label},{nl},{f}").unwrap();
        }
    }
    out
}

/// Row-normalised percentages with one decimal, in the layout of
/// [`ConfusionMatrix::to_csv`].
pub fn confusion_percent_csv(m: &ConfusionMatrix) -> String {
    let names = class_names();
    let mut out = format!("true,{}\n", names.join(","));
    for (name, row) in names.iter().zip(m.row_percentages()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.1}")).collect();
        writeln!(out, "{name},{}", cells.join(",")).unwrap();
    }
    out
}

/// Raw per-window embeddings for external projection.
pub fn embeddings_csv(keys: &[WindowKey], labels: &[String], x: &Array2<f64>) -> Result<String> {
    if keys.len() != x.nrows() || labels.len() != x.nrows() {
        return Err(Error::shape(
            "embeddings export",
            "one key and label per row",
        ));
    }
    let mut out = String::from("video_id,bird_id,start_frame,label");
    for c in 0..x.ncols() {
        write!(out, ",e{c}").unwrap();
    }
    out.push('\n');
    for ((k, l), row) in keys.iter().zip(labels).zip(x.rows()) {
        write!(out, "{},{},{},{l}", k.video_id, k.bird_id, k.start_frame).unwrap();
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Per-window prediction correctness next to a distance summary taken from
/// the features table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceRow {
    pub key: WindowKey,
    pub truth: usize,
    pub correct: bool,
    pub distance: f64,
}

/// Joins predictions with feature column `column` (for instance
/// `f15_mean`, the mean distance to the nearest other bird). Windows whose
/// value is missing are dropped.
pub fn distance_accuracy_rows(
    predictions: &[WindowPrediction],
    features: &[WindowFeatureVector],
    column: &str,
) -> Result<Vec<DistanceRow>> {
    let col = column_names()
        .iter()
        .position(|c| c == column)
        .ok_or_else(|| Error::Config(format!("unknown feature column {column:?}")))?;
    let by_key: BTreeMap<&WindowKey, f64> =
        features.iter().map(|f| (&f.key, f.values[col])).collect();
    Ok(predictions
        .iter()
        .filter_map(|p| {
            let d = *by_key.get(&p.key)?;
            d.is_finite().then(|| DistanceRow {
                key: p.key.clone(),
                truth: p.truth,
                correct: p.truth == p.predicted,
                distance: d,
            })
        })
        .collect())
}
