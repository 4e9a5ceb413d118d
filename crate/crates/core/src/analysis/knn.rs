use crate::error::{Error, Result};
use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Cosine distance; a zero vector is at distance 1 from everything.
fn cosine_distance(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    1.0 - dot / (na * nb)
}

/// Index of each row's nearest other row by cosine distance. Ties go to the
/// smallest index.
pub fn nearest_neighbours(x: ArrayView2<f64>) -> Result<Vec<usize>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::shape("knn", "need at least 2 windows"));
    }
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in (0..n).filter(|&j| j != i) {
                let d = cosine_distance(&rows[i], norms[i], &rows[j], norms[j]);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnnReport {
    pub neighbours: Vec<usize>,
    /// query label → neighbour label → fraction of that label's windows.
    pub distribution: BTreeMap<String, BTreeMap<String, f64>>,
    /// Per query label, fraction whose neighbour shares the label.
    pub self_fraction: BTreeMap<String, f64>,
}

/// 1-NN probe. `labels` names each window; `neighbour_labels` is what gets
/// reported for the neighbour (often the same vector, or a coarser grouping).
pub fn knn_probe(
    x: ArrayView2<f64>,
    labels: &[String],
    neighbour_labels: &[String],
) -> Result<KnnReport> {
    if labels.len() != x.nrows() || neighbour_labels.len() != x.nrows() {
        return Err(Error::shape("knn", "one label per window"));
    }
    let neighbours = nearest_neighbours(x)?;
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    let mut same: BTreeMap<String, usize> = BTreeMap::new();
    for (i, &j) in neighbours.iter().enumerate() {
        *counts
            .entry(labels[i].clone())
            .or_default()
            .entry(neighbour_labels[j].clone())
            .or_default() += 1;
        *totals.entry(labels[i].clone()).or_default() += 1;
        *same.entry(labels[i].clone()).or_default() += usize::from(labels[i] == labels[j]);
    }
    let distribution = counts
        .into_iter()
        .map(|(l, row)| {
            let t = totals[&l] as f64;
            (l, row.into_iter().map(|(k, c)| (k, c as f64 / t)).collect())
        })
        .collect();
    let self_fraction = totals
        .iter()
        .map(|(l, &t)| (l.clone(), same[l] as f64 / t as f64))
        .collect();
    Ok(KnnReport {
        neighbours,
        distribution,
        self_fraction,
    })
}
