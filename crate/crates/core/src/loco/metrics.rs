use crate::dataset::{write_atomic, Category};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Square class-by-class counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(n: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|r| r.len() != n) {
            return Err(Error::shape(
                "confusion",
                "matrix must be square and non-empty",
            ));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn from_predictions(truth: &[usize], pred: &[usize], n: usize) -> Self {
        let mut m = ConfusionMatrix::zeros(n);
        for (&t, &p) in truth.iter().zip(pred) {
            m.counts[t][p] += 1;
        }
        m
    }

    /// Integer counts whose rows follow the given percentages and sum to the
    /// supports exactly (largest-remainder rounding, ties to lower column).
    pub fn from_row_percentages(percent: &[Vec<f64>], supports: &[u64]) -> Result<Self> {
        if percent.len() != supports.len() {
            return Err(Error::shape("confusion", "one support per row"));
        }
        let counts = percent
            .iter()
            .zip(supports)
            .map(|(row, &s)| {
                let total: f64 = row.iter().sum();
                let exact: Vec<f64> = row.iter().map(|p| p / total * s as f64).collect();
                let mut out: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
                let short = s - out.iter().sum::<u64>();
                let mut order: Vec<usize> = (0..row.len()).collect();
                order.sort_by(|&a, &b| {
                    let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
                    rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
                });
                for &c in order.iter().take(short as usize) {
                    out[c] += 1;
                }
                out
            })
            .collect();
        ConfusionMatrix::from_counts(counts)
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes() != self.n_classes() {
            return Err(Error::shape("confusion", "class counts differ"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(())
    }

    /// Row percentages rounded to one decimal (half away from zero).
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|r| {
                let s: u64 = r.iter().sum();
                r.iter()
                    .map(|&v| {
                        if s == 0 {
                            0.0
                        } else {
                            round1(100.0 * v as f64 / s as f64)
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_csv(&self, names: &[&str]) -> String {
        let mut out = String::from("true");
        for n in names {
            write!(out, ",{n}").unwrap();
        }
        out.push('\n');
        for (name, row) in names.iter().zip(&self.counts) {
            out.push_str(name);
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Validation("empty confusion CSV".into()))?;
        let n = header.split(',').count() - 1;
        let counts = lines
            .enumerate()
            .map(|(i, l)| {
                l.split(',')
                    .skip(1)
                    .map(|v| {
                        v.trim().parse::<u64>().map_err(|e| {
                            Error::Validation(format!("confusion CSV row {}: {e}", i + 2))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if counts.len() != n {
            return Err(Error::Validation(format!(
                "confusion CSV has {} rows for {n} columns",
                counts.len()
            )));
        }
        ConfusionMatrix::from_counts(counts)
    }
}

/// Percent value rounded half away from zero to one decimal. A tiny bias
/// absorbs binary representation error (0.935 * 100 = 93.49999...).
pub fn round1(v: f64) -> f64 {
    (v * 10.0 + v.signum() * 1e-9).round() / 10.0
}

pub fn class_names() -> Vec<&'static str> {
    Category::TRAINED.iter().map(|c| c.name()).collect()
}

pub fn write_confusion_csv(path: &Path, m: &ConfusionMatrix) -> Result<()> {
    write_atomic(path, m.to_csv(&class_names()).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Fold-summed matrix.
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    /// Macro-F1 of the fold-summed matrix.
    pub macro_f1: f64,
    pub fold_macro_f1: Vec<f64>,
    pub fold_mean: f64,
    /// Sample SD of the per-fold scores; `None` with fewer than two folds.
    pub fold_sd: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_metrics(m: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..m.n_classes())
        .map(|c| {
            let tp = m.counts[c][c];
            let precision = ratio(tp, m.predicted(c));
            let recall = ratio(tp, m.support(c));
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support: m.support(c),
            }
        })
        .collect()
}

pub fn macro_f1(m: &ConfusionMatrix) -> f64 {
    let pc = class_metrics(m);
    pc.iter().map(|c| c.f1).sum::<f64>() / pc.len() as f64
}

pub fn sample_sd(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Some((v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

/// Aggregates per-fold matrices: metrics come from their sum, the spread
/// from per-fold macro-F1.
pub fn evaluate(folds: &[ConfusionMatrix]) -> Result<EvalReport> {
    let first = folds
        .first()
        .ok_or_else(|| Error::Degenerate("no confusion matrices to evaluate".into()))?;
    let mut total = ConfusionMatrix::zeros(first.n_classes());
    for f in folds {
        total.add(f)?;
    }
    if total.total() == 0 {
        return Err(Error::Degenerate("all-zero confusion matrix".into()));
    }
    let fold_macro_f1: Vec<f64> = folds.iter().map(macro_f1).collect();
    let fold_mean = fold_macro_f1.iter().sum::<f64>() / fold_macro_f1.len() as f64;
    Ok(EvalReport {
        per_class: class_metrics(&total),
        macro_f1: macro_f1(&total),
        fold_sd: sample_sd(&fold_macro_f1),
        fold_macro_f1,
        fold_mean,
        confusion: total,
    })
}
