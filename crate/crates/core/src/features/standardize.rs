//! Per-dimension z-scoring fitted on training rows only.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    fitted: Option<FittedStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedStats {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 marks a pass-through dimension.
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn new() -> Self {
        Standardizer::default()
    }

    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Degenerate("cannot fit a standardizer on zero rows".into()))?;
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape("standardizer", "rows have differing lengths"));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer {
            fitted: Some(FittedStats { mean, sd }),
        })
    }

    pub fn stats(&self) -> Option<&FittedStats> {
        self.fitted.as_ref()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let st = self
            .fitted
            .as_ref()
            .ok_or_else(|| Error::Config("standardizer applied before fitting".into()))?;
        if row.len() != st.mean.len() {
            return Err(Error::shape(
                "standardizer",
                format!("expected {} values, got {}", st.mean.len(), row.len()),
            ));
        }
        Ok(row
            .iter()
            .zip(st.mean.iter().zip(&st.sd))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { v })
            .collect())
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}
