use super::layers::softmax;
use crate::error::{Error, Result};
use ndarray::Array1;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeightMode {
    /// `w_c ∝ 1/sqrt(n_c)`, rescaled to mean 1.
    InvSqrt,
    None,
}

/// Class weights from training-split counts. A class with no examples is
/// weighted as if it had one, and a warning is returned for it.
pub fn class_weights(counts: &[usize], mode: ClassWeightMode) -> (Vec<f64>, Vec<String>) {
    match mode {
        ClassWeightMode::None => (vec![1.0; counts.len()], Vec::new()),
        ClassWeightMode::InvSqrt => {
            let mut warnings = Vec::new();
            let raw: Vec<f64> = counts
                .iter()
                .enumerate()
                .map(|(c, &n)| {
                    if n == 0 {
                        warnings.push(format!(
                            "class {c} absent from training split; weight uses count 1"
                        ));
                    }
                    1.0 / (n.max(1) as f64).sqrt()
                })
                .collect();
            let mean = raw.iter().sum::<f64>() / raw.len() as f64;
            (raw.iter().map(|w| w / mean).collect(), warnings)
        }
    }
}

pub fn smoothed_targets(y: usize, n_classes: usize, alpha: f64) -> Array1<f64> {
    Array1::from_shape_fn(
        n_classes,
        |c| if c == y { 1.0 - alpha } else { 0.0 } + alpha / n_classes as f64,
    )
}

/// Weighted, label-smoothed cross-entropy of a batch, normalised by the sum
/// of the weights of the true classes. Returns the loss and the gradient
/// with respect to each sample's logits.
pub fn weighted_loss(
    logits: &[Array1<f64>],
    labels: &[usize],
    weights: &[f64],
    alpha: f64,
) -> Result<(f64, Vec<Array1<f64>>)> {
    if logits.len() != labels.len() || logits.is_empty() {
        return Err(Error::shape(
            "loss",
            "need one label per logit vector and a non-empty batch",
        ));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "label smoothing {alpha} outside [0, 1)"
        )));
    }
    let mut total_w = 0.0;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(logits.len());
    for (z, &y) in logits.iter().zip(labels) {
        let c = z.len();
        if y >= c || weights.len() != c {
            return Err(Error::shape(
                "loss",
                format!("label {y} or {} weights for {c} classes", weights.len()),
            ));
        }
        let t = smoothed_targets(y, c, alpha);
        let p = softmax(z);
        let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + z.mapv(|v| (v - m).exp()).sum().ln();
        let ce: f64 = t.iter().zip(z).map(|(ti, zi)| -ti * (zi - lse)).sum();
        let w = weights[y];
        loss += w * ce;
        total_w += w;
        grads.push((p - t) * w);
    }
    for g in &mut grads {
        *g /= total_w;
    }
    Ok((loss / total_w, grads))
}
