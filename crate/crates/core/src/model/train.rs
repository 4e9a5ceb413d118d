use super::loss::{class_weights, weighted_loss, ClassWeightMode};
use super::net::{backward, forward, Input, ModelConfig, Params};
use super::optim::{adamw_step, AdamState, AdamWConfig};
use crate::dataset::write_atomic;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Samples per gradient partial; partials are summed in a fixed order so
/// results do not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub label_smoothing: f64,
    pub class_weights: ClassWeightMode,
    pub optimizer: AdamWConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 64,
            label_smoothing: 0.1,
            class_weights: ClassWeightMode::InvSqrt,
            optimizer: AdamWConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::Config(format!(
                "label_smoothing {} outside [0, 1)",
                self.label_smoothing
            )));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Input,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the selected epoch.
    pub params: Params,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
    pub class_weights: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn class_counts(examples: &[Example], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for e in examples {
        counts[e.label] += 1;
    }
    counts
}

/// Loss and summed parameter gradient of one batch.
fn batch_gradient(
    params: &Params,
    batch: &[&Example],
    weights: &[f64],
    alpha: f64,
) -> Result<(f64, Params)> {
    let outs = batch
        .par_iter()
        .map(|e| forward(params, &e.input))
        .collect::<Result<Vec<_>>>()?;
    let logits: Vec<_> = outs.iter().map(|o| o.0.clone()).collect();
    let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
    let (loss, dlogits) = weighted_loss(&logits, &labels, weights, alpha)?;
    let idx: Vec<usize> = (0..batch.len()).collect();
    let partials: Vec<Params> = idx
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut acc = backward(params, &outs[chunk[0]].1, &dlogits[chunk[0]]);
            for &i in &chunk[1..] {
                acc.add_scaled(&backward(params, &outs[i].1, &dlogits[i]), 1.0);
            }
            acc
        })
        .collect();
    let mut grad = partials[0].clone();
    for p in &partials[1..] {
        grad.add_scaled(p, 1.0);
    }
    Ok((loss, grad))
}

/// Weighted smoothed loss over a whole split.
pub fn evaluate_loss(
    params: &Params,
    examples: &[Example],
    weights: &[f64],
    alpha: f64,
) -> Result<f64> {
    let logits = examples
        .par_iter()
        .map(|e| forward(params, &e.input).map(|o| o.0))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    Ok(weighted_loss(&logits, &labels, weights, alpha)?.0)
}

/// Arg-max class of each example (ties to the lower class index).
pub fn predict(params: &Params, examples: &[Example]) -> Result<Vec<usize>> {
    examples
        .par_iter()
        .map(|e| {
            let (z, _) = forward(params, &e.input)?;
            let mut best = 0;
            for c in 1..z.len() {
                if z[c] > z[best] {
                    best = c;
                }
            }
            Ok(best)
        })
        .collect()
}

/// Trains from a seeded initialisation, evaluating the validation loss at
/// the end of every epoch and keeping the epoch with the lowest one (the
/// earlier epoch on ties). Without validation data the last epoch is kept.
pub fn train(
    model: &ModelConfig,
    cfg: &TrainConfig,
    train: &[Example],
    val: &[Example],
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Degenerate("empty training split".into()));
    }
    let n_classes = model.n_classes;
    if let Some(e) = train.iter().chain(val).find(|e| e.label >= n_classes) {
        return Err(Error::Validation(format!(
            "label {} outside {n_classes} classes",
            e.label
        )));
    }
    let (weights, warnings) = class_weights(&class_counts(train, n_classes), cfg.class_weights);
    for w in &warnings {
        log::warn!("{w}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = Params::init(model, &mut rng)?;
    let mut state = AdamState::new(&params);
    let alpha = cfg.label_smoothing;
    let sample_w = |i: usize| weights[train[i].label];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Params)> = None;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut w_sum) = (0.0, 0.0);
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train[i]).collect();
            let (loss, grad) = batch_gradient(&params, &batch, &weights, alpha)?;
            adamw_step(&mut params, &grad, &mut state, &cfg.optimizer)?;
            let bw: f64 = idx.iter().map(|&i| sample_w(i)).sum();
            loss_sum += loss * bw;
            w_sum += bw;
        }
        let val_loss = if val.is_empty() {
            None
        } else {
            Some(evaluate_loss(&params, val, &weights, alpha)?)
        };
        history.push(EpochLog {
            epoch,
            train_loss: loss_sum / w_sum,
            val_loss,
        });
        log::debug!(
            "epoch {epoch}: train {:.6} val {:?}",
            loss_sum / w_sum,
            val_loss
        );
        let score = val_loss.unwrap_or(f64::NEG_INFINITY);
        if best
            .as_ref()
            .is_none_or(|b| score < b.0 || val_loss.is_none())
        {
            best = Some((score, epoch, params.clone()));
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        best_epoch,
        history,
        class_weights: weights,
        warnings,
    })
}

/// One JSON object per epoch.
pub fn run_log_lines(history: &[EpochLog]) -> String {
    history
        .iter()
        .map(|e| serde_json::to_string(e).expect("epoch log serialises") + "\n")
        .collect()
}

pub fn write_run_log(path: &Path, history: &[EpochLog]) -> Result<()> {
    write_atomic(path, run_log_lines(history).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;
    use ndarray::Array1;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres = [[2.0, 0.0], [-1.0, 1.7], [-1.0, -1.7]];
        (0..n)
            .map(|i| {
                let c = i % 3;
                let v = Array1::from_shape_fn(2, |d| centres[c][d] + rng.gen_range(-0.3..0.3));
                Example {
                    input: Input::vector(v),
                    label: c,
                }
            })
            .collect()
    }

    fn mlp() -> ModelConfig {
        ModelConfig {
            variant: Variant::Mlp,
            d_in: 2,
            h_mlp: 16,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn separable_loss_drops_below_a_tenth() {
        let data = blobs(300, 1);
        let cfg = TrainConfig {
            batch_size: 8,
            label_smoothing: 0.0,
            class_weights: ClassWeightMode::None,
            optimizer: AdamWConfig {
                lr: 1e-2,
                ..AdamWConfig::default()
            },
            ..TrainConfig::default()
        };
        let init = Params::init(&mlp(), &mut ChaCha8Rng::seed_from_u64(cfg.seed)).unwrap();
        let before = evaluate_loss(&init, &data, &[1.0; 3], 0.0).unwrap();
        let out = train(&mlp(), &cfg, &data, &[]).unwrap();
        let after = evaluate_loss(&out.params, &data, &[1.0; 3], 0.0).unwrap();
        assert!(after < 0.1 * before, "{before} -> {after}");
        assert_eq!(out.best_epoch, 5);
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = blobs(90, 2);
        let cfg = TrainConfig {
            batch_size: 16,
            ..TrainConfig::default()
        };
        let a = train(&mlp(), &cfg, &data, &data[..30]).unwrap();
        let b = train(&mlp(), &cfg, &data, &data[..30]).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
        let c = train(&mlp(), &TrainConfig { seed: 1, ..cfg }, &data, &data[..30]).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn single_epoch_selects_epoch_one() {
        let data = blobs(30, 3);
        let cfg = TrainConfig {
            epochs: 1,
            ..TrainConfig::default()
        };
        let out = train(&mlp(), &cfg, &data, &data).unwrap();
        assert_eq!(out.best_epoch, 1);
        assert_eq!(out.history.len(), 1);
        let log = run_log_lines(&out.history);
        assert!(log.starts_with("{\"epoch\":1,\"train_loss\":"), "{log}");
    }

    #[test]
    fn missing_class_warns_and_trains() {
        let data: Vec<Example> = blobs(60, 4).into_iter().filter(|e| e.label != 2).collect();
        let out = train(&mlp(), &TrainConfig::default(), &data, &[]).unwrap();
        assert_eq!(out.warnings.len(), 1);
    }
}
