//! Window classifiers: an MLP probe on mean-pooled inputs and a 1D-CNN with
//! a GELU bottleneck and gated attention pooling, trained with AdamW on a
//! class-weighted, label-smoothed cross-entropy.

pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod net;
pub mod optim;
pub mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use layers::adaptive_avg_pool;
pub use loss::{class_weights, smoothed_targets, weighted_loss, ClassWeightMode};
pub use net::{backward, forward, Body, Cache, Input, ModelConfig, Params, Variant};
pub use optim::{adamw_step, AdamState, AdamWConfig};
pub use train::{
    class_counts, evaluate_loss, predict, run_log_lines, train, write_run_log, EpochLog, Example,
    TrainConfig, TrainOutcome,
};
