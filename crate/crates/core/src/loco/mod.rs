//! Leave-one-cage-out cross-validation: folds, per-fold training with
//! validation-loss checkpoint selection, pooled evaluation and ablations.

pub mod ablation;
pub mod data;
pub mod folds;
pub mod harness;
pub mod metrics;

pub use ablation::{parse_toggles, run_ablation_grid, AblationRow, AblationTable, Toggle};
pub use data::{model_config, prepare_fold, Classifier, FoldData, InputSource, LocoData, Widths};
pub use folds::{folds_for_cages, make_loco_folds, FoldSpec, LOCO_CAGES};
pub use harness::{
    load_predictions, parse_predictions_csv, run_loco, train_fold, DataPaths, FoldResult,
    RunResult, RunSpec, WindowPrediction,
};
pub use metrics::{
    class_metrics, class_names, evaluate, macro_f1, round1, sample_sd, write_confusion_csv,
    ClassMetrics, ConfusionMatrix, EvalReport,
};
