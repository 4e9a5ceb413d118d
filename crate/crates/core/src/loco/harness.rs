use super::data::{prepare_fold, Classifier, InputSource, LocoData, Widths};
use super::folds::{make_loco_folds, FoldSpec};
use super::metrics::{class_names, evaluate, macro_f1, ConfusionMatrix, EvalReport};
use crate::dataset::features_io::load_features;
use crate::dataset::{load_embeddings, load_labels, load_manifest, write_atomic, WindowKey};
use crate::error::{Error, Result};
use crate::model::{predict, train, EpochLog, Params, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Input files of a run. Relative paths resolve against the run spec's
/// directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub labels: PathBuf,
    pub videos: PathBuf,
    pub birds: PathBuf,
    #[serde(default)]
    pub features: Option<PathBuf>,
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
}

impl DataPaths {
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.labels);
        fix(&mut self.videos);
        fix(&mut self.birds);
        self.features.as_mut().map(fix);
        self.embeddings.as_mut().map(fix);
    }

    pub fn load(&self) -> Result<LocoData> {
        let labels = load_labels(&self.labels)?;
        let manifest = load_manifest(&self.videos, &self.birds)?;
        let features = self.features.as_deref().map(load_features).transpose()?;
        let embeddings = self
            .embeddings
            .as_deref()
            .map(load_embeddings)
            .transpose()?;
        LocoData::new(labels, manifest, features, embeddings)
    }
}

/// One LOCO experiment, as read from a TOML run spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    /// Overrides `train.seed`.
    pub seed: u64,
    pub input: InputSource,
    pub classifier: Classifier,
    pub k: usize,
    pub allow_any_cage_count: bool,
    pub data: DataPaths,
    pub model: Widths,
    pub train: TrainConfig,
    pub toggles: Vec<String>,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            name: "run".into(),
            seed: 0,
            input: InputSource::Features,
            classifier: Classifier::Mlp,
            k: 32,
            allow_any_cage_count: false,
            data: DataPaths::default(),
            model: Widths::default(),
            train: TrainConfig::default(),
            toggles: Vec::new(),
        }
    }
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut spec: RunSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("run spec: {e}")))?;
        spec.train.seed = spec.seed;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec = RunSpec::from_toml(&text)?;
        spec.data.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub key: WindowKey,
    pub fold_id: usize,
    pub truth: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: FoldSpec,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
    pub class_weights: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub macro_f1: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub params: Params,
    #[serde(skip)]
    pub predictions: Vec<WindowPrediction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub spec: RunSpec,
    pub folds: Vec<FoldResult>,
    pub report: EvalReport,
}

fn fold_seed(seed: u64, fold_id: usize) -> u64 {
    seed ^ (fold_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains on the fold's training cages, keeps the epoch with the lowest
/// validation loss and scores the test cage once.
pub fn train_fold(data: &LocoData, fold: &FoldSpec, spec: &RunSpec) -> Result<FoldResult> {
    let fd = prepare_fold(data, fold, spec.input, spec.classifier, spec.k, &spec.model)?;
    let tc = TrainConfig {
        seed: fold_seed(spec.seed, fold.fold_id),
        ..spec.train.clone()
    };
    let out = train(&fd.model, &tc, &fd.train, &fd.val)?;
    let pred = predict(&out.params, &fd.test)?;
    let truth: Vec<usize> = fd.test.iter().map(|e| e.label).collect();
    let confusion = ConfusionMatrix::from_predictions(&truth, &pred, fd.model.n_classes);
    let predictions = fd
        .test_keys
        .iter()
        .zip(truth.iter().zip(&pred))
        .map(|(k, (&t, &p))| WindowPrediction {
            key: k.clone(),
            fold_id: fold.fold_id,
            truth: t,
            predicted: p,
        })
        .collect();
    Ok(FoldResult {
        fold: fold.clone(),
        n_train: fd.train.len(),
        n_val: fd.val.len(),
        n_test: fd.test.len(),
        best_epoch: out.best_epoch,
        history: out.history,
        class_weights: out.class_weights,
        macro_f1: macro_f1(&confusion),
        confusion,
        warnings: out.warnings,
        params: out.params,
        predictions,
    })
}

/// Full leave-one-cage-out run; folds train concurrently.
pub fn run_loco(data: &LocoData, spec: &RunSpec) -> Result<RunResult> {
    let folds = make_loco_folds(&data.manifest, spec.allow_any_cage_count)?;
    for f in &folds {
        f.assert_disjoint()?;
    }
    let results = folds
        .par_iter()
        .map(|f| train_fold(data, f, spec))
        .collect::<Result<Vec<_>>>()?;
    let matrices: Vec<ConfusionMatrix> = results.iter().map(|r| r.confusion.clone()).collect();
    Ok(RunResult {
        spec: spec.clone(),
        report: evaluate(&matrices)?,
        folds: results,
    })
}

impl RunResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run result serialises") + "\n"
    }

    pub fn predictions_csv(&self) -> String {
        let names = class_names();
        let mut out = String::from("video_id,bird_id,start_frame,fold,truth,predicted,correct\n");
        let mut all: Vec<&WindowPrediction> =
            self.folds.iter().flat_map(|f| &f.predictions).collect();
        all.sort_by(|a, b| a.key.cmp(&b.key));
        for p in all {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.key.video_id,
                p.key.bird_id,
                p.key.start_frame,
                p.fold_id,
                names[p.truth],
                names[p.predicted],
                u8::from(p.truth == p.predicted)
            )
            .unwrap();
        }
        out
    }

    /// Writes `report.json`, `confusion.csv`, `predictions.csv` and one
    /// JSON-lines training log per fold.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("report.json"), self.to_json().as_bytes())?;
        write_atomic(
            &dir.join("confusion.csv"),
            self.report.confusion.to_csv(&class_names()).as_bytes(),
        )?;
        write_atomic(
            &dir.join("predictions.csv"),
            self.predictions_csv().as_bytes(),
        )?;
        for f in &self.folds {
            crate::model::write_run_log(
                &dir.join(format!("fold{}.log.jsonl", f.fold.fold_id)),
                &f.history,
            )?;
        }
        Ok(())
    }
}

/// Reads a `predictions.csv` written by [`RunResult::write`].
pub fn parse_predictions_csv(text: &str, path: &Path) -> Result<Vec<WindowPrediction>> {
    let names = class_names();
    let class = |s: &str, line: usize| {
        names
            .iter()
            .position(|n| *n == s)
            .ok_or_else(|| Error::parse(path, line, format!("unknown class {s:?}")))
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h))
            if h.trim_end() == "video_id,bird_id,start_frame,fold,truth,predicted,correct" => {}
        _ => return Err(Error::parse(path, 1, "unexpected predictions header")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let f: Vec<&str> = l.trim_end().split(',').collect();
            if f.len() != 7 {
                return Err(Error::parse(
                    path,
                    line,
                    format!("expected 7 fields, found {}", f.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| Error::parse(path, line, format!("{s:?}: {e}")))
            };
            Ok(WindowPrediction {
                key: WindowKey {
                    video_id: f[0].to_string(),
                    bird_id: f[1].parse().map_err(|e| {
                        Error::parse(path, line, format!("bird_id {:?}: {e}", f[1]))
                    })?,
                    start_frame: num(f[2])? as _,
                },
                fold_id: num(f[3])? as usize,
                truth: class(f[4], line)?,
                predicted: class(f[5], line)?,
            })
        })
        .collect()
}

pub fn load_predictions(path: &Path) -> Result<Vec<WindowPrediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions_csv(&text, path)
}
