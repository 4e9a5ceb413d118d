use super::folds::FoldSpec;
use crate::dataset::{DatasetManifest, EmbeddingBundle, LabelWindow, WindowKey};
use crate::error::{Error, Result};
use crate::features::{FeatureImputer, Standardizer, WindowFeatureVector, VECTOR_LEN};
use crate::model::{adaptive_avg_pool, Example, Input, ModelConfig, Variant};
use ndarray::{concatenate, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Features,
    Embeddings,
    /// Embeddings plus the handcrafted descriptor.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Mlp,
    Cnn,
}

/// Architecture widths that are not derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Widths {
    pub h_bottleneck: usize,
    pub h_conv: usize,
    pub kernel: usize,
    pub h_attention: usize,
    pub h_mlp: usize,
}

impl Default for Widths {
    fn default() -> Self {
        let d = ModelConfig::default();
        Widths {
            h_bottleneck: d.h_bottleneck,
            h_conv: d.h_conv,
            kernel: d.kernel,
            h_attention: d.h_attention,
            h_mlp: d.h_mlp,
        }
    }
}

/// Labelled windows joined with their cage and inputs.
#[derive(Debug, Clone)]
pub struct LocoData {
    /// Trainable windows (social excluded), sorted by key.
    pub windows: Vec<LabelWindow>,
    pub cages: Vec<u32>,
    pub manifest: DatasetManifest,
    features: Option<BTreeMap<WindowKey, WindowFeatureVector>>,
    embeddings: Option<(EmbeddingBundle, BTreeMap<WindowKey, usize>)>,
}

impl LocoData {
    pub fn new(
        labels: Vec<LabelWindow>,
        manifest: DatasetManifest,
        features: Option<Vec<WindowFeatureVector>>,
        embeddings: Option<EmbeddingBundle>,
    ) -> Result<Self> {
        let mut windows: Vec<LabelWindow> = labels.into_iter().filter(|l| !l.excluded).collect();
        windows.sort_by_key(|l| l.key());
        let cages = windows
            .iter()
            .map(|l| {
                manifest.cage_of_video(&l.video_id).ok_or_else(|| {
                    Error::Validation(format!(
                        "video {} of window {} missing from manifest",
                        l.video_id,
                        l.key()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let features = features.map(|f| f.into_iter().map(|w| (w.key.clone(), w)).collect());
        let embeddings = embeddings.map(|b| {
            let idx = b
                .sequences
                .iter()
                .enumerate()
                .map(|(i, s)| (s.key.clone(), i))
                .collect();
            (b, idx)
        });
        Ok(LocoData {
            windows,
            cages,
            manifest,
            features,
            embeddings,
        })
    }

    pub fn has_features(&self) -> bool {
        self.features.is_some()
    }

    pub fn has_embeddings(&self) -> bool {
        self.embeddings.is_some()
    }

    pub fn embedding_dim(&self) -> Option<usize> {
        self.embeddings.as_ref().and_then(|(b, _)| b.dim())
    }

    fn feature_of(&self, key: &WindowKey) -> Result<&WindowFeatureVector> {
        self.features
            .as_ref()
            .ok_or_else(|| {
                Error::Config("run needs handcrafted features but none were given".into())
            })?
            .get(key)
            .ok_or_else(|| Error::Validation(format!("no feature vector for window {key}")))
    }

    fn embedding_of(&self, key: &WindowKey) -> Result<Array2<f64>> {
        let (bundle, idx) = self
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::Config("run needs embeddings but none were given".into()))?;
        let s = &bundle.sequences[*idx
            .get(key)
            .ok_or_else(|| Error::Validation(format!("no embedding for window {key}")))?];
        Ok(Array2::from_shape_fn((s.f_w, s.d), |(t, c)| {
            s.tokens[t * s.d + c] as f64
        }))
    }
}

/// Examples of one fold with everything fitted on its training cages.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub model: ModelConfig,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
    pub test_keys: Vec<WindowKey>,
}

pub fn model_config(
    source: InputSource,
    classifier: Classifier,
    k: usize,
    widths: &Widths,
    data: &LocoData,
) -> Result<ModelConfig> {
    let emb = || {
        data.embedding_dim()
            .ok_or_else(|| Error::Config("embeddings missing or empty".into()))
    };
    let (variant, d_in) = match (source, classifier) {
        (InputSource::Features, Classifier::Mlp) => (Variant::Mlp, VECTOR_LEN),
        (InputSource::Features, Classifier::Cnn) => {
            return Err(Error::Config(
                "the CNN classifier needs embedding sequences".into(),
            ));
        }
        (InputSource::Embeddings, Classifier::Mlp) => (Variant::Mlp, emb()?),
        (InputSource::Embeddings, Classifier::Cnn) => (Variant::Cnn, emb()?),
        (InputSource::Hybrid, Classifier::Mlp) => (Variant::Mlp, emb()? + VECTOR_LEN),
        (InputSource::Hybrid, Classifier::Cnn) => (Variant::Hybrid, emb()?),
    };
    let cfg = ModelConfig {
        variant,
        k,
        d_in,
        h_bottleneck: widths.h_bottleneck,
        h_conv: widths.h_conv,
        kernel: widths.kernel,
        h_attention: widths.h_attention,
        h_mlp: widths.h_mlp,
        n_classes: 3,
        feature_dim: VECTOR_LEN,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn prepare_fold(
    data: &LocoData,
    fold: &FoldSpec,
    source: InputSource,
    classifier: Classifier,
    k: usize,
    widths: &Widths,
) -> Result<FoldData> {
    fold.assert_disjoint()?;
    let model = model_config(source, classifier, k, widths, data)?;
    let train_cages: BTreeSet<u32> = fold.train_cages.iter().copied().collect();
    let split = |want: &dyn Fn(u32) -> bool| -> Vec<usize> {
        (0..data.windows.len())
            .filter(|&i| want(data.cages[i]))
            .collect()
    };
    let train_idx = split(&|c| train_cages.contains(&c));
    let val_idx = split(&|c| c == fold.val_cage);
    let test_idx = split(&|c| c == fold.test_cage);
    if train_idx.is_empty() {
        return Err(Error::Degenerate(format!(
            "fold {} has no training windows",
            fold.fold_id
        )));
    }
    let uses_features = source != InputSource::Embeddings;
    let scaler = if uses_features {
        let train_vecs = train_idx
            .iter()
            .map(|&i| data.feature_of(&data.windows[i].key()))
            .collect::<Result<Vec<_>>>()?;
        let imputer = FeatureImputer::fit(&train_vecs);
        let rows: Vec<Vec<f64>> = train_vecs.iter().map(|w| imputer.apply(w)).collect();
        Some((imputer, Standardizer::fit(&rows)?))
    } else {
        None
    };
    let build = |idx: &[usize]| -> Result<Vec<Example>> {
        idx.iter()
            .map(|&i| {
                let w = &data.windows[i];
                let key = w.key();
                let feats = match &scaler {
                    Some((imp, st)) => Some(Array1::from(
                        st.transform_row(&imp.apply(data.feature_of(&key)?))?,
                    )),
                    None => None,
                };
                let input = match (source, model.variant) {
                    (InputSource::Features, _) => Input::vector(feats.expect("features fitted")),
                    (_, Variant::Mlp) => {
                        let pooled = data
                            .embedding_of(&key)?
                            .mean_axis(Axis(0))
                            .expect("f_w >= 1");
                        match feats {
                            Some(f) => Input::vector(concatenate![Axis(0), pooled, f]),
                            None => Input::vector(pooled),
                        }
                    }
                    (_, _) => Input {
                        tokens: adaptive_avg_pool(data.embedding_of(&key)?.view(), model.k),
                        features: feats,
                    },
                };
                Ok(Example {
                    input,
                    label: w
                        .category
                        .class_index()
                        .expect("social windows were filtered"),
                })
            })
            .collect()
    };
    Ok(FoldData {
        train: build(&train_idx)?,
        val: build(&val_idx)?,
        test: build(&test_idx)?,
        test_keys: test_idx.iter().map(|&i| data.windows[i].key()).collect(),
        model,
    })
}
