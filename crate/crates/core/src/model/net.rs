use super::layers::{
    conv1d_same, conv1d_same_backward, gated_attention, gated_attention_backward, gelu, gelu_grad,
    linear_rows, linear_rows_backward, AttentionCache,
};
use crate::error::{Error, Result};
use crate::features::VECTOR_LEN;
use ndarray::{concatenate, s, Array1, Array2, Array3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Mean-pooled input, one hidden GELU layer.
    Mlp,
    Cnn,
    /// CNN whose pooled representation is concatenated with the
    /// standardized feature vector before the head.
    Hybrid,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Mlp => "mlp",
            Variant::Cnn => "cnn",
            Variant::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Segments after adaptive pooling (CNN variants).
    pub k: usize,
    /// Width of each input token, or of the input vector for the MLP.
    pub d_in: usize,
    pub h_bottleneck: usize,
    pub h_conv: usize,
    pub kernel: usize,
    pub h_attention: usize,
    pub h_mlp: usize,
    pub n_classes: usize,
    pub feature_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Cnn,
            k: 32,
            d_in: 0,
            h_bottleneck: 256,
            h_conv: 256,
            kernel: 3,
            h_attention: 128,
            h_mlp: 256,
            n_classes: 3,
            feature_dim: VECTOR_LEN,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("model: {m}")));
        if self.d_in == 0 {
            return bad("d_in must be positive");
        }
        if self.n_classes < 2 {
            return bad("need at least two classes");
        }
        match self.variant {
            Variant::Mlp => {
                if self.h_mlp == 0 {
                    return bad("h_mlp must be positive");
                }
            }
            Variant::Cnn | Variant::Hybrid => {
                if self.k == 0 {
                    return bad("K must be at least 1");
                }
                if self.kernel.is_multiple_of(2) {
                    return bad("conv kernel must be odd");
                }
                if self.h_bottleneck == 0 || self.h_conv == 0 || self.h_attention == 0 {
                    return bad("hidden widths must be positive");
                }
                if self.variant == Variant::Hybrid && self.feature_dim == 0 {
                    return bad("hybrid needs a feature dimension");
                }
            }
        }
        Ok(())
    }

    fn head_in(&self) -> usize {
        match self.variant {
            Variant::Mlp => self.h_mlp,
            Variant::Cnn => self.h_conv,
            Variant::Hybrid => self.h_conv + self.feature_dim,
        }
    }
}

/// One window as seen by a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    /// `K x d_in` for CNN variants. Any number of rows for the MLP, which
    /// mean-pools them first.
    pub tokens: Array2<f64>,
    /// Standardized descriptor, hybrid only.
    pub features: Option<Array1<f64>>,
}

impl Input {
    pub fn vector(v: Array1<f64>) -> Self {
        Input {
            tokens: v.insert_axis(Axis(0)),
            features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Mlp {
        w: Array2<f64>,
        b: Array1<f64>,
    },
    Cnn {
        proj_w: Array2<f64>,
        proj_b: Array1<f64>,
        conv_w: Array3<f64>,
        conv_b: Array1<f64>,
        att_v: Array2<f64>,
        att_u: Array2<f64>,
        att_w: Array1<f64>,
    },
}

/// Every trainable tensor of a model. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub config: ModelConfig,
    pub body: Body,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

impl Params {
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let c = config;
        let body = match c.variant {
            Variant::Mlp => Body::Mlp {
                w: Array2::zeros((c.h_mlp, c.d_in)),
                b: Array1::zeros(c.h_mlp),
            },
            Variant::Cnn | Variant::Hybrid => Body::Cnn {
                proj_w: Array2::zeros((c.h_bottleneck, c.d_in)),
                proj_b: Array1::zeros(c.h_bottleneck),
                conv_w: Array3::zeros((c.h_conv, c.h_bottleneck, c.kernel)),
                conv_b: Array1::zeros(c.h_conv),
                att_v: Array2::zeros((c.h_attention, c.h_conv)),
                att_u: Array2::zeros((c.h_attention, c.h_conv)),
                att_w: Array1::zeros(c.h_attention),
            },
        };
        Ok(Params {
            config: c.clone(),
            body,
            head_w: Array2::zeros((c.n_classes, c.head_in())),
            head_b: Array1::zeros(c.n_classes),
        })
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    pub fn init(config: &ModelConfig, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Params::zeros(config)?;
        let c = config;
        let fans: Vec<usize> = match c.variant {
            Variant::Mlp => vec![c.d_in, c.d_in],
            Variant::Cnn | Variant::Hybrid => vec![
                c.d_in,
                c.d_in,
                c.h_bottleneck * c.kernel,
                c.h_bottleneck * c.kernel,
                c.h_conv,
                c.h_conv,
                c.h_attention,
            ],
        };
        let fans: Vec<usize> = fans.into_iter().chain([c.head_in(), c.head_in()]).collect();
        for ((_, t), fan) in p.tensors_mut().into_iter().zip(fans) {
            let bound = 1.0 / (fan as f64).sqrt();
            t.iter_mut().for_each(|v| *v = rng.gen_range(-bound..bound));
        }
        Ok(p)
    }

    /// Named views in a fixed order, shared by the optimizer and checkpoints.
    pub fn tensors(&self) -> Vec<(&'static str, &[usize], &[f64])> {
        let mut out: Vec<(&'static str, &[usize], &[f64])> = Vec::new();
        macro_rules! push {
            ($name:expr, $t:expr) => {
                out.push(($name, $t.shape(), $t.as_slice().expect("standard layout")))
            };
        }
        match &self.body {
            Body::Mlp { w, b } => {
                push!("mlp.w", w);
                push!("mlp.b", b);
            }
            Body::Cnn {
                proj_w,
                proj_b,
                conv_w,
                conv_b,
                att_v,
                att_u,
                att_w,
            } => {
                push!("proj.w", proj_w);
                push!("proj.b", proj_b);
                push!("conv.w", conv_w);
                push!("conv.b", conv_b);
                push!("att.v", att_v);
                push!("att.u", att_u);
                push!("att.w", att_w);
            }
        }
        push!("head.w", self.head_w);
        push!("head.b", self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut out: Vec<(&'static str, &mut [f64])> = Vec::new();
        macro_rules! push {
            ($name:expr, $t:expr) => {
                out.push(($name, $t.as_slice_mut().expect("standard layout")))
            };
        }
        match &mut self.body {
            Body::Mlp { w, b } => {
                push!("mlp.w", w);
                push!("mlp.b", b);
            }
            Body::Cnn {
                proj_w,
                proj_b,
                conv_w,
                conv_b,
                att_v,
                att_u,
                att_w,
            } => {
                push!("proj.w", proj_w);
                push!("proj.b", proj_b);
                push!("conv.w", conv_w);
                push!("conv.b", conv_b);
                push!("att.v", att_v);
                push!("att.u", att_u);
                push!("att.w", att_w);
            }
        }
        push!("head.w", self.head_w);
        push!("head.b", self.head_b);
        out
    }

    fn standardize_layout(&mut self) {
        fn fix<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) {
            if !a.is_standard_layout() {
                *a = a.as_standard_layout().into_owned();
            }
        }
        match &mut self.body {
            Body::Mlp { w, b } => {
                fix(w);
                fix(b);
            }
            Body::Cnn {
                proj_w,
                proj_b,
                conv_w,
                conv_b,
                att_v,
                att_u,
                att_w,
            } => {
                fix(proj_w);
                fix(proj_b);
                fix(conv_w);
                fix(conv_b);
                fix(att_v);
                fix(att_u);
                fix(att_w);
            }
        }
        fix(&mut self.head_w);
        fix(&mut self.head_b);
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.2.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for ((_, a), (_, _, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
}

#[derive(Debug, Clone)]
enum Trace {
    Mlp {
        x: Array1<f64>,
        pre: Array1<f64>,
    },
    Cnn {
        x: Array2<f64>,
        pre: Array2<f64>,
        g: Array2<f64>,
        c: Array2<f64>,
        att: AttentionCache,
    },
}

/// Activations kept by `forward` for `backward`.
#[derive(Debug, Clone)]
pub struct Cache {
    trace: Trace,
    head_in: Array1<f64>,
}

impl Cache {
    pub fn attention(&self) -> Option<&Array1<f64>> {
        match &self.trace {
            Trace::Cnn { att, .. } => Some(&att.a),
            Trace::Mlp { .. } => None,
        }
    }

    /// Representation fed to the classification head.
    pub fn embedding(&self) -> &Array1<f64> {
        &self.head_in
    }
}

fn check(layer: &str, what: &str, want: usize, got: usize) -> Result<()> {
    if want == got {
        Ok(())
    } else {
        Err(Error::shape(
            layer,
            format!("{what}: expected {want}, got {got}"),
        ))
    }
}

pub fn forward(params: &Params, input: &Input) -> Result<(Array1<f64>, Cache)> {
    let cfg = &params.config;
    let (rows, cols) = input.tokens.dim();
    let (trace, head_in) = match &params.body {
        Body::Mlp { w, b } => {
            check("mlp", "input width", cfg.d_in, cols)?;
            if rows == 0 {
                return Err(Error::shape("mlp", "empty input"));
            }
            let x = input.tokens.mean_axis(Axis(0)).expect("non-empty");
            let pre = w.dot(&x) + b;
            let h = pre.mapv(gelu);
            (Trace::Mlp { x, pre }, h)
        }
        Body::Cnn {
            proj_w,
            proj_b,
            conv_w,
            conv_b,
            att_v,
            att_u,
            att_w,
        } => {
            check("bottleneck", "token width", cfg.d_in, cols)?;
            check("bottleneck", "segments", cfg.k, rows)?;
            let x = input.tokens.clone();
            let pre = linear_rows(&x, proj_w, proj_b);
            let g = pre.mapv(gelu);
            let c = conv1d_same(&g, conv_w, conv_b);
            let (z, att) = gated_attention(&c, att_v, att_u, att_w);
            let head_in = if cfg.variant == Variant::Hybrid {
                let f = input
                    .features
                    .as_ref()
                    .ok_or_else(|| Error::shape("hybrid", "feature vector missing"))?;
                check("hybrid", "feature length", cfg.feature_dim, f.len())?;
                concatenate![Axis(0), z, *f]
            } else {
                z
            };
            (Trace::Cnn { x, pre, g, c, att }, head_in)
        }
    };
    let logits = params.head_w.dot(&head_in) + &params.head_b;
    Ok((logits, Cache { trace, head_in }))
}

/// Gradients of every parameter given the gradient of the loss with respect
/// to the logits.
pub fn backward(params: &Params, cache: &Cache, dlogits: &Array1<f64>) -> Params {
    let outer = |a: &Array1<f64>, b: &Array1<f64>| {
        a.view()
            .insert_axis(Axis(1))
            .dot(&b.view().insert_axis(Axis(0)))
    };
    let head_w = outer(dlogits, &cache.head_in);
    let head_b = dlogits.clone();
    let d_head_in = params.head_w.t().dot(dlogits);
    let body = match (&params.body, &cache.trace) {
        (Body::Mlp { .. }, Trace::Mlp { x, pre }) => {
            let dpre = &d_head_in * &pre.mapv(gelu_grad);
            Body::Mlp {
                w: outer(&dpre, x),
                b: dpre,
            }
        }
        (
            Body::Cnn {
                proj_w,
                conv_w,
                att_v,
                att_u,
                att_w,
                ..
            },
            Trace::Cnn { x, pre, g, c, att },
        ) => {
            let dz = d_head_in.slice(s![..params.config.h_conv]).to_owned();
            let (dc, dv, du, dw) = gated_attention_backward(c, att_v, att_u, att_w, att, &dz);
            let (dg, dconv_w, dconv_b) = conv1d_same_backward(g, conv_w, &dc);
            let dpre = dg * pre.mapv(gelu_grad);
            let (_, dproj_w, dproj_b) = linear_rows_backward(x, proj_w, &dpre);
            Body::Cnn {
                proj_w: dproj_w,
                proj_b: dproj_b,
                conv_w: dconv_w,
                conv_b: dconv_b,
                att_v: dv,
                att_u: du,
                att_w: dw,
            }
        }
        _ => unreachable!("cache was produced by a different architecture"),
    };
    let mut grads = Params {
        config: params.config.clone(),
        body,
        head_w,
        head_b,
    };
    grads.standardize_layout();
    grads
}
