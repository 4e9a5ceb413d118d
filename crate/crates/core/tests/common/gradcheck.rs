//! Central finite-difference checks of model gradients.

use ndarray::{Array1, Array2};
use playclass::model::{
    backward, forward, weighted_loss, Example, Input, ModelConfig, Params, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;

pub struct Instance {
    pub params: Params,
    pub examples: Vec<Example>,
    pub weights: Vec<f64>,
    pub alpha: f64,
}

pub fn tiny_config(variant: Variant) -> ModelConfig {
    ModelConfig {
        variant,
        k: 4,
        d_in: 3,
        h_bottleneck: 4,
        h_conv: 3,
        kernel: 3,
        h_attention: 3,
        h_mlp: 5,
        n_classes: 3,
        feature_dim: 5,
    }
}

pub fn random_instance(variant: Variant, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = tiny_config(variant);
    let mut params = Params::init(&cfg, &mut rng).unwrap();
    // Larger weights push activations out of the near-linear regime.
    params.scale(2.0);
    let rows = if variant == Variant::Mlp {
        rng.gen_range(1..6)
    } else {
        cfg.k
    };
    let examples = (0..3)
        .map(|_| Example {
            input: Input {
                tokens: Array2::from_shape_fn((rows, cfg.d_in), |_| rng.gen_range(-1.5..1.5)),
                features: (variant == Variant::Hybrid)
                    .then(|| Array1::from_shape_fn(cfg.feature_dim, |_| rng.gen_range(-2.0..2.0))),
            },
            label: rng.gen_range(0..3),
        })
        .collect();
    let weights = (0..3).map(|_| rng.gen_range(0.3..2.0)).collect();
    Instance {
        params,
        examples,
        weights,
        alpha: 0.1,
    }
}

pub fn batch_loss(params: &Params, inst: &Instance) -> f64 {
    let logits: Vec<_> = inst
        .examples
        .iter()
        .map(|e| forward(params, &e.input).unwrap().0)
        .collect();
    let labels: Vec<usize> = inst.examples.iter().map(|e| e.label).collect();
    weighted_loss(&logits, &labels, &inst.weights, inst.alpha)
        .unwrap()
        .0
}

pub fn analytic_gradient(inst: &Instance) -> Params {
    let outs: Vec<_> = inst
        .examples
        .iter()
        .map(|e| forward(&inst.params, &e.input).unwrap())
        .collect();
    let logits: Vec<_> = outs.iter().map(|o| o.0.clone()).collect();
    let labels: Vec<usize> = inst.examples.iter().map(|e| e.label).collect();
    let (_, d) = weighted_loss(&logits, &labels, &inst.weights, inst.alpha).unwrap();
    let mut g = Params::zeros(&inst.params.config).unwrap();
    for (o, dl) in outs.iter().zip(&d) {
        g.add_scaled(&backward(&inst.params, &o.1, dl), 1.0);
    }
    g
}

/// `|a - n| / max(|a|, |n|)`, with pairs where both sides are below `1e-8`
/// compared on absolute error instead.
pub fn relative_error(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-8 {
        (a - n).abs()
    } else {
        (a - n).abs() / scale
    }
}

/// Largest relative error over every parameter value, with the tensor name.
pub fn max_relative_error(inst: &Instance) -> (f64, String) {
    let grad = analytic_gradient(inst);
    let mut worst = (0.0, String::new());
    let tensors: Vec<(&str, Vec<f64>)> =
        grad.tensors().iter().map(|t| (t.0, t.2.to_vec())).collect();
    for (ti, (name, g)) in tensors.iter().enumerate() {
        for (i, &a) in g.iter().enumerate() {
            let mut p = inst.params.clone();
            p.tensors_mut()[ti].1[i] += STEP;
            let plus = batch_loss(&p, inst);
            p.tensors_mut()[ti].1[i] -= 2.0 * STEP;
            let minus = batch_loss(&p, inst);
            let n = (plus - minus) / (2.0 * STEP);
            let e = relative_error(a, n);
            if e > worst.0 {
                worst = (e, format!("{name}[{i}]: analytic {a:e} numeric {n:e}"));
            }
        }
    }
    worst
}
