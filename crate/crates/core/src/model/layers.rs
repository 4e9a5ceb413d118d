//! Layer primitives with explicit backward passes. Sequences are `K x C`
//! arrays with time along the rows.

use libm::erf;
use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Averages rows `[floor(i*F/K), floor((i+1)*F/K))` into segment `i`.
/// Empty segments (only possible when F < K) copy the nearest preceding
/// non-empty segment, or the first following one at the start.
pub fn adaptive_avg_pool(tokens: ArrayView2<f64>, k: usize) -> Array2<f64> {
    let (f, d) = tokens.dim();
    assert!(
        f >= 1 && k >= 1,
        "adaptive_avg_pool needs at least one row and one segment"
    );
    let mut out = Array2::zeros((k, d));
    let mut filled = vec![false; k];
    for i in 0..k {
        let (lo, hi) = (i * f / k, (i + 1) * f / k);
        if hi > lo {
            let seg = tokens.slice(s![lo..hi, ..]);
            out.row_mut(i).assign(&seg.sum_axis(Axis(0)));
            out.row_mut(i).mapv_inplace(|v| v / (hi - lo) as f64);
            filled[i] = true;
        }
    }
    let first = filled
        .iter()
        .position(|&b| b)
        .expect("some segment is non-empty");
    for i in 0..k {
        if !filled[i] {
            let src = (0..i).rev().find(|&j| filled[j]).unwrap_or(first);
            let row = out.row(src).to_owned();
            out.row_mut(i).assign(&row);
        }
    }
    out
}

/// Exact GELU, `x * Phi(x)`.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x * FRAC_1_SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + erf(x * FRAC_1_SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    cdf + x * pdf
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(x: &Array1<f64>) -> Array1<f64> {
    let m = x.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = x.mapv(|v| (v - m).exp());
    let z = e.sum();
    e / z
}

/// `x w^T + b` applied to every row of `x`.
pub fn linear_rows(x: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    x.dot(&w.t()) + b
}

/// Returns `(dx, dw, db)`.
pub fn linear_rows_backward(
    x: &Array2<f64>,
    w: &Array2<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    (dy.dot(w), dy.t().dot(x), dy.sum_axis(Axis(0)))
}

/// Same-padded 1D convolution over the row axis. `w` is `out x in x kernel`,
/// zero padding on both ends.
pub fn conv1d_same(x: &Array2<f64>, w: &Array3<f64>, b: &Array1<f64>) -> Array2<f64> {
    let (k, c_in) = x.dim();
    let (c_out, w_in, ks) = w.dim();
    assert_eq!(c_in, w_in, "conv input width");
    let pad = (ks / 2) as isize;
    let mut y = Array2::zeros((k, c_out));
    for t in 0..k {
        for j in 0..ks {
            let src = t as isize + j as isize - pad;
            if src < 0 || src >= k as isize {
                continue;
            }
            let xr = x.row(src as usize);
            let wj = w.slice(s![.., .., j]);
            let mut yr = y.row_mut(t);
            yr += &wj.dot(&xr);
        }
    }
    y + b
}

/// Returns `(dx, dw, db)`; the input-gradient is the transposed convolution.
pub fn conv1d_same_backward(
    x: &Array2<f64>,
    w: &Array3<f64>,
    dy: &Array2<f64>,
) -> (Array2<f64>, Array3<f64>, Array1<f64>) {
    let (k, _) = x.dim();
    let ks = w.dim().2;
    let pad = (ks / 2) as isize;
    let mut dx = Array2::zeros(x.dim());
    let mut dw = Array3::zeros(w.dim());
    for t in 0..k {
        let g = dy.row(t);
        for j in 0..ks {
            let src = t as isize + j as isize - pad;
            if src < 0 || src >= k as isize {
                continue;
            }
            let src = src as usize;
            let wj = w.slice(s![.., .., j]);
            let mut dxr = dx.row_mut(src);
            dxr += &wj.t().dot(&g);
            let outer = g
                .view()
                .insert_axis(Axis(1))
                .dot(&x.row(src).insert_axis(Axis(0)));
            let mut dwj = dw.slice_mut(s![.., .., j]);
            dwj += &outer;
        }
    }
    (dx, dw, dy.sum_axis(Axis(0)))
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    /// `tanh(h V^T)`, `K x L`.
    pub p: Array2<f64>,
    /// `sigmoid(h U^T)`, `K x L`.
    pub q: Array2<f64>,
    /// Pooling weights, sum to one.
    pub a: Array1<f64>,
}

/// Gated attention pooling: `s_k = w . (tanh(V h_k) * sigmoid(U h_k))`,
/// `a = softmax(s)`, `z = sum_k a_k h_k`.
pub fn gated_attention(
    h: &Array2<f64>,
    v: &Array2<f64>,
    u: &Array2<f64>,
    w: &Array1<f64>,
) -> (Array1<f64>, AttentionCache) {
    let p = h.dot(&v.t()).mapv(f64::tanh);
    let q = h.dot(&u.t()).mapv(sigmoid);
    let scores = (&p * &q).dot(w);
    let a = softmax(&scores);
    let z = a.dot(h);
    (z, AttentionCache { p, q, a })
}

/// Returns `(dh, dV, dU, dw)`.
pub fn gated_attention_backward(
    h: &Array2<f64>,
    v: &Array2<f64>,
    u: &Array2<f64>,
    w: &Array1<f64>,
    cache: &AttentionCache,
    dz: &Array1<f64>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array1<f64>) {
    let AttentionCache { p, q, a } = cache;
    let mut dh = a
        .view()
        .insert_axis(Axis(1))
        .dot(&dz.view().insert_axis(Axis(0)));
    let da = h.dot(dz);
    let ds = a * &(&da - a.dot(&da));
    let dw = (p * q).t().dot(&ds);
    let ds_col = ds.view().insert_axis(Axis(1));
    let gated = &ds_col * &w.view().insert_axis(Axis(0));
    let dm = &gated * q * &p.mapv(|t| 1.0 - t * t);
    let dn = &gated * p * &q.mapv(|s| s * (1.0 - s));
    dh += &dm.dot(v);
    dh += &dn.dot(u);
    (dh, dm.t().dot(h), dn.t().dot(h), dw)
}
