use crate::dataset::{EmbeddingBundle, WindowKey};
use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2, Axis};

fn centred(x: ArrayView2<f64>) -> Option<Array2<f64>> {
    let mean = x.mean_axis(Axis(0))?;
    let c = &x - &mean;
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (norm > 1e-12 * scale.max(f64::MIN_POSITIVE)).then_some(c)
}

fn frob2(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

/// Linear CKA between two representations of the same `n` samples.
pub fn linear_cka(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape(
            "cka",
            format!("row counts differ: {} vs {}", x.nrows(), y.nrows()),
        ));
    }
    if x.nrows() < 2 {
        return Err(Error::shape("cka", "need at least 2 samples"));
    }
    let (Some(xc), Some(yc)) = (centred(x), centred(y)) else {
        return Err(Error::Degenerate("degenerate representation".into()));
    };
    let cross = frob2(&yc.t().dot(&xc));
    let xx = frob2(&xc.t().dot(&xc)).sqrt();
    let yy = frob2(&yc.t().dot(&yc)).sqrt();
    Ok((cross / (xx * yy)).clamp(0.0, 1.0))
}

/// Symmetric matrix of pairwise CKA values. Only the upper triangle is
/// computed and mirrored.
pub fn cka_matrix(reps: &[Array2<f64>]) -> Result<Array2<f64>> {
    let n = reps.len();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = linear_cka(reps[i].view(), reps[j].view())?;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    Ok(m)
}

/// Mean-pools every sequence of a bundle over time, in the order of `keys`.
pub fn mean_pool_bundle(bundle: &EmbeddingBundle, keys: &[WindowKey]) -> Result<Array2<f64>> {
    let d = bundle
        .dim()
        .ok_or_else(|| Error::Validation(format!("bundle {} is empty", bundle.backbone_id)))?;
    let mut out = Array2::zeros((keys.len(), d));
    for (r, key) in keys.iter().enumerate() {
        let s = bundle.get(key).ok_or_else(|| {
            Error::Validation(format!(
                "bundle {} has no sequence for {key}",
                bundle.backbone_id
            ))
        })?;
        for t in 0..s.f_w {
            for c in 0..d {
                out[[r, c]] += s.tokens[t * s.d + c] as f64;
            }
        }
        out.row_mut(r).mapv_inplace(|v| v / s.f_w as f64);
    }
    Ok(out)
}
