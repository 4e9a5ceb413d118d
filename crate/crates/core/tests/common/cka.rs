//! Random representation pairs and the CKA property suite.

use ndarray::Array2;
use playclass::analysis::linear_cka;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn gaussian_matrix(rng: &mut impl Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| {
        // Box-Muller.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    })
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(rng: &mut impl Rng, p: usize) -> Array2<f64> {
    let g = gaussian_matrix(rng, p, p);
    let mut q = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut v = g.column(j).to_owned();
        for k in 0..j {
            let qk = q.column(k).to_owned();
            let proj = v.dot(&qk);
            v = v - proj * qk;
        }
        let norm = v.dot(&v).sqrt();
        q.column_mut(j).assign(&(v / norm));
    }
    q
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CkaDeviations {
    pub self_similarity: f64,
    pub invariance: f64,
    pub symmetry: f64,
    pub cases: usize,
}

/// Worst deviations over `cases` random pairs.
pub fn cka_suite(cases: usize, seed: u64) -> CkaDeviations {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = CkaDeviations {
        cases,
        ..Default::default()
    };
    for _ in 0..cases {
        let n = rng.gen_range(4..40);
        let p = rng.gen_range(1..12);
        let q = rng.gen_range(1..12);
        let x = gaussian_matrix(&mut rng, n, p);
        let mut y = gaussian_matrix(&mut rng, n, q);
        // Mix in some shared signal so values span (0, 1).
        let mix: f64 = rng.gen();
        for i in 0..n {
            y[[i, 0]] += mix * 3.0 * x[[i, 0]];
        }
        let xy = linear_cka(x.view(), y.view()).unwrap();
        let yx = linear_cka(y.view(), x.view()).unwrap();
        dev.symmetry = dev.symmetry.max((xy - yx).abs());
        dev.self_similarity = dev
            .self_similarity
            .max((linear_cka(x.view(), x.view()).unwrap() - 1.0).abs())
            .max((linear_cka(y.view(), y.view()).unwrap() - 1.0).abs());
        let c = loop {
            let c: f64 = rng.gen_range(-50.0..50.0);
            if c.abs() > 1e-3 {
                break c;
            }
        };
        let xr = x.dot(&random_orthogonal(&mut rng, p)) * c;
        let yr = y.dot(&random_orthogonal(&mut rng, q)) * rng.gen_range(0.01..20.0);
        dev.invariance = dev
            .invariance
            .max((linear_cka(xr.view(), y.view()).unwrap() - xy).abs())
            .max((linear_cka(x.view(), yr.view()).unwrap() - xy).abs())
            .max((linear_cka(x.view(), (&x * c).view()).unwrap() - 1.0).abs());
    }
    dev
}
