use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// 1-based ranks with ties sharing their average rank.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::shape("spearman", "x and y differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::shape("spearman", "need at least 3 observations"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("spearman inputs must be finite".into()));
    }
    Ok(())
}

fn rho_of(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&mid_ranks(x), &mid_ranks(y))
        .ok_or_else(|| Error::Degenerate("undefined correlation".into()))
}

/// Spearman's rho with a two-sided p-value from the t approximation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult> {
    check(x, y)?;
    let rho = rho_of(x, y)?;
    let n = x.len();
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(SpearmanResult { rho, p_value, n })
}

/// Spearman's rho with a two-sided permutation p-value, `(1 + hits) / (1 + permutations)`.
pub fn spearman_permutation(
    x: &[f64],
    y: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<SpearmanResult> {
    check(x, y)?;
    let rx = mid_ranks(x);
    let mut ry = mid_ranks(y);
    let rho = pearson(&rx, &ry).ok_or_else(|| Error::Degenerate("undefined correlation".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..permutations {
        ry.shuffle(&mut rng);
        let r = pearson(&rx, &ry).expect("ranks keep their variance");
        hits += usize::from(r.abs() >= rho.abs() - 1e-12);
    }
    Ok(SpearmanResult {
        rho,
        p_value: (1 + hits) as f64 / (1 + permutations) as f64,
        n: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_and_reversed() {
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap().rho,
            1.0
        );
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[9.0, 4.0, 1.0]).unwrap().rho,
            -1.0
        );
    }

    #[test]
    fn ties_use_mid_ranks() {
        assert_eq!(mid_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        // Ranks (1, 2.5, 2.5, 4) against themselves.
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[10.0, 20.0, 20.0, 40.0]).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_input_is_an_error() {
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn tied_sample_matches_reference_values() {
        // Reference: scipy.stats.spearmanr on the same data.
        let r = spearman(
            &[1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 4.0],
            &[10.0, 20.0, 20.0, 40.0, 3.0, 3.0, 8.0],
        )
        .unwrap();
        assert!((r.rho - -0.6388888888888891).abs() < 1e-12);
        assert!((r.p_value - 0.12243979397973659).abs() < 1e-9);
    }

    #[test]
    fn permutation_p_value_agrees_with_t_approximation() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let y = [0.0, 2.0, 1.0, 4.0, 3.0, 7.0, 5.0, 6.0, 11.0, 9.0, 8.0, 10.0];
        let t = spearman(&x, &y).unwrap();
        let perm = spearman_permutation(&x, &y, 4000, 1).unwrap();
        assert_eq!(perm.rho, t.rho);
        assert!(
            (perm.p_value - t.p_value).abs() < 0.01,
            "{} vs {}",
            perm.p_value,
            t.p_value
        );
    }
}
