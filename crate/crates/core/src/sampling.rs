//! Exact Monte Carlo draws of generalized and non-central chi-squared variables.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::distribution::{GeneralizedChiSquare, NoncentralChiSquare};
use crate::rng::{map_indices, substream};

/// One draw of `sum_k (mu_k + sigma_k z_k)^2`.
pub fn draw_generalized<R: Rng + ?Sized>(dist: &GeneralizedChiSquare, rng: &mut R) -> f64 {
    dist.components()
        .iter()
        .map(|c| {
            let z: f64 = rng.sample(StandardNormal);
            let a = c.mean + c.var.sqrt() * z;
            a * a
        })
        .sum()
}

/// One draw of a scaled non-central chi-squared variable.
pub fn draw_noncentral<R: Rng + ?Sized>(dist: &NoncentralChiSquare, rng: &mut R) -> f64 {
    let s = dist.var().sqrt();
    let m = dist.noncentrality().sqrt();
    let mut beta = 0.0;
    for k in 0..dist.dof() {
        let z: f64 = rng.sample(StandardNormal);
        let a = if k == 0 { m + s * z } else { s * z };
        beta += a * a;
    }
    beta
}

/// `n` independent draws; draw `i` uses the substream `(seed, i)`.
pub fn sample_generalized(dist: &GeneralizedChiSquare, n: u64, seed: u64) -> Vec<f64> {
    map_indices(n, |i| draw_generalized(dist, &mut substream(seed, i)))
}

/// `n` independent draws; draw `i` uses the substream `(seed, i)`.
pub fn sample_noncentral(dist: &NoncentralChiSquare, n: u64, seed: u64) -> Vec<f64> {
    map_indices(n, |i| draw_noncentral(dist, &mut substream(seed, i)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_moments() {
        let d = NoncentralChiSquare::new(4, 10.0, 1.0).unwrap();
        let n = 200_000;
        let xs = sample_noncentral(&d, n, 11);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // E = 14, Var = 2K + 4 M^2 = 48
        assert!((mean - 14.0).abs() < 4.0 * (48.0 / n as f64).sqrt());
        assert!((var - 48.0).abs() < 0.05 * 48.0);
    }

    #[test]
    fn reproducible_by_seed() {
        let g = GeneralizedChiSquare::new([(1.0, 0.5), (0.0, 2.0), (-3.0, 1.0)]).unwrap();
        assert_eq!(sample_generalized(&g, 1000, 5), sample_generalized(&g, 1000, 5));
        assert_ne!(sample_generalized(&g, 10, 5), sample_generalized(&g, 10, 6));
        // prefix property: draw i does not depend on n
        assert_eq!(sample_generalized(&g, 10, 5)[..], sample_generalized(&g, 1000, 5)[..10]);
    }
}
