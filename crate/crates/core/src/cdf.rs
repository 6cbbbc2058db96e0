//! Exact CDF and survival function of the scaled non-central chi-squared law.
//!
//! Both use the Poisson mixture
//! `F(x) = sum_j Pois(j; lambda) P(K/2 + j, x / (2 sigma^2))` with
//! `lambda = M^2 / (2 sigma^2)`. Only one incomplete gamma value is computed
//! directly. The others follow from the recurrences
//! `P(c - 1, y) = P(c, y) + y^(c-1) e^-y / Gamma(c)` (walking down from a high
//! index) and `Q(c + 1, y) = Q(c, y) + y^c e^-y / Gamma(c + 1)` (walking up
//! from zero). Both add positive quantities, so there is no cancellation.
//! Terms are carried relative to a log-domain reference so the sums survive
//! values far below `f64::MIN_POSITIVE`.

use crate::distribution::NoncentralChiSquare;
use crate::error::{invalid, Result};
use crate::special::{ln_gamma_inc, ln_gamma_prefix, ln_one_minus_exp};

const RESCALE_AT: f64 = 1e200;
const TRUNCATION: f64 = 1e-18;

/// `ln P(beta <= x)`.
pub fn ln_cdf(dist: &NoncentralChiSquare, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let a = 0.5 * dist.dof() as f64;
    let y = x / (2.0 * dist.var());
    let lam = 0.5 * dist.rho();
    // each series is summed only for its own small tail and complemented
    // otherwise; summing the large side loses the last ~1e-14 to rounding
    if x < dist.mean() {
        ln_lower_mixture(a, y, lam)
    } else {
        ln_one_minus_exp(ln_upper_mixture(a, y, lam))
    }
}

/// `P(beta <= x)`.
pub fn cdf(dist: &NoncentralChiSquare, x: f64) -> f64 {
    ln_cdf(dist, x).exp()
}

/// Checked `P(beta <= x)`: rejects negative or NaN `x`.
pub fn noncentral_cdf(dist: &NoncentralChiSquare, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(invalid(format!("CDF argument must be nonnegative, got {x}")));
    }
    Ok(cdf(dist, x))
}

/// `ln P(beta > x)`.
pub fn ln_sf(dist: &NoncentralChiSquare, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let a = 0.5 * dist.dof() as f64;
    let y = x / (2.0 * dist.var());
    let lam = 0.5 * dist.rho();
    if x < dist.mean() {
        ln_one_minus_exp(ln_lower_mixture(a, y, lam))
    } else {
        ln_upper_mixture(a, y, lam)
    }
}

/// `P(beta > x)`.
pub fn sf(dist: &NoncentralChiSquare, x: f64) -> f64 {
    ln_sf(dist, x).exp()
}

/// Generalized Marcum Q-function `Q_m(a, b)` for half-integer order
/// `m = K / 2`, `K >= 1`.
///
/// Equals the survival function of a non-central chi-squared variable with
/// `2m` degrees of freedom, non-centrality `a^2` and unit variance, at `b^2`.
pub fn marcum_q(m: f64, a: f64, b: f64) -> Result<f64> {
    let twice = 2.0 * m;
    if !(twice >= 1.0 && twice.fract() == 0.0) {
        return Err(invalid(format!("Marcum Q order must be a positive half-integer, got {m}")));
    }
    if !(a >= 0.0 && b >= 0.0) {
        return Err(invalid("Marcum Q arguments must be nonnegative"));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    Ok(ln_upper_mixture(m, 0.5 * b * b, 0.5 * a * a).exp())
}

// sum_j Pois(j; lam) P(a + j, y), in logs
fn ln_lower_mixture(a: f64, y: f64, lam: f64) -> f64 {
    if lam == 0.0 {
        return ln_gamma_inc(a, y).0;
    }
    if y < 1e-60 {
        // the j = 0 term dominates every other one by more than 50 orders
        return -lam + ln_gamma_inc(a, y).0;
    }
    let ln_y = y.ln();
    let ln_lam = lam.ln();
    // the Poisson mass above j_hi is below e^-60 and P(a + j, y) decreases in j
    let j_hi = (lam + 12.0 * lam.sqrt() + 40.0).ceil();
    let b = a + j_hi;
    let ln_p = ln_gamma_inc(b, y).0;
    let mut reference = ln_gamma_prefix(j_hi + 1.0, lam) - ln_lam + ln_p;
    // r = y^(c-1) e^-y / Gamma(c) / P(c, y) at the current shape c
    let mut r = (ln_gamma_prefix(b, y) - ln_y - ln_p).exp();
    let mut t = 1.0;
    let mut sum = 1.0;
    let mut j = j_hi;
    while j > 0.0 {
        let c = a + j;
        let prev = t;
        t *= (1.0 + r) * (j / lam);
        r = r * ((c - 1.0) / y) / (1.0 + r);
        j -= 1.0;
        sum += t;
        if t > RESCALE_AT {
            sum /= t;
            reference += t.ln();
            t = 1.0;
            continue;
        }
        // below the peak the remaining terms are bounded by j * t
        if t < prev && t * (j + 1.0) < TRUNCATION * sum {
            break;
        }
    }
    reference + sum.ln()
}

// sum_j Pois(j; lam) Q(a + j, y), in logs
fn ln_upper_mixture(a: f64, y: f64, lam: f64) -> f64 {
    let ln_q0 = ln_gamma_inc(a, y).1;
    if lam == 0.0 {
        return ln_q0;
    }
    let mut reference = -lam + ln_q0;
    // s = y^c e^-y / Gamma(c + 1) / Q(c, y) at the current shape c
    let mut s = (ln_gamma_prefix(a, y) - a.ln() - ln_q0).exp();
    let mut t = 1.0;
    let mut sum = 1.0;
    let j_cap = lam + 60.0 * lam.sqrt() + 4.0 * y + 1000.0;
    let mut j = 0.0;
    while j < j_cap {
        let c = a + j;
        let prev = t;
        t *= (1.0 + s) * (lam / (j + 1.0));
        s = s * (y / (c + 1.0)) / (1.0 + s);
        j += 1.0;
        sum += t;
        if t > RESCALE_AT {
            sum /= t;
            reference += t.ln();
            t = 1.0;
            continue;
        }
        // past the mode the ratios shrink, so the tail is a dominated geometric series
        if j > lam && t < 0.5 * prev && t < TRUNCATION * sum {
            break;
        }
    }
    reference + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn nc(k: u32, m2: f64, var: f64) -> NoncentralChiSquare {
        NoncentralChiSquare::new(k, m2, var).unwrap()
    }

    // naive mixture with statrs' incomplete gamma, a fully independent route
    fn naive_cdf(k: u32, m2: f64, var: f64, x: f64) -> f64 {
        let lam = m2 / (2.0 * var);
        let y = x / (2.0 * var);
        let mut sum = 0.0;
        let mut ln_w = -lam;
        for j in 0..5000 {
            if j > 0 {
                ln_w += lam.ln() - (j as f64).ln();
            }
            sum += ln_w.exp() * statrs::function::gamma::gamma_lr(0.5 * k as f64 + j as f64, y);
            if j as f64 > lam + 50.0 && ln_w < -60.0 {
                break;
            }
        }
        sum
    }

    #[test]
    fn central_two_dof_is_exponential() {
        let d = nc(2, 0.0, 1.0);
        for &x in &[1e-10, 0.01, 1.0, 5.0, 40.0] {
            let want = -(-x / 2.0f64).exp_m1();
            assert!(((cdf(&d, x) - want) / want).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn one_dof_matches_folded_normal() {
        // beta = alpha^2 with alpha ~ N(M, sigma^2)
        for &(m2, var) in &[(0.3, 1.0), (4.0, 0.5), (50.0, 2.0), (900.0, 1.0)] {
            let d = nc(1, m2, var);
            let (m, s) = (f64::sqrt(m2), f64::sqrt(var));
            for &q in &[0.2, 0.5, 1.0, 1.5, 2.0] {
                let x = q * q * d.mean();
                let want = normal_cdf((x.sqrt() - m) / s) - normal_cdf((-x.sqrt() - m) / s);
                if want > 1e-8 {
                    assert!(((cdf(&d, x) - want) / want).abs() < 1e-9, "m2={m2} x={x}");
                }
            }
        }
    }

    #[test]
    fn matches_naive_mixture() {
        for &k in &[1u32, 2, 4, 7, 16] {
            for &m2 in &[0.5, 10.0, 120.0] {
                for &var in &[0.5, 1.0, 3.0] {
                    let d = nc(k, m2, var);
                    for &f in &[0.05, 0.3, 0.8, 1.0, 1.6] {
                        let x = f * d.mean();
                        let want = naive_cdf(k, m2, var, x);
                        let got = cdf(&d, x);
                        assert!(((got - want) / want).abs() < 1e-11, "k={k} m2={m2} var={var} x={x} {got} {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        for &k in &[1u32, 3, 8, 24] {
            for &rho in &[0.0, 1.0, 40.0, 300.0, 5000.0] {
                let d = nc(k, rho, 1.0);
                for &f in &[0.2, 0.7, 1.0, 1.3, 2.0] {
                    let x = f * d.mean();
                    let s = cdf(&d, x) + sf(&d, x);
                    assert!((s - 1.0).abs() < 1e-12, "k={k} rho={rho} f={f} sum={s}");
                }
            }
        }
    }

    #[test]
    fn marcum_known_values() {
        // Q_1(a, 0) = 1, Q_1(0, b) = exp(-b^2/2)
        assert_eq!(marcum_q(1.0, 2.0, 0.0).unwrap(), 1.0);
        for &b in &[0.5, 1.0, 3.0] {
            let want = (-0.5f64 * b * b).exp();
            assert!((marcum_q(1.0, 0.0, b).unwrap() - want).abs() < 1e-15);
        }
        // Q_1(a, a) = (1 + e^{-a^2} I0(a^2)) / 2
        for &a in &[0.5f64, 1.0, 2.0, 5.0] {
            let want = 0.5 * (1.0 + crate::special::bessel_i0e(a * a));
            assert!((marcum_q(1.0, a, a).unwrap() - want).abs() < 1e-13, "a={a}");
        }
    }

    #[test]
    fn marcum_is_the_complementary_cdf() {
        let d = nc(4, 9.0, 1.0);
        let q = marcum_q(2.0, 3.0, 1.0).unwrap();
        assert!((q - (1.0 - cdf(&d, 1.0))).abs() < 1e-15);
        let q = marcum_q(1.5, 0.7, 2.0).unwrap();
        assert!((q - sf(&nc(3, 0.49, 1.0), 4.0)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(marcum_q(0.75, 1.0, 1.0).is_err());
        assert!(marcum_q(0.0, 1.0, 1.0).is_err());
        assert!(marcum_q(1.0, -1.0, 1.0).is_err());
        assert!(noncentral_cdf(&nc(2, 1.0, 1.0), -0.1).is_err());
        assert!(noncentral_cdf(&nc(2, 1.0, 1.0), f64::NAN).is_err());
        assert_eq!(noncentral_cdf(&nc(2, 1.0, 1.0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn deep_tail_stays_finite() {
        let d = nc(40, 1e6, 1.0);
        let l = ln_cdf(&d, 1e3);
        assert!(l.is_finite() && l < -1e5);
        let d = nc(1, 300.0, 1.0);
        let l = ln_cdf(&d, 1e-30);
        assert!(l.is_finite());
        let d = nc(2, 0.0, 1.0);
        assert!((ln_cdf(&d, 2e-12) - (1e-12f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_x() {
        let d = nc(6, 37.0, 1.7);
        let mut last = f64::NEG_INFINITY;
        for i in 1..400 {
            let l = ln_cdf(&d, i as f64 * 0.3);
            assert!(l >= last);
            last = l;
        }
    }
}
