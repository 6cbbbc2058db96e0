//! Special functions used by the distribution and channel code.
//!
//! Everything here works on `f64`. The incomplete gamma routines return
//! logarithms so that deep lower tails (1e-300 and below) stay representable.

use std::f64::consts::{FRAC_PI_4, PI};

const LANCZOS_COEFFS: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// Natural log of the gamma function for `x > 0`.
///
/// Lanczos approximation with g = 607/128, relative error below 1e-15.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let mut y = x;
    let tmp = x + 5.242_187_5;
    let tmp = (x + 0.5) * tmp.ln() - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    for c in LANCZOS_COEFFS {
        y += 1.0;
        ser += c / y;
    }
    tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Logarithms of the regularized incomplete gamma functions, `(ln P(a, x), ln Q(a, x))`.
///
/// Uses the power series below `x = a + 1` and a modified Lentz continued
/// fraction above it. The complementary value is recovered with `ln(-expm1)`
/// so neither side loses relative accuracy near its own tail.
pub fn ln_gamma_inc(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0);
    if x <= 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x.is_infinite() {
        return (0.0, f64::NEG_INFINITY);
    }
    let ln_prefix = ln_gamma_prefix(a, x);
    if x < a + 1.0 {
        let ln_p = ln_prefix + lower_series(a, x).ln();
        (ln_p, ln_one_minus_exp(ln_p))
    } else {
        let ln_q = ln_prefix + upper_fraction(a, x).ln();
        (ln_one_minus_exp(ln_q), ln_q)
    }
}

/// `ln(x^a e^-x / Gamma(a))` for `a, x > 0`.
///
/// For large `a` the Stirling form avoids cancelling `a ln x` against
/// `ln Gamma(a)`, which would otherwise cost about `log10(a)` digits.
pub fn ln_gamma_prefix(a: f64, x: f64) -> f64 {
    if a < 20.0 {
        return a * x.ln() - x - ln_gamma(a);
    }
    let t = (x - a) / a;
    let core = if t.abs() < 0.5 {
        a * ln_1p_minus(t)
    } else {
        a * (x / a).ln() - (x - a)
    };
    core + 0.5 * (a / (2.0 * PI)).ln() - stirling_correction(a)
}

// ln(1 + t) - t for |t| < 1/2, via v = t / (2 + t) and ln(1 + t) = 2 atanh(v)
fn ln_1p_minus(t: f64) -> f64 {
    let v = t / (2.0 + t);
    let v2 = v * v;
    let mut pow = v * v2;
    let mut tail = 0.0f64;
    let mut k = 3.0;
    while pow.abs() > 1e-18 * tail.abs().max(f64::MIN_POSITIVE) {
        tail += pow / k;
        pow *= v2;
        k += 2.0;
    }
    2.0 * tail - v * t
}

// ln Gamma(a) - [(a - 1/2) ln a - a + ln(2 pi)/2], valid for a >= 20
fn stirling_correction(a: f64) -> f64 {
    let r = 1.0 / a;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    ln_gamma_inc(a, x).0.exp()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    ln_gamma_inc(a, x).1.exp()
}

// sum_{n>=0} x^n / (a (a+1) ... (a+n))
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..1_000_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1_000_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `ln(1 - exp(l))` for `l <= 0`.
pub fn ln_one_minus_exp(l: f64) -> f64 {
    if l > -std::f64::consts::LN_2 {
        (-l.exp_m1()).ln()
    } else {
        (-l.exp()).ln_1p()
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Bessel function of the first kind, order zero.
///
/// Ascending series up to |x| = 4, Miller backward recurrence up to |x| = 25
/// and the Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 4.0 {
        j0_series(ax)
    } else if ax <= 25.0 {
        j0_miller(ax)
    } else {
        j0_asymptotic(ax)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    // start well above x so the minimal solution dominates by the time n reaches 0
    let start = 2 * ((1.5 * x) as usize / 2 + 20);
    let two_over_x = 2.0 / x;
    let mut j_next = 0.0;
    let mut j_cur = 1e-30;
    let mut even_sum = 0.0;
    let mut j0 = 0.0;
    for n in (1..=start).rev() {
        let j_prev = n as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            even_sum *= 1e-250;
        }
        let m = n - 1;
        if m == 0 {
            j0 = j_cur;
        } else if m % 2 == 0 {
            even_sum += j_cur;
        }
    }
    j0 / (j0 + 2.0 * even_sum)
}

fn j0_asymptotic(x: f64) -> f64 {
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -odd * odd / (k as f64 * eight_x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // P = 1 - t2 + t4 - ..., Q = t1 - t3 + ...
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if last < 1e-17 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Exponentially scaled modified Bessel function `exp(-|x|) I0(x)`.
pub fn bessel_i0e(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 20.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * kf);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        sum * (-ax).exp()
    } else {
        scaled_i_asymptotic(0.0, ax)
    }
}

/// Exponentially scaled modified Bessel function `exp(-|x|) I1(x)`.
pub fn bessel_i1e(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= 20.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * (kf + 1.0));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        0.5 * ax * sum * (-ax).exp()
    } else {
        scaled_i_asymptotic(1.0, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn scaled_i_asymptotic(order: f64, x: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        sum += term;
        if term.abs() < 1e-17 {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..30 {
            assert!(rel(ln_gamma(n as f64).exp(), fact) < 1e-13 || n <= 2, "n={n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_against_statrs() {
        for &x in &[1e-3, 0.1, 0.7, 1.5, 3.3, 10.25, 57.0, 301.5, 1e4, 1e6] {
            let want = statrs::function::gamma::ln_gamma(x);
            assert!((ln_gamma(x) - want).abs() <= 1e-13 * want.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn incomplete_gamma_against_statrs() {
        for &a in &[0.5, 1.0, 2.0, 4.5, 12.0, 60.0] {
            for &x in &[0.01, 0.3, 1.0, 3.0, 8.0, 20.0, 70.0] {
                let p = gamma_p(a, x);
                let q = gamma_q(a, x);
                let want = statrs::function::gamma::gamma_lr(a, x);
                assert!((p - want).abs() < 1e-13, "a={a} x={x} p={p} want={want}");
                assert!((p + q - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn incomplete_gamma_exponential_case() {
        // P(1, x) = 1 - exp(-x); deep lower tail in logs
        let (lp, lq) = ln_gamma_inc(1.0, 1e-12);
        assert!(rel(lp, (-(-1e-12f64).exp_m1()).ln()) < 1e-14);
        assert!(lq.abs() < 1.1e-12);
        let (lp, _) = ln_gamma_inc(40.0, 1e-3);
        // leading terms of the series x^a e^-x / Gamma(a+1) (1 + x/(a+1) + ...)
        let x: f64 = 1e-3;
        let want = 40.0 * x.ln() - x - ln_gamma(41.0) + (x / 41.0 + x * x / (41.0 * 42.0)).ln_1p();
        assert!((lp - want).abs() < 1e-12);
    }

    #[test]
    fn prefix_against_high_precision_values() {
        // a ln x - x - ln Gamma(a), evaluated with 40-digit arithmetic
        let cases = [
            (20.0, 20.0, 0.574_761_283_880_325_9),
            (25.5, 15.3, -2.128_920_519_561_007),
            (300.0, 291.0, 1.794_912_681_035_966_6),
            (4000.0, 4000.0, 3.228_065_453_513_051),
            (4000.0, 4100.0, 1.998_515_814_999_055_2),
            (4000.0, 40.0, -14_457.452_678_498_852),
        ];
        for (a, x, want) in cases {
            let got = ln_gamma_prefix(a, x);
            assert!((got - want).abs() < 2e-15 * f64::abs(want).max(1.0), "a={a} x={x} got={got}");
        }
    }

    #[test]
    fn j0_against_libm() {
        let mut x = 0.0;
        while x < 200.0 {
            let got = bessel_j0(x);
            let want = libm::j0(x);
            assert!((got - want).abs() < 1e-12, "x={x} got={got} want={want}");
            x += 0.0137;
        }
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!((bessel_j0(-3.7) - bessel_j0(3.7)).abs() == 0.0);
    }

    #[test]
    fn j0_known_values() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j0(2.404_825_557_695_773) ).abs() < 1e-14);
    }

    #[test]
    fn scaled_i_known_values() {
        let e = 1f64.exp();
        assert!(rel(bessel_i0e(1.0) * e, 1.266_065_877_752_008_4) < 1e-14);
        assert!(rel(bessel_i1e(1.0) * e, 0.565_159_103_992_485_1) < 1e-14);
        assert!(rel(bessel_i0e(25.0), 0.080_196_773_547_436_69) < 1e-12);
        // continuity across the branch switch
        for &order_fn in &[bessel_i0e as fn(f64) -> f64, bessel_i1e] {
            let a = order_fn(20.0 - 1e-12);
            let b = order_fn(20.0 + 1e-12);
            assert!(rel(a, b) < 1e-12);
        }
    }

    #[test]
    fn normal_round_trip() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9] {
            let z = normal_quantile(p);
            // the erfc used here is good to a few parts in 1e11 in the far tail
            assert!(rel(normal_cdf(z), p) < 1e-10, "p={p}");
        }
        assert!((normal_quantile(0.5)).abs() < 1e-15);
    }
}
