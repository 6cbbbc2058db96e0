//! Reference thresholds the Chernoff bound is compared against: the
//! polynomial lower bound, normal-type approximations of non-central
//! chi-squared quantiles, and quadratic regression in `M^2`.
//!
//! None of the approximations is a bound. They can land on either side of
//! the exact threshold and some of them can produce negative values, which
//! are reported rather than clamped.

use crate::distribution::{NoncentralChiSquare, ReliabilityTarget};
use crate::error::{invalid, Error, Result};
use crate::special::{ln_gamma, normal_quantile};

/// Polynomial lower bound for a central gain,
/// `2 sigma^2 (epsilon Gamma(K/2 + 1))^(2/K)`.
pub fn poly_lb_central(dof: u32, var: f64, target: ReliabilityTarget) -> f64 {
    let k = dof as f64;
    2.0 * var * ((2.0 / k) * (target.ln_epsilon() + ln_gamma(0.5 * k + 1.0))).exp()
}

/// Polynomial threshold for a non-central gain: the central value scaled by
/// `exp(M^2 / (K sigma^2))`. Not a valid lower bound once `M^2 > 0`.
pub fn poly_lb_noncentral(dist: &NoncentralChiSquare, target: ReliabilityTarget) -> f64 {
    poly_lb_central(dist.dof(), dist.var(), target) * (dist.rho() / dist.dof() as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApproximationMethod {
    /// Cube-root normal approximation (Wilson-Hilferty on the Patnaik fit).
    AbdelAtyFirst,
    /// Cube-root approximation with a Cornish-Fisher skewness correction.
    AbdelAtyCloser,
    /// `sqrt(beta - (K - 1) / 2) ~ N(sqrt(lambda + (K - 1) / 2), 1)`.
    SankaranZ1,
    /// `sqrt(beta - (K - 1) / 3) ~ N(sqrt(lambda + (2K - 1) / 3), 1)`.
    SankaranZ2,
    /// Square-root normal approximation of a central quantile.
    Zar,
    /// Cornish-Fisher expansion of a central quantile.
    Goldstein,
}

impl ApproximationMethod {
    pub const ALL: [ApproximationMethod; 6] = [
        Self::AbdelAtyFirst,
        Self::AbdelAtyCloser,
        Self::SankaranZ1,
        Self::SankaranZ2,
        Self::Zar,
        Self::Goldstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::AbdelAtyFirst => "aty1",
            Self::AbdelAtyCloser => "aty2",
            Self::SankaranZ1 => "z1",
            Self::SankaranZ2 => "z2",
            Self::Zar => "zar",
            Self::Goldstein => "goldstein",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Approximate threshold. `valid` is false when the normalizing transform
/// had to be inverted at a negative base. `value` is then what the direct
/// inversion gives: negative for the cube-root forms, a large overestimate
/// for the square-root forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approximation {
    pub value: f64,
    pub valid: bool,
}

impl Approximation {
    fn from_power(offset: f64, scale: f64, y: f64, power: i32) -> Self {
        Self { value: offset + scale * y.powi(power), valid: y > 0.0 }
    }
}

/// Approximate `epsilon`-quantile of `dist` with the chosen method.
///
/// The non-central methods apply directly. The central-only methods (`Zar`,
/// `Goldstein`) are applied through the two-moment central fit
/// `beta / c ~ chi^2_f` with `c = (K + 2 rho) / (K + rho)`,
/// `f = (K + rho)^2 / (K + 2 rho)`, which is exact when `rho = 0`.
pub fn approx_threshold(
    method: ApproximationMethod,
    dist: &NoncentralChiSquare,
    target: ReliabilityTarget,
) -> Approximation {
    let z = normal_quantile(target.epsilon());
    let k = dist.dof() as f64;
    let l = dist.rho();
    let m = k + l;
    let var = dist.var();
    let a = match method {
        ApproximationMethod::AbdelAtyFirst => {
            let c = 2.0 * (k + 2.0 * l) / (9.0 * m * m);
            Approximation::from_power(0.0, m, 1.0 - c + z * c.sqrt(), 3)
        }
        ApproximationMethod::AbdelAtyCloser => {
            let c = 2.0 * (k + 2.0 * l) / (9.0 * m * m);
            let sd = c.sqrt();
            // third cumulant of (beta / m)^(1/3) to leading order
            let skew = -8.0 * l * l / (27.0 * m.powi(4)) / (sd * sd * sd);
            let w = z + skew * (z * z - 1.0) / 6.0;
            Approximation::from_power(0.0, m, 1.0 - c + sd * w, 3)
        }
        ApproximationMethod::SankaranZ1 => {
            let shift = 0.5 * (k - 1.0);
            Approximation::from_power(shift, 1.0, z + (l + shift).sqrt(), 2)
        }
        ApproximationMethod::SankaranZ2 => {
            let shift = (k - 1.0) / 3.0;
            Approximation::from_power(shift, 1.0, z + (l + (2.0 * k - 1.0) / 3.0).sqrt(), 2)
        }
        ApproximationMethod::Zar => {
            let (c, f) = central_fit(k, l);
            // sqrt(2 X) ~ N(sqrt(2 f - 1), 1)
            Approximation::from_power(0.0, 0.5 * c, z + (2.0 * f - 1.0).sqrt(), 2)
        }
        ApproximationMethod::Goldstein => {
            let (c, f) = central_fit(k, l);
            let r = (2.0 * f).sqrt();
            let (z2, z3) = (z * z, z * z * z);
            let q = f + z * r + (2.0 / 3.0) * (z2 - 1.0) + (z3 - 7.0 * z) / (9.0 * r)
                - (6.0 * z2 * z2 + 14.0 * z2 - 32.0) / (405.0 * f)
                + (9.0 * z2 * z3 + 256.0 * z3 - 433.0 * z) / (4860.0 * f * r);
            Approximation { value: c * q, valid: q > 0.0 }
        }
    };
    Approximation { value: a.value * var, valid: a.valid }
}

fn central_fit(k: f64, l: f64) -> (f64, f64) {
    let s = k + 2.0 * l;
    (s / (k + l), (k + l) * (k + l) / s)
}

/// `beta_T ~ a0 + a1 M^2 + a2 M^4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QuadraticFit {
    pub fn predict(&self, m2: f64) -> f64 {
        self.a0 + m2 * (self.a1 + m2 * self.a2)
    }
}

/// Least-squares quadratic in `M^2` through `(M^2, beta_T)` pairs.
///
/// When `anchored`, the curve is forced through the pair at `M^2 = 0`, which
/// must be present, and only the linear and quadratic terms are fit.
pub fn fit_regression(points: &[(f64, f64)], anchored: bool) -> Result<QuadraticFit> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(invalid("regression points must be finite"));
    }
    let anchor = if anchored {
        let origin = points
            .iter()
            .find(|p| p.0 == 0.0)
            .ok_or_else(|| invalid("anchored fit needs a point at M^2 = 0"))?;
        Some(origin.1)
    } else {
        None
    };
    let unknowns = if anchor.is_some() { 2 } else { 3 };
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < unknowns {
        return Err(Error::SingularDesign(format!(
            "{} distinct abscissae for {unknowns} coefficients",
            distinct.len()
        )));
    }
    // work in x / x_max so the normal equations stay well conditioned
    let scale = distinct.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(x, y) in points {
        let t = x / scale;
        let row = [1.0, t, t * t];
        let (cols, target): (&[f64], f64) = match anchor {
            Some(a0) => (&row[1..], y - a0),
            None => (&row[..], y),
        };
        for i in 0..unknowns {
            atb[i] += cols[i] * target;
            for j in 0..unknowns {
                ata[i][j] += cols[i] * cols[j];
            }
        }
    }
    let sol = solve_small(ata, atb, unknowns)?;
    let (a0, b1, b2) = match anchor {
        Some(a0) => (a0, sol[0], sol[1]),
        None => (sol[0], sol[1], sol[2]),
    };
    Ok(QuadraticFit { a0, a1: b1 / scale, a2: b2 / (scale * scale) })
}

// Gaussian elimination with partial pivoting on the leading n x n block.
fn solve_small(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> Result<[f64; 3]> {
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col].abs() <= 1e-13 * norm {
            return Err(Error::SingularDesign("normal equations are rank deficient".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::cdf;
    use crate::quantile::numeric_quantile;

    fn t(eps: f64) -> ReliabilityTarget {
        ReliabilityTarget::new(eps).unwrap()
    }

    #[test]
    fn poly_lb_two_dof_closed_form() {
        // K = 2: 2 sigma^2 epsilon; exact threshold is -2 sigma^2 ln(1 - epsilon)
        let v = poly_lb_central(2, 1.5, t(1e-3));
        assert!((v - 3.0e-3).abs() < 1e-15);
        let exact = -3.0 * (-1e-3f64).ln_1p();
        assert!(v < exact);
    }

    #[test]
    fn poly_lb_central_is_a_lower_bound() {
        for k in [1u32, 2, 4, 8, 16, 40] {
            for eps in [1e-9, 1e-6, 1e-3] {
                let d = NoncentralChiSquare::central(k, 1.0).unwrap();
                // P(a, y) <= y^a / Gamma(a + 1); equality up to rounding for tiny y
                assert!(cdf(&d, poly_lb_central(k, 1.0, t(eps))) <= eps * (1.0 + 1e-12), "k={k} eps={eps}");
            }
        }
    }

    #[test]
    fn poly_noncentral_reduces_to_central() {
        let d = NoncentralChiSquare::central(6, 2.0).unwrap();
        assert_eq!(poly_lb_noncentral(&d, t(1e-4)), poly_lb_central(6, 2.0, t(1e-4)));
    }

    #[test]
    fn names_round_trip() {
        for m in ApproximationMethod::ALL {
            assert_eq!(ApproximationMethod::from_name(m.name()), Some(m));
        }
        assert_eq!(ApproximationMethod::from_name("nope"), None);
    }

    const SQRT_FORMS: [ApproximationMethod; 2] = [ApproximationMethod::SankaranZ1, ApproximationMethod::SankaranZ2];

    #[test]
    fn square_root_forms_overestimate_at_small_noncentrality() {
        for m2 in [0.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
            let d = NoncentralChiSquare::new(4, m2, 1.0).unwrap();
            let exact = numeric_quantile(&d, t(1e-6)).unwrap();
            for m in SQRT_FORMS {
                let a = approx_threshold(m, &d, t(1e-6));
                assert!(a.value > 10.0 * exact, "{} m2={m2}", m.name());
            }
        }
    }

    #[test]
    fn square_root_forms_converge_from_above() {
        for m in SQRT_FORMS {
            let mut last = f64::INFINITY;
            for m2 in [40.0, 80.0, 120.0, 200.0, 400.0] {
                let d = NoncentralChiSquare::new(4, m2, 1.0).unwrap();
                let exact = numeric_quantile(&d, t(1e-6)).unwrap();
                let a = approx_threshold(m, &d, t(1e-6));
                assert!(a.valid && a.value > exact, "{} m2={m2}", m.name());
                let rel = a.value / exact - 1.0;
                assert!(rel < last, "{} m2={m2}", m.name());
                last = rel;
            }
            assert!(last < 1e-3);
        }
    }

    #[test]
    fn approximations_exceed_target_at_120() {
        // the outage actually achieved is a few percent above epsilon
        let d = NoncentralChiSquare::new(4, 120.0, 1.0).unwrap();
        for m in SQRT_FORMS {
            let out = cdf(&d, approx_threshold(m, &d, t(1e-6)).value) / 1e-6;
            assert!((1.02..=1.05).contains(&out), "{} {out}", m.name());
        }
        let first = cdf(&d, approx_threshold(ApproximationMethod::AbdelAtyFirst, &d, t(1e-6)).value);
        let closer = cdf(&d, approx_threshold(ApproximationMethod::AbdelAtyCloser, &d, t(1e-6)).value);
        assert!(1e-6 < closer && closer < first);
    }

    #[test]
    fn first_cube_root_form_overestimates_across_the_sweep() {
        // below M^2 = 8 the base turns negative or crosses zero
        for i in 4..=100 {
            let d = NoncentralChiSquare::new(4, 2.0 * i as f64, 1.0).unwrap();
            let exact = numeric_quantile(&d, t(1e-6)).unwrap();
            let a = approx_threshold(ApproximationMethod::AbdelAtyFirst, &d, t(1e-6));
            assert!(a.valid && a.value > exact, "m2={}", 2 * i);
        }
    }

    #[test]
    fn cube_root_variants_degrade_at_small_noncentrality() {
        // central, 4 dof, 1e-6: the cube-root base turns negative
        let d = NoncentralChiSquare::central(4, 1.0).unwrap();
        let a = approx_threshold(ApproximationMethod::AbdelAtyFirst, &d, t(1e-6));
        assert!(!a.valid && a.value < 0.0);
    }

    #[test]
    fn goldstein_accurate_for_many_dof() {
        let d = NoncentralChiSquare::central(50, 1.0).unwrap();
        let a = approx_threshold(ApproximationMethod::Goldstein, &d, t(1e-3));
        // exact chi^2_50 quantile at 1e-3
        assert!((a.value - 24.673_905_271_877_26).abs() < 1e-3);
    }

    #[test]
    fn zar_reduces_to_fisher() {
        let d = NoncentralChiSquare::central(10, 1.0).unwrap();
        let z = normal_quantile(0.05);
        let want = 0.5 * (z + 19f64.sqrt()).powi(2);
        let a = approx_threshold(ApproximationMethod::Zar, &d, t(0.05));
        assert!((a.value - want).abs() < 1e-12);
    }

    #[test]
    fn regression_recovers_exact_quadratic() {
        let pts: Vec<(f64, f64)> =
            (0..=100).map(|i| (2.0 * i as f64, 1.5 - 0.25 * (2 * i) as f64 + 3e-3 * (4 * i * i) as f64)).collect();
        let f = fit_regression(&pts, false).unwrap();
        assert!((f.a0 - 1.5).abs() < 1e-10);
        assert!((f.a1 + 0.25).abs() < 1e-10);
        assert!((f.a2 - 3e-3).abs() < 1e-12);
        let g = fit_regression(&pts, true).unwrap();
        assert_eq!(g.a0, 1.5);
        assert!((g.a1 + 0.25).abs() < 1e-10);
    }

    #[test]
    fn regression_rejects_singular_design() {
        let pts = [(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)];
        assert!(matches!(fit_regression(&pts, false), Err(Error::SingularDesign(_))));
        let pts = [(0.0, 2.0), (1.0, 3.0)];
        assert!(matches!(fit_regression(&pts, false), Err(Error::SingularDesign(_))));
        assert!(matches!(fit_regression(&pts, true), Err(Error::SingularDesign(_))));
        let pts = [(0.0, 2.0), (1.0, 3.0), (2.0, 5.0)];
        let f = fit_regression(&pts, true).unwrap();
        assert!((f.predict(1.0) - 3.0).abs() < 1e-12 && (f.predict(2.0) - 5.0).abs() < 1e-12);
        assert!(fit_regression(&pts[1..], true).is_err());
    }

    fn threshold_sweep() -> Vec<(f64, f64)> {
        (0..=100)
            .map(|i| {
                let m2 = 2.0 * i as f64;
                let d = NoncentralChiSquare::new(4, m2, 1.0).unwrap();
                (m2, numeric_quantile(&d, t(1e-6)).unwrap())
            })
            .collect()
    }

    #[test]
    fn regression_fits_misbehave_on_the_threshold_sweep() {
        let pts = threshold_sweep();
        let free = fit_regression(&pts, false).unwrap();
        assert!(pts.iter().any(|&(x, _)| x <= 20.0 && free.predict(x) < 0.0));
        let anchored = fit_regression(&pts, true).unwrap();
        assert!((0..=200).all(|x| anchored.predict(x as f64) > 0.0));
        assert!(pts.iter().any(|&(x, y)| anchored.predict(x) > y));
    }
}
