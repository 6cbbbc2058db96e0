//! Chernoff lower bounds on the outage threshold.
//!
//! For any `nu >= 0`, `P(beta <= b) <= s(nu, b) = exp(nu b) E[exp(-nu beta)]`.
//! The bound is the largest `b` (up to the search resolution) whose minimized
//! objective still does not exceed `epsilon`, so the true outage probability
//! at the returned threshold is at most `epsilon`.
//!
//! Three routes are provided:
//! * [`solve_noncentral`] uses the closed-form minimizer over `nu`;
//! * [`solve_general`] handles unequal component variances by searching `nu`
//!   on the sign of the analytic derivative;
//! * [`solve_central`] works directly with the closed-form central objective
//!   and serves as an independent cross-check when `M^2 = 0`.

use crate::cdf::cdf;
use crate::distribution::{GeneralizedChiSquare, NoncentralChiSquare, ReliabilityTarget};
use crate::error::{invalid, Error, Result};

/// Resolution of the bisection on the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Fraction of the mean gain `E[beta]`.
    Relative(f64),
    /// Absolute width in gain units.
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub delta_beta: Tolerance,
    /// Bracket width at which the search over `nu` stops.
    pub delta_nu: f64,
    /// First upper guess for `nu`.
    pub nu_initial: f64,
    /// Growth factor for the upper `nu` guess.
    pub growth: f64,
    /// Cap on iterations of every individual loop.
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta_beta: Tolerance::Relative(1e-4),
            delta_nu: 1e-9,
            nu_initial: 1.0,
            growth: 2.0,
            max_iters: 4096,
        }
    }
}

impl SolverConfig {
    pub fn with_delta_beta(mut self, tol: Tolerance) -> Self {
        self.delta_beta = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let db = match self.delta_beta {
            Tolerance::Relative(v) | Tolerance::Absolute(v) => v,
        };
        if !(db > 0.0) || !db.is_finite() {
            return Err(invalid("delta_beta must be positive and finite"));
        }
        if !(self.delta_nu > 0.0) {
            return Err(invalid("delta_nu must be positive"));
        }
        if !(self.nu_initial > 0.0) || !self.nu_initial.is_finite() {
            return Err(invalid("nu_initial must be positive and finite"));
        }
        if !(self.growth > 1.0) || !self.growth.is_finite() {
            return Err(invalid("growth factor must exceed 1"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        Ok(())
    }

    /// Absolute bisection width for a distribution with mean `mean`.
    pub fn beta_resolution(&self, mean: f64) -> f64 {
        match self.delta_beta {
            Tolerance::Relative(r) => r * mean,
            Tolerance::Absolute(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Noncentral,
    General,
    Central,
}

/// Iteration counts of the loops that produced a bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Iterations {
    /// Bisection steps on the threshold.
    pub outer: usize,
    /// Total growth steps of the upper `nu` guess (general solver).
    pub nu_growth: usize,
    /// Total bisection steps on `nu` (general solver).
    pub nu_bisection: usize,
    /// Halvings needed when the root lies below the bisection resolution.
    pub refinement: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// Lower bound on the outage threshold.
    pub bound: f64,
    /// Chernoff parameter at which the objective was evaluated.
    pub nu_star: f64,
    /// `s(nu_star, bound)`, never above epsilon.
    pub objective_at_bound: f64,
    /// Exact `P(beta <= bound)`, when requested.
    pub verified_cdf: Option<f64>,
    pub method: BoundMethod,
    pub iterations: Iterations,
    /// Set when the root was below the bisection resolution and had to be
    /// located by repeated halving.
    pub below_resolution: bool,
}

impl BoundReport {
    /// Attaches the exact CDF of `dist` at the bound.
    pub fn verified(mut self, dist: &NoncentralChiSquare) -> Self {
        self.verified_cdf = Some(cdf(dist, self.bound));
        self
    }

    /// Attaches the exact CDF when `dist` has equal component variances.
    pub fn verified_general(mut self, dist: &GeneralizedChiSquare) -> Self {
        if let Some(nc) = dist.as_noncentral(1e-12) {
            self.verified_cdf = Some(cdf(&nc, self.bound));
        }
        self
    }
}

/// `ln s(nu, beta)` for a generalized chi-squared variable.
pub fn ln_objective_general(dist: &GeneralizedChiSquare, nu: f64, beta: f64) -> f64 {
    nu * beta + dist.ln_mgf_reciprocal(nu)
}

/// `s(nu, beta)` for a generalized chi-squared variable.
pub fn objective_general(dist: &GeneralizedChiSquare, nu: f64, beta: f64) -> f64 {
    ln_objective_general(dist, nu, beta).exp()
}

/// `ln s(nu, beta) = nu beta - nu M^2 / u - (K / 2) ln u`, `u = 1 + 2 sigma^2 nu`.
pub fn ln_objective_noncentral(dist: &NoncentralChiSquare, nu: f64, beta: f64) -> f64 {
    nu * beta + dist.ln_mgf_reciprocal(nu)
}

/// `s(nu, beta)` for a scaled non-central chi-squared variable.
pub fn objective_noncentral(dist: &NoncentralChiSquare, nu: f64, beta: f64) -> f64 {
    ln_objective_noncentral(dist, nu, beta).exp()
}

/// The `d s / d nu` sign function: `beta - sum [mu^2 / u^2 + sigma^2 / u]`.
///
/// `d s / d nu = s * stationarity_general(...)`, and the expression increases
/// with `nu`, so its sign locates the minimizer.
pub fn stationarity_general(dist: &GeneralizedChiSquare, nu: f64, beta: f64) -> f64 {
    let pull: f64 = dist
        .components()
        .iter()
        .map(|c| {
            let u = 1.0 + 2.0 * c.var * nu;
            c.mean * c.mean / (u * u) + c.var / u
        })
        .sum();
    beta - pull
}

/// Minimizer of `s(., beta)` for `0 < beta < E[beta]`.
///
/// Algebraically `(K sigma^2 + sqrt(D)) / (4 sigma^2 beta) - 1 / (2 sigma^2)` with
/// `D = K^2 sigma^4 + 4 beta M^2`. It is evaluated as
/// `(mean - beta) / (2 sigma^2 beta (1 + 2 M^2 / (sqrt(D) + K sigma^2)))`,
/// which has no subtraction of nearly equal terms for `beta` near zero or
/// near the mean.
pub fn optimal_nu(dist: &NoncentralChiSquare, beta: f64) -> Result<f64> {
    let mean = dist.mean();
    if !(beta > 0.0) || beta >= mean {
        return Err(Error::Domain(format!(
            "optimal nu requires 0 < beta < E[beta] = {mean}, got {beta}"
        )));
    }
    let var = dist.var();
    let m2 = dist.noncentrality();
    let kv = dist.dof() as f64 * var;
    let sqrt_d = (kv * kv + 4.0 * beta * m2).sqrt();
    Ok((mean - beta) / (2.0 * var * beta * (1.0 + 2.0 * m2 / (sqrt_d + kv))))
}

/// `min_nu ln s(nu, beta)` for `0 < beta < E[beta]`, together with the minimizer.
pub fn min_ln_objective(dist: &NoncentralChiSquare, beta: f64) -> Result<(f64, f64)> {
    let nu = optimal_nu(dist, beta)?;
    Ok((ln_objective_noncentral(dist, nu, beta), nu))
}

/// Chernoff lower bound for a scaled non-central chi-squared gain.
///
/// Bisection on `beta` over `[0, E[beta]]`: the midpoint becomes the new
/// upper end when the minimized objective exceeds `epsilon`, otherwise the
/// new lower end. The lower end is returned, so the bound is never above the
/// root of `min_nu s(nu, beta) = epsilon`.
pub fn solve_noncentral(
    dist: &NoncentralChiSquare,
    target: ReliabilityTarget,
    cfg: &SolverConfig,
) -> Result<BoundReport> {
    cfg.validate()?;
    let ln_eps = target.ln_epsilon();
    let g = |beta: f64| min_ln_objective(dist, beta).map(|(l, _)| l);
    let (bound, iterations, below) =
        bisect_threshold(dist.mean(), cfg, ln_eps, "non-central bisection", g)?;
    let (ln_s, nu) = min_ln_objective(dist, bound)?;
    Ok(BoundReport {
        bound,
        nu_star: nu,
        objective_at_bound: ln_s.exp(),
        verified_cdf: None,
        method: BoundMethod::Noncentral,
        iterations,
        below_resolution: below,
    })
}

/// Chernoff lower bound for a generalized chi-squared gain with arbitrary
/// component means and variances.
///
/// For each candidate threshold the objective is minimized over `nu` in two
/// loops: the upper guess grows geometrically until the derivative turns
/// non-negative, then the bracket is bisected on the derivative sign down to
/// `delta_nu`.
pub fn solve_general(
    dist: &GeneralizedChiSquare,
    target: ReliabilityTarget,
    cfg: &SolverConfig,
) -> Result<BoundReport> {
    cfg.validate()?;
    let ln_eps = target.ln_epsilon();
    let mut growth = 0;
    let mut bisection = 0;
    let (bound, mut iterations, below) = {
        let g = |beta: f64| {
            let m = minimize_nu(dist, beta, cfg)?;
            growth += m.growth;
            bisection += m.bisection;
            Ok(m.ln_s)
        };
        bisect_threshold(dist.mean(), cfg, ln_eps, "generalized bisection", g)?
    };
    // same deterministic search that certified the bound inside the loop
    let m = minimize_nu(dist, bound, cfg)?;
    iterations.nu_growth = growth;
    iterations.nu_bisection = bisection;
    Ok(BoundReport {
        bound,
        nu_star: m.nu,
        objective_at_bound: m.ln_s.exp(),
        verified_cdf: None,
        method: BoundMethod::General,
        iterations,
        below_resolution: below,
    })
}

struct NuSearch {
    nu: f64,
    ln_s: f64,
    growth: usize,
    bisection: usize,
}

fn minimize_nu(dist: &GeneralizedChiSquare, beta: f64, cfg: &SolverConfig) -> Result<NuSearch> {
    let mut lo = 0.0;
    let mut hi = cfg.nu_initial;
    let mut growth = 0;
    while stationarity_general(dist, hi, beta) < 0.0 {
        lo = hi;
        hi *= cfg.growth;
        growth += 1;
        if growth > cfg.max_iters || !hi.is_finite() {
            return Err(Error::IterationCap { what: "nu growth loop", cap: cfg.max_iters });
        }
    }
    let mut bisection = 0;
    while hi - lo > cfg.delta_nu {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket is down to adjacent floats
        }
        if stationarity_general(dist, mid, beta) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        bisection += 1;
        if bisection > cfg.max_iters {
            return Err(Error::IterationCap { what: "nu bisection loop", cap: cfg.max_iters });
        }
    }
    let nu = 0.5 * (lo + hi);
    Ok(NuSearch { nu, ln_s: ln_objective_general(dist, nu, beta), growth, bisection })
}

/// Chernoff lower bound for a central chi-squared gain (`M^2 = 0`).
///
/// Uses the closed-form optimum `ln s = K/2 - beta/(2 sigma^2) + (K/2) ln(beta / (K sigma^2))`
/// and its minimizer `nu* = K / (2 beta) - 1 / (2 sigma^2)`.
pub fn solve_central(
    dof: u32,
    var: f64,
    target: ReliabilityTarget,
    cfg: &SolverConfig,
) -> Result<BoundReport> {
    cfg.validate()?;
    if dof == 0 {
        return Err(invalid("degrees of freedom must be at least 1"));
    }
    if !(var > 0.0) || !var.is_finite() {
        return Err(invalid("variance must be positive and finite"));
    }
    let k = dof as f64;
    let mean = k * var;
    let g = |beta: f64| Ok(central_ln_objective(k, var, beta));
    let (bound, iterations, below) =
        bisect_threshold(mean, cfg, target.ln_epsilon(), "central bisection", g)?;
    Ok(BoundReport {
        bound,
        nu_star: (k * var - bound) / (2.0 * var * bound),
        objective_at_bound: central_ln_objective(k, var, bound).exp(),
        verified_cdf: None,
        method: BoundMethod::Central,
        iterations,
        below_resolution: below,
    })
}

fn central_ln_objective(k: f64, var: f64, beta: f64) -> f64 {
    let r = beta / (k * var);
    0.5 * k * (1.0 - r + r.ln())
}

// Shared outer loop. `g` is the minimized log-objective, increasing in beta.
fn bisect_threshold<G>(
    mean: f64,
    cfg: &SolverConfig,
    ln_eps: f64,
    what: &'static str,
    mut g: G,
) -> Result<(f64, Iterations, bool)>
where
    G: FnMut(f64) -> Result<f64>,
{
    let res = cfg.beta_resolution(mean);
    let mut it = Iterations::default();
    let mut lo = 0.0;
    let mut up = mean;
    while up - lo > res {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if g(mid)? > ln_eps {
            up = mid;
        } else {
            lo = mid;
        }
        it.outer += 1;
        if it.outer > cfg.max_iters {
            return Err(Error::IterationCap { what, cap: cfg.max_iters });
        }
    }
    if lo > 0.0 {
        return Ok((lo, it, false));
    }
    // every midpoint failed: the root is in (0, up]; halve until certified
    let mut b = up;
    loop {
        b *= 0.5;
        it.refinement += 1;
        if b == 0.0 || it.refinement > cfg.max_iters {
            return Err(Error::IterationCap { what, cap: cfg.max_iters });
        }
        if g(b)? <= ln_eps {
            return Ok((b, it, true));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn target(eps: f64) -> ReliabilityTarget {
        ReliabilityTarget::new(eps).unwrap()
    }

    #[test]
    fn optimal_nu_matches_textbook_form() {
        for &(k, m2, var) in &[(1u32, 0.0, 1.0), (4, 10.0, 1.0), (8, 300.0, 0.5), (24, 1.0, 2.0)] {
            let d = NoncentralChiSquare::new(k, m2, var).unwrap();
            for &f in &[1e-6, 0.01, 0.3, 0.9, 0.999] {
                let beta = f * d.mean();
                let kv = k as f64 * var;
                let disc = kv * kv + 4.0 * beta * m2;
                let want = (kv + disc.sqrt()) / (4.0 * var * beta) - 1.0 / (2.0 * var);
                let got = optimal_nu(&d, beta).unwrap();
                assert!(((got - want) / want).abs() < 1e-9, "k={k} m2={m2} f={f}");
            }
        }
    }

    #[test]
    fn optimal_nu_is_stationary() {
        let d = NoncentralChiSquare::new(6, 40.0, 1.5).unwrap();
        let g = d.to_generalized();
        for &f in &[0.05, 0.4, 0.8] {
            let beta = f * d.mean();
            let nu = optimal_nu(&d, beta).unwrap();
            assert!(stationarity_general(&g, nu, beta).abs() < 1e-10 * beta);
        }
    }

    #[test]
    fn optimal_nu_domain() {
        let d = NoncentralChiSquare::new(2, 1.0, 1.0).unwrap();
        assert!(matches!(optimal_nu(&d, 3.0), Err(Error::Domain(_))));
        assert!(matches!(optimal_nu(&d, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_minimum_matches_direct_evaluation() {
        let d = NoncentralChiSquare::new(5, 12.0, 0.8).unwrap();
        let beta = 4.0;
        let (ln_s, nu) = min_ln_objective(&d, beta).unwrap();
        assert!((ln_s - ln_objective_noncentral(&d, nu, beta)).abs() < 1e-13);
        for &dn in &[-1e-3, 1e-3] {
            assert!(ln_objective_noncentral(&d, nu + dn, beta) > ln_s);
        }
    }

    #[test]
    fn bound_is_conservative_and_objective_certified() {
        let d = NoncentralChiSquare::new(4, 120.0, 1.0).unwrap();
        let r = solve_noncentral(&d, target(1e-6), &SolverConfig::default()).unwrap().verified(&d);
        assert!(r.objective_at_bound <= 1e-6);
        assert!(r.verified_cdf.unwrap() <= 1e-6);
        assert!(!r.below_resolution);
        assert_eq!(r.objective_at_bound, objective_noncentral(&d, r.nu_star, r.bound));
    }

    #[test]
    fn outer_iterations_follow_resolution() {
        // mean / delta_beta = 256 needs 8 halvings
        let d = NoncentralChiSquare::new(8, 248.0, 1.0).unwrap();
        let cfg = SolverConfig::default().with_delta_beta(Tolerance::Absolute(1.0));
        let r = solve_noncentral(&d, target(1e-3), &cfg).unwrap();
        assert_eq!(r.iterations.outer, 8);
    }

    #[test]
    fn general_agrees_with_noncentral_on_equal_variances() {
        let d = NoncentralChiSquare::new(4, 50.0, 1.0).unwrap();
        let g = GeneralizedChiSquare::new([(5.0, 1.0), (5.0, 1.0), (0.0, 1.0), (0.0, 1.0)]).unwrap();
        let cfg = SolverConfig::default();
        let a = solve_noncentral(&d, target(1e-5), &cfg).unwrap();
        let b = solve_general(&g, target(1e-5), &cfg).unwrap();
        assert!((a.bound - b.bound).abs() <= 2.0 * 1e-4 * d.mean());
        assert!(b.objective_at_bound <= 1e-5);
        assert!(b.iterations.nu_bisection > 0);
    }

    #[test]
    fn central_route_matches_noncentral_route() {
        let cfg = SolverConfig::default();
        for k in [1u32, 2, 7, 30] {
            let a = solve_central(k, 1.3, target(1e-4), &cfg).unwrap();
            let d = NoncentralChiSquare::central(k, 1.3).unwrap();
            let b = solve_noncentral(&d, target(1e-4), &cfg).unwrap();
            assert!((a.bound - b.bound).abs() <= 1e-4 * d.mean(), "k={k}");
            let nu_b = optimal_nu(&d, a.bound).unwrap();
            assert!(((a.nu_star - nu_b) / nu_b).abs() < 1e-9);
        }
    }

    #[test]
    fn tiny_roots_use_refinement() {
        // K = 1 central at 1e-9 has its root near 4e-19, far below the resolution
        let d = NoncentralChiSquare::central(1, 1.0).unwrap();
        let r = solve_noncentral(&d, target(1e-9), &SolverConfig::default()).unwrap().verified(&d);
        assert!(r.below_resolution);
        assert!(r.bound > 1e-19 && r.bound < 1e-17);
        assert!(r.objective_at_bound <= 1e-9);
        assert!(r.verified_cdf.unwrap() <= 1e-9);
    }

    #[test]
    fn bad_config_rejected() {
        let d = NoncentralChiSquare::central(2, 1.0).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.growth = 1.0;
        assert!(matches!(solve_noncentral(&d, target(0.1), &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn iteration_cap_reported() {
        let d = NoncentralChiSquare::new(4, 10.0, 1.0).unwrap();
        let mut cfg = SolverConfig::default().with_delta_beta(Tolerance::Relative(1e-12));
        cfg.max_iters = 5;
        assert!(matches!(
            solve_noncentral(&d, target(1e-3), &cfg),
            Err(Error::IterationCap { .. })
        ));
    }
}
