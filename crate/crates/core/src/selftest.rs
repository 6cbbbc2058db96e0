//! Fast invariant checks run by the `selftest` command.
//!
//! Everything here finishes in seconds and is deterministic for a given seed.

use crate::cdf::{cdf, sf};
use crate::distribution::{NoncentralChiSquare, ReliabilityTarget};
use crate::metrics::{check_scaling, epsilon_from_lambda, lambda_for};
use crate::mimo::{draw_channel, mf_beamformer, realized_gain, MarkovChannelParams};
use crate::ris::{product_moments, sample_gain, RisConfig};
use crate::rng::substream;
use crate::sampling::sample_noncentral;
use crate::solver::{solve_central, solve_noncentral, SolverConfig, Tolerance};
use crate::special::bessel_j0;

/// Functions the checks depend on, replaceable to confirm that a broken
/// implementation is caught.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub j0: fn(f64) -> f64,
}

impl Default for Hooks {
    fn default() -> Self {
        Self { j0: bessel_j0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub checks: Vec<Check>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn run(seed: u64) -> Summary {
    run_with(seed, Hooks::default())
}

pub fn run_with(seed: u64, hooks: Hooks) -> Summary {
    let checks = vec![
        bessel_values(hooks),
        complementarity(),
        conservative_grid(),
        central_routes(),
        scaling(),
        diversity(),
        inverse_map(),
        sampler_matches_cdf(seed),
        beamformer_gain(seed),
        ris_moments(seed),
    ];
    Summary { checks }
}

fn bessel_values(hooks: Hooks) -> Check {
    // J0 at its first zero and at the default channel-aging argument (scipy)
    let zero = (hooks.j0)(2.404_825_557_695_773);
    let p = MarkovChannelParams::default();
    let x = 2.0 * std::f64::consts::PI * p.doppler_hz() * p.lag_s;
    let at = (hooks.j0)(x);
    let err = (at - 0.869_934_665_259_014_3).abs().max(zero.abs()).max(((hooks.j0)(0.0) - 1.0).abs());
    check("bessel_j0", err < 1e-12, format!("max abs error {err:.3e}"))
}

fn complementarity() -> Check {
    let mut worst = 0.0f64;
    for k in [1u32, 4, 16] {
        for rho in [0.0, 10.0, 300.0] {
            let d = NoncentralChiSquare::from_rho(k, rho, 1.0).expect("valid");
            for f in [0.3, 1.0, 1.7] {
                let x = f * d.mean();
                worst = worst.max((cdf(&d, x) + sf(&d, x) - 1.0).abs());
            }
        }
    }
    check("cdf_plus_sf", worst < 1e-12, format!("max |F + S - 1| {worst:.3e}"))
}

fn conservative_grid() -> Check {
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for k in [1u32, 4, 16] {
        for rho in [0.0, 10.0, 300.0] {
            for eps in [1e-3, 1e-9] {
                let d = NoncentralChiSquare::from_rho(k, rho, 1.0).expect("valid");
                let t = ReliabilityTarget::new(eps).expect("valid");
                match solve_noncentral(&d, t, &cfg) {
                    Ok(r) => {
                        let f = cdf(&d, r.bound) / eps;
                        worst = worst.max(f);
                        failures += usize::from(f > 1.0);
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    check("bound_below_threshold", failures == 0, format!("max F(bound)/eps {worst:.4}"))
}

fn central_routes() -> Check {
    let cfg = SolverConfig::default().with_delta_beta(Tolerance::Relative(1e-12));
    let t = ReliabilityTarget::new(1e-6).expect("valid");
    let mut worst = 0.0f64;
    for k in [2u32, 8, 24] {
        let a = solve_central(k, 1.0, t, &cfg).map(|r| r.bound);
        let b = NoncentralChiSquare::central(k, 1.0).and_then(|d| solve_noncentral(&d, t, &cfg)).map(|r| r.bound);
        worst = match (a, b) {
            (Ok(a), Ok(b)) => worst.max(((a - b) / a).abs()),
            _ => f64::INFINITY,
        };
    }
    check("central_routes_agree", worst < 1e-10, format!("max relative gap {worst:.3e}"))
}

fn scaling() -> Check {
    let cfg = SolverConfig::default();
    let t = ReliabilityTarget::new(1e-6).expect("valid");
    let d = NoncentralChiSquare::new(4, 10.0, 1.0).expect("valid");
    let worst = [0.1, 3.0, 10.0]
        .iter()
        .map(|&eta| check_scaling(&d, t, eta, &cfg).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    check("scaling_law", worst <= 2e-4, format!("max relative error {worst:.3e}"))
}

fn diversity() -> Check {
    let cfg = SolverConfig::default().with_delta_beta(Tolerance::Relative(1e-12));
    let l = |k: u32, eps: f64| {
        ReliabilityTarget::new(eps).and_then(|t| lambda_for(k, 50.0 * k as f64, t, &cfg)).unwrap_or(f64::NAN)
    };
    let base = l(2, 0.1);
    let gap = (l(4, 1e-2) - base).abs().max((l(6, 1e-3) - base).abs());
    check("diversity_identity", gap <= 1e-3, format!("max lambda gap {gap:.3e}"))
}

fn inverse_map() -> Check {
    let cfg = SolverConfig::default().with_delta_beta(Tolerance::Relative(1e-12));
    let mut worst = 0.0f64;
    for (k, rho, eps) in [(1u32, 5.0, 1e-3), (8, 100.0, 1e-6), (16, 400.0, 1e-9)] {
        let rel = ReliabilityTarget::new(eps)
            .and_then(|t| lambda_for(k, rho, t, &cfg))
            .and_then(|l| epsilon_from_lambda(l, rho, k))
            .map(|e| ((e - eps) / eps).abs())
            .unwrap_or(f64::INFINITY);
        worst = worst.max(rel);
    }
    check("epsilon_inverse", worst < 1e-6, format!("max relative error {worst:.3e}"))
}

fn sampler_matches_cdf(seed: u64) -> Check {
    let d = NoncentralChiSquare::new(4, 10.0, 1.0).expect("valid");
    let n = 100_000u64;
    let xs = sample_noncentral(&d, n, seed);
    let mut worst = 0.0f64;
    for q in [0.2, 0.5, 1.0, 1.5, 2.0] {
        let x = q * d.mean();
        let f = cdf(&d, x);
        let emp = xs.iter().filter(|&&v| v <= x).count() as f64 / n as f64;
        worst = worst.max((emp - f).abs() / (f * (1.0 - f) / n as f64).sqrt());
    }
    check("sampler_vs_cdf", worst < 4.0, format!("max deviation {worst:.2} standard errors"))
}

fn beamformer_gain(seed: u64) -> Check {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let h = draw_channel(2, 16, &mut substream(seed, i));
        worst = match mf_beamformer(&h).and_then(|w| realized_gain(&h, &w)) {
            Ok(g) => worst.max((g - 1.0).abs()),
            Err(_) => f64::INFINITY,
        };
    }
    check("beamformer_unit_gain", worst < 1e-12, format!("max |gain - 1| {worst:.3e}"))
}

fn ris_moments(seed: u64) -> Check {
    let n = 100_000u64;
    let dev = RisConfig::new(4, 3.0, 3.0, n, seed)
        .and_then(|cfg| {
            let (m, v) = product_moments(3.0, 3.0)?;
            let want = 16.0 * m * m + 4.0 * v;
            let xs = sample_gain(&cfg, n, seed)?;
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Ok((mean - want).abs() / (var / n as f64).sqrt())
        })
        .unwrap_or(f64::INFINITY);
    check("ris_gain_mean", dev < 4.0, format!("deviation {dev:.2} standard errors"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_and_is_deterministic() {
        let a = run(1);
        assert!(a.passed(), "{}", a.render());
        assert_eq!(a.render(), run(1).render());
    }

    fn off_by_a_little(x: f64) -> f64 {
        bessel_j0(x) + 1e-6
    }

    #[test]
    fn wrong_bessel_is_caught() {
        let s = run_with(1, Hooks { j0: off_by_a_little });
        assert!(!s.passed());
        assert_eq!(s.checks.iter().filter(|c| !c.passed).count(), 1);
    }
}
