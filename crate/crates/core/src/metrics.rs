//! Normalized views of the bound: the ratio to the mean gain, its inverse
//! relation to epsilon, and the scale and diversity identities it satisfies.

use crate::distribution::{NoncentralChiSquare, ReliabilityTarget};
use crate::error::{invalid, Error, Result};
use crate::solver::{solve_noncentral, SolverConfig};

/// How close a bound sits to the mean gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosenessReport {
    pub rho: f64,
    /// `bound / E[beta]`, strictly inside `(0, 1)`.
    pub lambda: f64,
    /// Outage level whose Chernoff bound is exactly `bound`.
    pub epsilon: f64,
    pub dof: u32,
}

impl ClosenessReport {
    /// `rho / K`, the per-dimension non-centrality.
    pub fn rho_per_dof(&self) -> f64 {
        self.rho / self.dof as f64
    }
}

/// `lambda = bound / E[beta]`.
pub fn lambda_ratio(bound: f64, dist: &NoncentralChiSquare) -> f64 {
    bound / dist.mean()
}

/// Closeness of `bound` to the mean of `dist`.
pub fn closeness(dist: &NoncentralChiSquare, bound: f64) -> Result<ClosenessReport> {
    if !(bound > 0.0 && bound < dist.mean()) {
        return Err(Error::Domain(format!(
            "bound {bound} outside (0, mean = {})",
            dist.mean()
        )));
    }
    let lambda = lambda_ratio(bound, dist);
    Ok(ClosenessReport {
        rho: dist.rho(),
        lambda,
        epsilon: epsilon_from_lambda(lambda, dist.rho(), dist.dof())?,
        dof: dist.dof(),
    })
}

/// Chernoff `lambda` for unit-variance components with `K` degrees of
/// freedom and normalized non-centrality `rho`.
pub fn lambda_for(dof: u32, rho: f64, target: ReliabilityTarget, cfg: &SolverConfig) -> Result<f64> {
    let d = NoncentralChiSquare::from_rho(dof, rho, 1.0)?;
    Ok(lambda_ratio(solve_noncentral(&d, target, cfg)?.bound, &d))
}

fn check_lambda(lambda: f64, rho: f64, dof: u32) -> Result<()> {
    if dof == 0 || !(rho >= 0.0) || !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!(
            "need dof >= 1, rho >= 0 and 0 < lambda < 1 (got {dof}, {rho}, {lambda})"
        )));
    }
    Ok(())
}

/// Natural log of the epsilon whose Chernoff bound sits at `lambda E[beta]`.
///
/// With `beta = lambda (rho + K)`, `D = K^2 + 4 beta rho` and
/// `u = (K + sqrt(D)) / (2 beta)`:
/// `ln epsilon = (sqrt(D) - rho - beta) / 2 - (K / 2) ln u`.
pub fn ln_epsilon_from_lambda(lambda: f64, rho: f64, dof: u32) -> Result<f64> {
    check_lambda(lambda, rho, dof)?;
    let k = dof as f64;
    let beta = lambda * (rho + k);
    let sqrt_d = (k * k + 4.0 * beta * rho).sqrt();
    let u = (k + sqrt_d) / (2.0 * beta);
    Ok(0.5 * (sqrt_d - rho - beta) - 0.5 * k * u.ln())
}

/// Inverse map `lambda -> epsilon` of the Chernoff bound.
pub fn epsilon_from_lambda(lambda: f64, rho: f64, dof: u32) -> Result<f64> {
    Ok(ln_epsilon_from_lambda(lambda, rho, dof)?.exp())
}

/// `d log10(epsilon) / d lambda` along the Chernoff curve.
///
/// The minimized objective has derivative `nu*` in the threshold, so this is
/// `nu* (rho + K) / ln 10 = (K + sqrt(D) - 2 beta) / (4 lambda ln 10)`.
/// Positive on `(0, 1)`, decreasing in `lambda` and unbounded as `lambda -> 0`.
pub fn epsilon_sensitivity(lambda: f64, rho: f64, dof: u32) -> Result<f64> {
    check_lambda(lambda, rho, dof)?;
    let k = dof as f64;
    let beta = lambda * (rho + k);
    let sqrt_d = (k * k + 4.0 * beta * rho).sqrt();
    Ok((k + sqrt_d - 2.0 * beta) / (4.0 * lambda * std::f64::consts::LN_10))
}

/// `epsilon^(2 / K)`, the per-dimension outage level that stays fixed along
/// lines of equal `lambda` when the non-centrality grows linearly with `K`.
pub fn diversity_equivalent_epsilon(dof: u32, epsilon: f64) -> f64 {
    epsilon.powf(2.0 / dof as f64)
}

/// Relative deviation `|b(eta) - eta b(1)| / (eta b(1))`, where `b(eta)` is
/// the bound after scaling both `M^2` and `sigma^2` by `eta`.
pub fn check_scaling(
    dist: &NoncentralChiSquare,
    target: ReliabilityTarget,
    eta: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(invalid("scale factor must be positive"));
    }
    let base = solve_noncentral(dist, target, cfg)?.bound;
    let scaled = solve_noncentral(&dist.scaled(eta)?, target, cfg)?.bound;
    Ok((scaled - eta * base).abs() / (eta * base))
}
