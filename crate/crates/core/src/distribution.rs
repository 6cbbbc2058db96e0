//! Parameter types for generalized and non-central chi-squared variables.
//!
//! A generalized chi-squared variable is `beta = sum_k alpha_k^2` with
//! independent `alpha_k ~ N(mu_k, sigma_k^2)`. When every component shares the
//! same variance it reduces to a scaled non-central chi-squared variable,
//! described by the degrees of freedom `K`, the non-centrality `M^2 = sum mu_k^2`
//! and the common variance.

use crate::error::{invalid, Result};

/// One Gaussian component `alpha_k ~ N(mean, var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub mean: f64,
    pub var: f64,
}

/// Generalized chi-squared variable described by its Gaussian components.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedChiSquare {
    components: Vec<Component>,
}

impl GeneralizedChiSquare {
    /// Builds the distribution from `(mean, variance)` pairs.
    pub fn new(components: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let components: Vec<Component> = components
            .into_iter()
            .map(|(mean, var)| Component { mean, var })
            .collect();
        if components.is_empty() {
            return Err(invalid("at least one component is required"));
        }
        for (k, c) in components.iter().enumerate() {
            if !c.mean.is_finite() {
                return Err(invalid(format!("component {k}: mean must be finite")));
            }
            if !(c.var > 0.0) || !c.var.is_finite() {
                return Err(invalid(format!("component {k}: variance must be positive and finite")));
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Number of components `K`.
    pub fn dof(&self) -> usize {
        self.components.len()
    }

    /// `E[beta] = sum (mu_k^2 + sigma_k^2)`.
    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.mean * c.mean + c.var).sum()
    }

    /// Returns the equivalent non-central form when all variances agree to
    /// within `rel_tol`.
    pub fn as_noncentral(&self, rel_tol: f64) -> Option<NoncentralChiSquare> {
        let v0 = self.components[0].var;
        if self.components.iter().any(|c| (c.var - v0).abs() > rel_tol * v0) {
            return None;
        }
        let m2 = self.components.iter().map(|c| c.mean * c.mean).sum();
        NoncentralChiSquare::new(self.dof() as u32, m2, v0).ok()
    }

    /// Natural log of `E[exp(-nu beta)]` for `nu >= 0`.
    pub fn ln_mgf_reciprocal(&self, nu: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let u = 1.0 + 2.0 * c.var * nu;
                -0.5 * u.ln() - c.mean * c.mean * nu / u
            })
            .sum()
    }

    /// `E[exp(-nu beta)]`.
    pub fn mgf_reciprocal(&self, nu: f64) -> f64 {
        self.ln_mgf_reciprocal(nu).exp()
    }
}

/// Scaled non-central chi-squared variable with `K` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncentralChiSquare {
    dof: u32,
    noncentrality: f64,
    var: f64,
}

impl NoncentralChiSquare {
    /// `dof` = K, `noncentrality` = M^2 (sum of squared component means),
    /// `var` = common component variance.
    pub fn new(dof: u32, noncentrality: f64, var: f64) -> Result<Self> {
        if dof == 0 {
            return Err(invalid("degrees of freedom must be at least 1"));
        }
        if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
            return Err(invalid("non-centrality must be finite and non-negative"));
        }
        if !(var > 0.0) || !var.is_finite() {
            return Err(invalid("variance must be positive and finite"));
        }
        Ok(Self { dof, noncentrality, var })
    }

    /// Central distribution (`M^2 = 0`).
    pub fn central(dof: u32, var: f64) -> Result<Self> {
        Self::new(dof, 0.0, var)
    }

    /// Builds the distribution from the normalized non-centrality `rho = M^2 / var`.
    pub fn from_rho(dof: u32, rho: f64, var: f64) -> Result<Self> {
        Self::new(dof, rho * var, var)
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn noncentrality(&self) -> f64 {
        self.noncentrality
    }

    pub fn var(&self) -> f64 {
        self.var
    }

    /// `rho = M^2 / sigma^2`.
    pub fn rho(&self) -> f64 {
        self.noncentrality / self.var
    }

    /// `E[beta] = M^2 + K sigma^2`.
    pub fn mean(&self) -> f64 {
        self.noncentrality + self.dof as f64 * self.var
    }

    /// `Var[beta] = 2 K sigma^4 + 4 sigma^2 M^2`.
    pub fn variance(&self) -> f64 {
        2.0 * self.dof as f64 * self.var * self.var + 4.0 * self.var * self.noncentrality
    }

    /// Same distribution with both `M^2` and `sigma^2` multiplied by `eta`.
    pub fn scaled(&self, eta: f64) -> Result<Self> {
        Self::new(self.dof, self.noncentrality * eta, self.var * eta)
    }

    /// Expands into `K` components, putting the whole mean on the first one.
    pub fn to_generalized(&self) -> GeneralizedChiSquare {
        let mut comps = vec![(0.0, self.var); self.dof as usize];
        comps[0].0 = self.noncentrality.sqrt();
        GeneralizedChiSquare::new(comps).expect("validated parameters")
    }

    /// Natural log of `E[exp(-nu beta)]` for `nu >= 0`.
    pub fn ln_mgf_reciprocal(&self, nu: f64) -> f64 {
        let u = 1.0 + 2.0 * self.var * nu;
        -0.5 * self.dof as f64 * u.ln() - self.noncentrality * nu / u
    }

    pub fn mgf_reciprocal(&self, nu: f64) -> f64 {
        self.ln_mgf_reciprocal(nu).exp()
    }
}

/// Target outage probability `epsilon` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityTarget {
    epsilon: f64,
}

impl ReliabilityTarget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ln_epsilon(&self) -> f64 {
        self.epsilon.ln()
    }

    pub fn log10_epsilon(&self) -> f64 {
        self.epsilon.log10()
    }
}
