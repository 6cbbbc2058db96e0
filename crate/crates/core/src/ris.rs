//! Single-antenna link through a reconfigurable surface with perfectly
//! aligned phases.
//!
//! With `N_R` reflectors and Rician hops `h_n`, `g_n`, the gain is
//! `beta = (sum_n |h_n| |g_n|)^2`. For large `N_R` the sum is close to a
//! real Gaussian, so `beta` is approximated by a one-dimensional
//! non-central chi-squared law and bounded with the Chernoff solver. Exact
//! samples of the sum check that approximation.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::distribution::{NoncentralChiSquare, ReliabilityTarget};
use crate::error::{invalid, Error, Result};
use crate::quantile::{quantile_rank, LowerOrderStatistic, MIN_TAIL_SAMPLES};
use crate::rng::{fold_ranges, map_indices, substream};
use crate::solver::{solve_noncentral, SolverConfig};
use crate::special::{bessel_i0e, bessel_i1e};

// long blocks keep the order-statistic merges rare
const BLOCK: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisConfig {
    pub reflectors: usize,
    pub kappa_h: f64,
    pub kappa_g: f64,
    pub trials: u64,
    pub seed: u64,
}

impl RisConfig {
    pub fn new(reflectors: usize, kappa_h: f64, kappa_g: f64, trials: u64, seed: u64) -> Result<Self> {
        let c = Self { reflectors, kappa_h, kappa_g, trials, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reflectors == 0 {
            return Err(invalid("need at least one reflector"));
        }
        check_kappa(self.kappa_h)?;
        check_kappa(self.kappa_g)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("K-factor must be finite and nonnegative, got {kappa}")));
    }
    Ok(())
}

/// Laguerre function `L_{1/2}(-kappa) = (1 + kappa) I0e(kappa/2) + kappa I1e(kappa/2)`.
pub fn laguerre_half(kappa: f64) -> f64 {
    let x = 0.5 * kappa;
    (1.0 + kappa) * bessel_i0e(x) + kappa * bessel_i1e(x)
}

/// `E|h|` for a unit-power Rician coefficient with K-factor `kappa`.
pub fn rician_mean(kappa: f64) -> f64 {
    0.5 * (std::f64::consts::PI / (1.0 + kappa)).sqrt() * laguerre_half(kappa)
}

/// Mean and variance of `|h| |g|` for independent unit-power Rician hops.
pub fn product_moments(kappa_h: f64, kappa_g: f64) -> Result<(f64, f64)> {
    check_kappa(kappa_h)?;
    check_kappa(kappa_g)?;
    let mean = rician_mean(kappa_h) * rician_mean(kappa_g);
    Ok((mean, 1.0 - mean * mean))
}

/// Central-limit law of the gain: `K = 1`, `M^2 = N_R^2 mean^2`, `sigma^2 = N_R var`.
pub fn clt_spec(cfg: &RisConfig) -> Result<NoncentralChiSquare> {
    cfg.validate()?;
    let (mean, var) = product_moments(cfg.kappa_h, cfg.kappa_g)?;
    let n = cfg.reflectors as f64;
    NoncentralChiSquare::new(1, n * n * mean * mean, n * var)
}

// |nu + sigma (z1 + i z2)| with nu^2 = kappa / (1 + kappa), 2 sigma^2 = 1 / (1 + kappa)
#[derive(Debug, Clone, Copy)]
struct Rician {
    los: f64,
    scatter: f64,
}

impl Rician {
    fn new(kappa: f64) -> Self {
        Self { los: (kappa / (1.0 + kappa)).sqrt(), scatter: (0.5 / (1.0 + kappa)).sqrt() }
    }

    // operands are O(1), so the plain square root cannot overflow
    fn magnitude(self, z1: f64, z2: f64) -> f64 {
        let re = self.los + self.scatter * z1;
        let im = self.scatter * z2;
        (re * re + im * im).sqrt()
    }
}

/// One unit-power Rician magnitude.
pub fn draw_rician<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    Rician::new(kappa).magnitude(z1, z2)
}

// Draws the per-reflector normals once and evaluates every (K-factor pair,
// reflector count) on them: `out[p * counts.len() + c]` is the gain for pair
// `p` and the first `counts[c]` reflectors. Four normals per reflector in
// a fixed order, so a configuration's draws do not depend on the others.
fn draw_nested<R: Rng + ?Sized>(hops: &[(Rician, Rician)], counts: &[usize], rng: &mut R, out: &mut [f64]) {
    let mut sums = vec![0.0; hops.len()];
    let mut next = 0;
    let last = *counts.last().expect("non-empty");
    for n in 1..=last {
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        for (s, (h, g)) in sums.iter_mut().zip(hops) {
            *s += h.magnitude(z[0], z[1]) * g.magnitude(z[2], z[3]);
        }
        if n == counts[next] {
            for (p, s) in sums.iter().enumerate() {
                out[p * counts.len() + next] = s * s;
            }
            next += 1;
        }
    }
}

/// `n` exact gains for `cfg`; draw `i` uses substream `(seed, i)`.
pub fn sample_gain(cfg: &RisConfig, n: u64, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let hops = [(Rician::new(cfg.kappa_h), Rician::new(cfg.kappa_g))];
    let counts = [cfg.reflectors];
    Ok(map_indices(n, |i| {
        let mut out = [0.0];
        draw_nested(&hops, &counts, &mut substream(seed, i), &mut out);
        out[0]
    }))
}

/// Quantities compared for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisOutcome {
    pub reflectors: usize,
    pub kappa_h: f64,
    pub kappa_g: f64,
    pub epsilon: f64,
    /// Chernoff bound from the central-limit law.
    pub bound: f64,
    /// Empirical `epsilon`-quantile of the exact gain.
    pub empirical_threshold: f64,
    /// `bound / empirical_threshold`.
    pub ratio: f64,
    /// Fraction of exact draws below the bound.
    pub achieved_outage: f64,
    /// `bound / N_R^2`.
    pub normalized_gain: f64,
    pub trials: u64,
}

/// Runs one configuration.
pub fn ris_experiment(cfg: &RisConfig, target: ReliabilityTarget, solver: &SolverConfig) -> Result<RisOutcome> {
    let out = ris_sweep(&[cfg.reflectors], &[(cfg.kappa_h, cfg.kappa_g)], cfg.trials, cfg.seed, target, solver)?;
    Ok(out[0])
}

#[derive(Clone)]
struct Tail {
    order: LowerOrderStatistic,
    below: u64,
}

/// Every combination of reflector count and K-factor pair on shared draws.
///
/// Draw `i` of every configuration comes from substream `(seed, i)`; larger
/// surfaces extend the smaller ones and all K-factor pairs reuse the same
/// normals. Each configuration is still an i.i.d. exact sample, identical
/// to what [`ris_experiment`] produces for it alone. Results are ordered by
/// K-factor pair, then reflector count.
pub fn ris_sweep(
    reflectors: &[usize],
    kappas: &[(f64, f64)],
    trials: u64,
    seed: u64,
    target: ReliabilityTarget,
    solver: &SolverConfig,
) -> Result<Vec<RisOutcome>> {
    if reflectors.is_empty() || kappas.is_empty() {
        return Err(invalid("empty sweep"));
    }
    if reflectors.windows(2).any(|w| w[0] >= w[1]) || reflectors[0] == 0 {
        return Err(invalid("reflector counts must be positive and strictly increasing"));
    }
    let eps = target.epsilon();
    if (trials as f64) * eps < MIN_TAIL_SAMPLES {
        let need = (MIN_TAIL_SAMPLES / eps).ceil() as u64;
        return Err(Error::InsufficientSamples { have: trials, need });
    }
    solver.validate()?;

    let mut bounds = Vec::with_capacity(kappas.len() * reflectors.len());
    for &(kh, kg) in kappas {
        for &n in reflectors {
            let spec = clt_spec(&RisConfig::new(n, kh, kg, trials, seed)?)?;
            bounds.push(solve_noncentral(&spec, target, solver)?.bound);
        }
    }

    let hops: Vec<(Rician, Rician)> = kappas.iter().map(|&(kh, kg)| (Rician::new(kh), Rician::new(kg))).collect();
    let rank = quantile_rank(trials, eps);
    let fresh = || vec![Tail { order: LowerOrderStatistic::new(rank), below: 0 }; bounds.len()];
    let tails = fold_ranges(
        trials,
        BLOCK,
        fresh(),
        |r| {
            let mut tails = fresh();
            let mut gains = vec![0.0; bounds.len()];
            for i in r {
                draw_nested(&hops, reflectors, &mut substream(seed, i), &mut gains);
                for ((t, &g), &b) in tails.iter_mut().zip(&gains).zip(&bounds) {
                    t.order.push(g);
                    t.below += u64::from(g < b);
                }
            }
            tails
        },
        |mut acc, part| {
            for (a, p) in acc.iter_mut().zip(part) {
                a.order.merge(p.order);
                a.below += p.below;
            }
            acc
        },
    );

    let mut out = Vec::with_capacity(bounds.len());
    for (p, &(kh, kg)) in kappas.iter().enumerate() {
        for (c, &n) in reflectors.iter().enumerate() {
            let j = p * reflectors.len() + c;
            let threshold = tails[j].order.value().expect("rank <= trials");
            let bound = bounds[j];
            out.push(RisOutcome {
                reflectors: n,
                kappa_h: kh,
                kappa_g: kg,
                epsilon: eps,
                bound,
                empirical_threshold: threshold,
                ratio: bound / threshold,
                achieved_outage: tails[j].below as f64 / trials as f64,
                normalized_gain: bound / (n * n) as f64,
                trials,
            });
        }
    }
    Ok(out)
}
