//! Single-stream MIMO downlink with aged channel state.
//!
//! The channel seen at transmission time is a first-order Markov update of
//! the one used to design the beamformer,
//! `H' = J0(2 pi f_d tau) H + Omega`, with i.i.d. `CN(0, 1 - J0^2)`
//! innovations. For a fixed `H` and matched-filter beamformer `w`, the gain
//! `|| H' w ||^2` is non-central chi-squared with `K = 2N` real components.
//! Multi-stream precoding is out of scope; with one stream the
//! inter-stream interference terms vanish.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::baseline::{approx_threshold, ApproximationMethod};
use crate::distribution::{NoncentralChiSquare, ReliabilityTarget};
use crate::error::{invalid, Error, Result};
use crate::rng::{fold_chunks, substream};
use crate::solver::{solve_noncentral, BoundReport, SolverConfig};
use crate::special::bessel_j0;
use crate::stats::{Estimate, RunningMean};

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Non-centrality at or above which the combined predictor switches from
/// the Chernoff bound to the `z2` approximation.
pub const COMBINED_SWITCH_RHO: f64 = 120.0;

/// Fewest channel draws accepted by the experiment drivers.
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovChannelParams {
    pub carrier_hz: f64,
    pub velocity_mps: f64,
    pub lag_s: f64,
}

impl Default for MarkovChannelParams {
    /// 3.5 GHz carrier, 20 m/s, 0.5 ms between estimation and transmission.
    fn default() -> Self {
        Self { carrier_hz: 3.5e9, velocity_mps: 20.0, lag_s: 0.5e-3 }
    }
}

impl MarkovChannelParams {
    pub fn new(carrier_hz: f64, velocity_mps: f64, lag_s: f64) -> Result<Self> {
        let p = Self { carrier_hz, velocity_mps, lag_s };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err(invalid("carrier frequency must be positive"));
        }
        if !(self.velocity_mps >= 0.0 && self.velocity_mps.is_finite()) {
            return Err(invalid("velocity must be nonnegative"));
        }
        if !(self.lag_s >= 0.0 && self.lag_s.is_finite()) {
            return Err(invalid("lag must be nonnegative"));
        }
        Ok(())
    }

    pub fn doppler_hz(&self) -> f64 {
        self.velocity_mps * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// `J0(2 pi f_d tau)`.
    pub fn correlation(&self) -> f64 {
        bessel_j0(2.0 * std::f64::consts::PI * self.doppler_hz() * self.lag_s)
    }

    /// Per-entry innovation variance `1 - J0^2`.
    pub fn innovation_var(&self) -> f64 {
        let c = self.correlation();
        1.0 - c * c
    }
}

/// Channel correlation over the configured lag.
pub fn doppler_correlation(params: &MarkovChannelParams) -> f64 {
    params.correlation()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MimoConfig {
    pub tx: usize,
    pub rx: usize,
    pub trials: u64,
    pub seed: u64,
}

impl MimoConfig {
    pub fn new(tx: usize, rx: usize, trials: u64, seed: u64) -> Result<Self> {
        if rx == 0 || tx < rx {
            return Err(invalid(format!("need tx >= rx >= 1, got tx={tx} rx={rx}")));
        }
        Ok(Self { tx, rx, trials, seed })
    }

    pub fn dof(&self) -> u32 {
        2 * self.rx as u32
    }

    fn require_trials(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InsufficientSamples { have: self.trials, need: MIN_TRIALS });
        }
        Ok(())
    }
}

/// Dense row-major complex matrix, `rows = N` receive antennas by
/// `cols = M` transmit antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.cols..(n + 1) * self.cols]
    }

    /// `H w`.
    pub fn apply(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        if w.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for {} columns",
                w.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|n| dot(self.row(n), w)).collect())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, std: f64) -> Complex64 {
    let s = std * std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// I.i.d. `CN(0, 1)` entries.
pub fn draw_channel<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ChannelMatrix {
    let data = (0..rows * cols).map(|_| complex_normal(rng, 1.0)).collect();
    ChannelMatrix { rows, cols, data }
}

/// Rayleigh channel for `cfg`, fixed by `seed`.
pub fn sample_channel(cfg: &MimoConfig, seed: u64) -> ChannelMatrix {
    draw_channel(cfg.rx, cfg.tx, &mut substream(seed, 0))
}

/// `J0 H + Omega` with a fresh innovation drawn from `rng`.
pub fn evolve_channel<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    params: &MarkovChannelParams,
    rng: &mut R,
) -> ChannelMatrix {
    let c = params.correlation();
    let s = params.innovation_var().sqrt();
    let data = h.data.iter().map(|&x| c * x + complex_normal(rng, s)).collect();
    ChannelMatrix { rows: h.rows, cols: h.cols, data }
}

/// `J0 H + Omega` for a given innovation matrix.
pub fn evolve_with_innovation(
    h: &ChannelMatrix,
    params: &MarkovChannelParams,
    innovation: &ChannelMatrix,
) -> Result<ChannelMatrix> {
    if (h.rows, h.cols) != (innovation.rows, innovation.cols) {
        return Err(Error::ShapeMismatch(format!(
            "channel {}x{} vs innovation {}x{}",
            h.rows, h.cols, innovation.rows, innovation.cols
        )));
    }
    let c = params.correlation();
    let data = h.data.iter().zip(&innovation.data).map(|(&x, &o)| c * x + o).collect();
    Ok(ChannelMatrix { rows: h.rows, cols: h.cols, data })
}

/// Matched-filter direction `H^H 1_N`, scaled so that `|| H w ||^2 = 1`.
pub fn mf_beamformer(h: &ChannelMatrix) -> Result<Vec<Complex64>> {
    let v: Vec<Complex64> =
        (0..h.cols).map(|m| (0..h.rows).map(|n| h.data[n * h.cols + m].conj()).sum()).collect();
    let hv = h.apply(&v)?;
    let g = norm_sqr(&hv);
    if !(g > 0.0) {
        return Err(Error::DegenerateChannel("H H^H 1 vanishes".into()));
    }
    let s = g.sqrt().recip();
    Ok(v.into_iter().map(|x| x * s).collect())
}

/// `|| H w ||^2`.
pub fn realized_gain(h: &ChannelMatrix, w: &[Complex64]) -> Result<f64> {
    Ok(norm_sqr(&h.apply(w)?))
}

/// Law of the gain `|| H' w ||^2` given the current channel `H`.
///
/// `K = 2N`, `sigma^2 = (1 - J0^2) ||w||^2 / 2` and
/// `M^2 = J0^2 || H w ||^2`. A zero lag leaves no randomness and is rejected.
pub fn gain_params(
    h: &ChannelMatrix,
    w: &[Complex64],
    params: &MarkovChannelParams,
) -> Result<NoncentralChiSquare> {
    let c = params.correlation();
    let var = params.innovation_var() * norm_sqr(w) / 2.0;
    if !(var > 0.0) {
        return Err(Error::Domain("no channel aging: the gain is deterministic".into()));
    }
    NoncentralChiSquare::new(2 * h.rows as u32, c * c * realized_gain(h, w)?, var)
}

/// Chernoff bound on the gain delivered by the matched filter designed on `h`.
pub fn predict_gain(
    h: &ChannelMatrix,
    params: &MarkovChannelParams,
    target: ReliabilityTarget,
    cfg: &SolverConfig,
) -> Result<BoundReport> {
    let w = mf_beamformer(h)?;
    solve_noncentral(&gain_params(h, &w, params)?, target, cfg)
}

/// Symbol energy meeting `snr_target` when the gain is at least `bound`.
pub fn required_energy(bound: f64, snr_target: f64, noise_var: f64) -> Result<f64> {
    if !(bound > 0.0) || !(snr_target > 0.0) || !(noise_var > 0.0) {
        return Err(invalid("bound, SNR target and noise variance must be positive"));
    }
    Ok(snr_target * noise_var / bound)
}

/// `n` realized gains `|| H' w ||^2` for a fixed `h`, draw `i` on substream `(seed, i)`.
pub fn sample_realized_gains(
    h: &ChannelMatrix,
    w: &[Complex64],
    params: &MarkovChannelParams,
    n: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    h.apply(w)?;
    Ok(crate::rng::map_indices(n, |i| {
        let next = evolve_channel(h, params, &mut substream(seed, i));
        norm_sqr(&next.apply(w).expect("shape checked"))
    }))
}

// channel draw and gain law for trial `i`; the innovation, if needed, comes
// from the same stream afterwards
fn trial<R: Rng + ?Sized>(
    cfg: &MimoConfig,
    params: &MarkovChannelParams,
    rng: &mut R,
) -> Result<(ChannelMatrix, Vec<Complex64>, NoncentralChiSquare)> {
    let h = draw_channel(cfg.rx, cfg.tx, rng);
    let w = mf_beamformer(&h)?;
    let d = gain_params(&h, &w, params)?;
    Ok((h, w, d))
}

/// Fraction of channel draws whose gain law has `rho < threshold`.
pub fn experiment_rho_probability(
    cfg: &MimoConfig,
    params: &MarkovChannelParams,
    threshold: f64,
) -> Result<Estimate> {
    cfg.require_trials()?;
    params.validate()?;
    let hits = fold_chunks(
        cfg.trials,
        Ok(0u64),
        |r| -> Result<u64> {
            let mut hits = 0;
            for i in r {
                let (_, _, d) = trial(cfg, params, &mut substream(cfg.seed, i))?;
                hits += u64::from(d.rho() < threshold);
            }
            Ok(hits)
        },
        |acc, p| Ok(acc? + p?),
    )?;
    Ok(Estimate::proportion(hits, cfg.trials))
}

/// Monte Carlo means behind the power-adaptation comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerStatistics {
    pub bound: Estimate,
    pub lambda: Estimate,
    /// `E[1 / bound]`, energy relative to a unit-gain link.
    pub inverse_bound: Estimate,
    /// `E[lambda / bound] = E[1 / E[beta | H]]`, energy when only the mean gain is targeted.
    pub lambda_over_bound: Estimate,
    /// `E[1 / threshold]` with the `z2` approximation used when `rho >= 120`.
    pub inverse_combined: Estimate,
    /// Share of draws where the combined predictor used the approximation.
    pub approximation_share: Estimate,
}

#[derive(Default)]
struct PowerAcc {
    bound: RunningMean,
    lambda: RunningMean,
    inv: RunningMean,
    lam_inv: RunningMean,
    combined: RunningMean,
    switched: RunningMean,
}

impl PowerAcc {
    fn merge(&mut self, o: &Self) {
        self.bound.merge(&o.bound);
        self.lambda.merge(&o.lambda);
        self.inv.merge(&o.inv);
        self.lam_inv.merge(&o.lam_inv);
        self.combined.merge(&o.combined);
        self.switched.merge(&o.switched);
    }
}

/// Per-draw Chernoff bounds and the energy they imply, averaged over
/// channel realizations.
pub fn experiment_power(
    cfg: &MimoConfig,
    params: &MarkovChannelParams,
    target: ReliabilityTarget,
    solver: &SolverConfig,
) -> Result<PowerStatistics> {
    cfg.require_trials()?;
    params.validate()?;
    solver.validate()?;
    let acc = fold_chunks(
        cfg.trials,
        Ok(PowerAcc::default()),
        |r| -> Result<PowerAcc> {
            let mut a = PowerAcc::default();
            for i in r {
                let (_, _, d) = trial(cfg, params, &mut substream(cfg.seed, i))?;
                let bound = solve_noncentral(&d, target, solver)?.bound;
                let lambda = bound / d.mean();
                let switch = d.rho() >= COMBINED_SWITCH_RHO;
                let combined = if switch {
                    approx_threshold(ApproximationMethod::SankaranZ2, &d, target).value
                } else {
                    bound
                };
                a.bound.push(bound);
                a.lambda.push(lambda);
                a.inv.push(1.0 / bound);
                a.lam_inv.push(lambda / bound);
                a.combined.push(1.0 / combined);
                a.switched.push(if switch { 1.0 } else { 0.0 });
            }
            Ok(a)
        },
        |acc, p| {
            let mut acc = acc?;
            acc.merge(&p?);
            Ok(acc)
        },
    )?;
    Ok(PowerStatistics {
        bound: acc.bound.estimate(),
        lambda: acc.lambda.estimate(),
        inverse_bound: acc.inv.estimate(),
        lambda_over_bound: acc.lam_inv.estimate(),
        inverse_combined: acc.combined.estimate(),
        approximation_share: acc.switched.estimate(),
    })
}

/// Single-shot reliability over joint draws of the channel and its
/// innovation: the fraction of trials whose realized gain falls below the
/// bound predicted from the outdated channel.
pub fn experiment_reliability(
    cfg: &MimoConfig,
    params: &MarkovChannelParams,
    target: ReliabilityTarget,
    solver: &SolverConfig,
) -> Result<Estimate> {
    cfg.require_trials()?;
    params.validate()?;
    solver.validate()?;
    let outages = fold_chunks(
        cfg.trials,
        Ok(0u64),
        |r| -> Result<u64> {
            let mut hits = 0;
            for i in r {
                let mut rng = substream(cfg.seed, i);
                let (h, w, d) = trial(cfg, params, &mut rng)?;
                let bound = solve_noncentral(&d, target, solver)?.bound;
                let next = evolve_channel(&h, params, &mut rng);
                hits += u64::from(realized_gain(&next, &w)? < bound);
            }
            Ok(hits)
        },
        |acc, p| Ok(acc? + p?),
    )?;
    Ok(Estimate::proportion(outages, cfg.trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::cdf;

    #[test]
    fn default_correlation() {
        let p = MarkovChannelParams::default();
        assert!((p.doppler_hz() - 233.494_866_638_706_4).abs() < 1e-9);
        // scipy.special.j0(2 pi f_d tau)
        assert!((doppler_correlation(&p) - 0.869_934_665_259_014_3).abs() < 1e-12);
        let c = p.correlation();
        assert_eq!(c * c + p.innovation_var(), 1.0);
    }

    #[test]
    fn zero_lag_is_identity() {
        let p = MarkovChannelParams::new(3.5e9, 20.0, 0.0).unwrap();
        assert_eq!(p.correlation(), 1.0);
        assert_eq!(p.innovation_var(), 0.0);
        let h = draw_channel(2, 8, &mut substream(1, 0));
        assert_eq!(evolve_channel(&h, &p, &mut substream(1, 1)), h);
        let w = mf_beamformer(&h).unwrap();
        assert!(matches!(gain_params(&h, &w, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn beamformer_has_unit_gain() {
        for (n, m) in [(1, 1), (1, 8), (2, 16), (4, 24)] {
            for s in 0..5 {
                let h = draw_channel(n, m, &mut substream(s, 0));
                let w = mf_beamformer(&h).unwrap();
                assert!((realized_gain(&h, &w).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_row_beamformer() {
        let h = draw_channel(1, 6, &mut substream(9, 0));
        let w = mf_beamformer(&h).unwrap();
        let hw = h.apply(&w).unwrap()[0];
        assert!((hw.norm() - 1.0).abs() < 1e-12 && hw.im.abs() < 1e-12);
        let n2 = norm_sqr(h.row(0));
        for (wi, hi) in w.iter().zip(h.row(0)) {
            assert!((wi - hi.conj() / n2).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_channel_rejected() {
        let h = ChannelMatrix::from_vec(1, 2, vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        assert!(matches!(mf_beamformer(&h), Err(Error::DegenerateChannel(_))));
        assert!(ChannelMatrix::from_vec(2, 2, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let o = draw_channel(2, 3, &mut substream(0, 0));
        let h = draw_channel(3, 2, &mut substream(0, 1));
        assert!(matches!(
            evolve_with_innovation(&h, &MarkovChannelParams::default(), &o),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn gain_law_under_normalization() {
        let p = MarkovChannelParams::default();
        let h = draw_channel(2, 16, &mut substream(3, 0));
        let w = mf_beamformer(&h).unwrap();
        let d = gain_params(&h, &w, &p).unwrap();
        assert_eq!(d.dof(), 4);
        let c = p.correlation();
        assert!((d.noncentrality() - c * c).abs() < 1e-12);
        assert!((d.var() - p.innovation_var() * norm_sqr(&w) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn channel_entries_are_standard_complex_normal() {
        let h = draw_channel(2, 250_000, &mut substream(21, 0));
        let n = h.entries().len() as f64;
        let mean: Complex64 = h.entries().iter().sum::<Complex64>() / n;
        let var = norm_sqr(h.entries()) / n;
        assert!(mean.norm() < 0.005);
        assert!((var - 1.0).abs() < 0.01);
        let corr: Complex64 =
            h.row(0).iter().zip(h.row(1)).map(|(a, b)| a * b.conj()).sum::<Complex64>() / (n / 2.0);
        assert!(corr.norm() < 0.01);
    }

    #[test]
    fn evolution_keeps_unit_variance_and_correlation() {
        let p = MarkovChannelParams::default();
        let h = draw_channel(1, 1_000_000, &mut substream(4, 0));
        let next = evolve_channel(&h, &p, &mut substream(4, 1));
        let n = 1e6;
        assert!((norm_sqr(next.entries()) / n - 1.0).abs() < 0.01);
        let corr: Complex64 =
            next.entries().iter().zip(h.entries()).map(|(a, b)| a * b.conj()).sum::<Complex64>() / n;
        assert!((corr.re - p.correlation()).abs() < 0.01 && corr.im.abs() < 0.01);
    }

    #[test]
    fn realized_gains_follow_the_law() {
        let p = MarkovChannelParams::default();
        let h = draw_channel(2, 16, &mut substream(8, 0));
        let w = mf_beamformer(&h).unwrap();
        let d = gain_params(&h, &w, &p).unwrap();
        let n = 200_000;
        let gains = sample_realized_gains(&h, &w, &p, n, 99).unwrap();
        for q in [0.3, 0.6, 0.8, 1.0, 1.2, 1.5] {
            let x = q * d.mean();
            let f = cdf(&d, x);
            let emp = gains.iter().filter(|&&g| g <= x).count() as f64 / n as f64;
            assert!((emp - f).abs() < 4.0 * (f * (1.0 - f) / n as f64).sqrt(), "q={q}");
        }
    }

    #[test]
    fn experiments_need_enough_trials() {
        let cfg = MimoConfig::new(16, 2, 10, 0).unwrap();
        let r = experiment_rho_probability(&cfg, &MarkovChannelParams::default(), 120.0);
        assert!(matches!(r, Err(Error::InsufficientSamples { have: 10, need: 10_000 })));
        assert!(MimoConfig::new(2, 4, 10, 0).is_err());
    }

    #[test]
    fn required_energy_scales_inversely() {
        assert_eq!(required_energy(0.5, 10.0, 0.1).unwrap(), 2.0);
        assert!(required_energy(0.0, 10.0, 0.1).is_err());
    }
}
