//! Detection efficiency: the time-averaged estimate η₁, the quantum-jump
//! estimate η₂, and detection-band extraction.

use std::f64::consts::SQRT_2;

use serde::Serialize;
use statrs::function::erf::erf;

use crate::averaging::moving_average;
use crate::error::{Error, Result};
use crate::params::{DispersiveParams, DriveSpec, ProbeSpec};
use crate::photon::{evolve_single_photon, EvolveOptions, Trajectory};
use crate::pulse::PulseSpec;
use crate::readout::{probe_phases, snr_fidelity, ReadoutModel};
use crate::units::Ghz;

/// η₁ = p̄(1+F)/2 + (1−p̄)(1−F)/2.
pub fn efficiency_eta1(pbar_max: f64, fidelity: f64) -> f64 {
    pbar_max * (1.0 + fidelity) / 2.0 + (1.0 - pbar_max) * (1.0 - fidelity) / 2.0
}

/// Probability of registering an excitation that lasted `tau` (ns) with a
/// boxcar of length `window` and zero decision threshold.
pub fn q_of_tau(snr: f64, window: f64, tau: f64) -> f64 {
    if tau > window {
        0.5 * (1.0 + erf(snr / SQRT_2))
    } else {
        0.5 * (1.0 - erf(snr / SQRT_2 * (1.0 - 2.0 * tau / window)))
    }
}

/// Step-function stand-in for [`q_of_tau`]: (1−F)/2 below Δt/2, (1+F)/2 above.
pub fn q_step(fidelity: f64, window: f64, tau: f64) -> f64 {
    if tau < window / 2.0 {
        (1.0 - fidelity) / 2.0
    } else {
        (1.0 + fidelity) / 2.0
    }
}

/// Distribution Q(τ) of excitation durations (τ in ns).
#[derive(Clone, Debug, PartialEq)]
pub enum DurationDistribution {
    /// Q(τ) = Γ e^{−Γτ}, Γ in 1/ns.
    Exponential { gamma: f64 },
    /// Tabulated density on an increasing τ grid starting at 0, plus the
    /// probability `tail` of lasting beyond the last grid point.
    Sampled { tau: Vec<f64>, density: Vec<f64>, tail: f64 },
}

/// Allowed deviation of ∫Q from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Target relative accuracy of the η₂ quadrature.
pub const QUADRATURE_TOL: f64 = 1e-6;

impl DurationDistribution {
    /// Q(τ) = −dp_e/dτ from an excitation record p_e(τ) with p_e(0) the
    /// excited population: derivative by central differences, negatives
    /// clipped to zero, the surviving p_e at the record end kept as tail,
    /// then renormalized to unit mass.
    pub fn from_decay(tau: &[f64], p_e: &[f64]) -> Result<Self> {
        if tau.len() != p_e.len() || tau.len() < 3 {
            return Err(Error::invalid("decay record needs at least three samples"));
        }
        let n = tau.len();
        let mut density: Vec<f64> = (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                (-(p_e[b] - p_e[a]) / (tau[b] - tau[a])).max(0.0)
            })
            .collect();
        let tail = p_e[n - 1].max(0.0);
        let mass: f64 = trapezoid(tau, &density) + tail;
        if !(mass > 0.0) {
            return Err(Error::invalid("decay record carries no excitation"));
        }
        density.iter_mut().for_each(|q| *q /= mass);
        Ok(DurationDistribution::Sampled {
            tau: tau.to_vec(),
            density,
            tail: tail / mass,
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            DurationDistribution::Exponential { gamma } => {
                if !(gamma.is_finite() && *gamma >= 0.0) {
                    return Err(Error::invalid(format!("decay rate must be >= 0, got {gamma}")));
                }
            }
            DurationDistribution::Sampled { tau, density, tail } => {
                if tau.len() != density.len() || tau.len() < 2 {
                    return Err(Error::invalid("sampled Q needs matching arrays"));
                }
                if tau[0] != 0.0 || tau.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("sampled Q grid must start at 0 and increase"));
                }
                if density.iter().chain([tail]).any(|&q| q < 0.0 || !q.is_finite()) {
                    return Err(Error::invalid("Q(τ) must be finite and non-negative"));
                }
                let mass = trapezoid(tau, density) + tail;
                if (mass - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::invalid(format!("Q(τ) integrates to {mass}, not 1")));
                }
            }
        }
        Ok(())
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// η₂ = ∫₀^∞ Q(τ) q(τ) dτ: composite Simpson on [0, Δt] (panels doubled
/// until successive estimates agree to [`QUADRATURE_TOL`]) plus the closed
/// tail (1+F)/2 ∫_{Δt}^∞ Q.
pub fn efficiency_eta2(q: &DurationDistribution, readout: &ReadoutModel) -> Result<f64> {
    q.validate()?;
    let (snr, window, fid) = (readout.snr, readout.window, readout.fidelity);
    let high = 0.5 * (1.0 + fid);
    if window <= 0.0 {
        return Ok(high);
    }
    match q {
        DurationDistribution::Exponential { gamma } => {
            let g = *gamma;
            let integrand = |t: f64| g * (-g * t).exp() * q_of_tau(snr, window, t);
            let mut panels = 256;
            let mut prev = simpson(integrand, 0.0, window, panels);
            loop {
                panels *= 2;
                let next = simpson(integrand, 0.0, window, panels);
                if (next - prev).abs() <= QUADRATURE_TOL * 1e-2 * next.abs().max(1e-300) || panels >= 1 << 22 {
                    return Ok(next + high * (-g * window).exp());
                }
                prev = next;
            }
        }
        DurationDistribution::Sampled { tau, density, tail } => {
            if tau[tau.len() - 1] < window {
                return Err(Error::invalid("sampled Q must extend past the integration window"));
            }
            // trapezoid on the sampling grid, splitting the cell containing Δt
            let mut acc = 0.0;
            for k in 1..tau.len() {
                let (a, b) = (tau[k - 1], tau[k]);
                let (qa, qb) = (density[k - 1], density[k]);
                let f = |t: f64, qt: f64| qt * q_of_tau(snr, window, t);
                if a < window && window < b {
                    let s = (window - a) / (b - a);
                    let qw = qa + s * (qb - qa);
                    acc += 0.5 * (window - a) * (f(a, qa) + qw * q_of_tau(snr, window, window));
                    acc += 0.5 * (b - window) * (qw * high + f(b, qb));
                } else {
                    acc += 0.5 * (b - a) * (f(a, qa) + f(b, qb));
                }
            }
            Ok(acc + tail * high)
        }
    }
}

/// Upper bound on |η₁ − η₂| for exponential decay, F·(ΓΔt)²/4: each of
/// the boxcar-vs-midpoint gap and the step-function error of q is at most
/// this large, and they enter with opposite signs.
pub fn step_error_bound(fidelity: f64, gamma: f64, window: f64) -> f64 {
    fidelity * (gamma * window).powi(2) / 4.0
}

/// η₁ and η₂ for an excitation at t = 0 that decays at Γ = 1/`lifetime_us`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentialModel {
    pub window: f64,
    pub lifetime_us: f64,
    pub fidelity: f64,
    pub eta1: f64,
    pub eta2: f64,
}

/// For p_e = θ(t)e^{−Γt} the boxcar peaks at t_m = Δt with
/// p̄ = (1 − e^{−ΓΔt})/(ΓΔt).
pub fn exponential_model(readout: &ReadoutModel, lifetime_us: f64) -> Result<ExponentialModel> {
    if !(lifetime_us > 0.0) {
        return Err(Error::invalid(format!("lifetime must be > 0, got {lifetime_us}")));
    }
    let gamma = 1e-3 / lifetime_us;
    let x = gamma * readout.window;
    let pbar = if x < 1e-8 { 1.0 - x / 2.0 } else { -(-x).exp_m1() / x };
    Ok(ExponentialModel {
        window: readout.window,
        lifetime_us,
        fidelity: readout.fidelity,
        eta1: efficiency_eta1(pbar, readout.fidelity),
        eta2: efficiency_eta2(&DurationDistribution::Exponential { gamma }, readout)?,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EfficiencyResult {
    pub window: f64,
    pub snr: f64,
    pub fidelity: f64,
    /// Maximum of the boxcar-averaged p_e and where it occurs (ns).
    pub pbar_max: f64,
    pub t_m: f64,
    pub p_max: f64,
    pub eta1: f64,
    /// Quantum-jump estimate from the same trajectory.
    pub eta2: f64,
}

/// η₁ and η₂ for every integration window from one trajectory.
pub fn efficiencies_from_trajectory(
    traj: &Trajectory,
    dp: &DispersiveParams,
    probe: &ProbeSpec,
    windows: &[f64],
) -> Result<Vec<EfficiencyResult>> {
    let phases = probe_phases(dp, Ghz(probe.omega_p));
    let (k_peak, p_max) = traj
        .p_e
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, p)| if p > acc.1 { (k, p) } else { acc });
    let decay_tau: Vec<f64> = traj.t[k_peak..].iter().map(|t| t - traj.t[k_peak]).collect();
    let q = DurationDistribution::from_decay(&decay_tau, &traj.p_e[k_peak..]).ok();

    windows
        .iter()
        .map(|&w| {
            let readout = snr_fidelity(dp, probe, &phases, w);
            let avg = moving_average(&traj.t, &traj.p_e, w)?;
            let eta1 = efficiency_eta1(avg.max, readout.fidelity);
            let low = 0.5 * (1.0 - readout.fidelity);
            let eta2 = match &q {
                Some(q) => p_max * efficiency_eta2(q, &readout)? + (1.0 - p_max) * low,
                None => low,
            };
            Ok(EfficiencyResult {
                window: w,
                snr: readout.snr,
                fidelity: readout.fidelity,
                pbar_max: avg.max,
                t_m: avg.t_max,
                p_max,
                eta1,
                eta2,
            })
        })
        .collect()
}

/// Simulated time after the pulse window needed for the longest boxcar.
pub fn record_end(pulse: &PulseSpec, windows: &[f64]) -> f64 {
    let longest = windows.iter().cloned().fold(0.0, f64::max);
    pulse.length + longest + 200.0
}

/// Full pipeline: capture trajectory with the probe on, then η for each window.
pub fn detection_efficiency(
    dp: &DispersiveParams,
    drive: &DriveSpec,
    probe: &ProbeSpec,
    pulse: &PulseSpec,
    windows: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<EfficiencyResult>> {
    let traj = evolve_single_photon(dp, drive, Some(probe), pulse, record_end(pulse, windows), opts)?;
    efficiencies_from_trajectory(&traj, dp, probe, windows)
}

/// Band where the efficiency exceeds 0.9 and 0.8 (widths in MHz).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DetectionBand {
    /// Carrier of maximum efficiency (GHz).
    pub center: f64,
    pub peak: f64,
    pub width_90: f64,
    pub width_80: f64,
}

/// Total length (same unit as `x`) over which the linear interpolant of
/// `y` exceeds `threshold`.
pub fn band_width(x: &[f64], y: &[f64], threshold: f64) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("efficiency curve needs an increasing grid"));
    }
    if y.iter().all(|&v| v <= threshold) {
        return Err(Error::ThresholdNotCrossed(threshold));
    }
    if y[0] > threshold || y[y.len() - 1] > threshold {
        return Err(Error::invalid(format!("band above {threshold} is cut by the grid edge; widen the grid")));
    }
    let mut width = 0.0;
    for k in 1..x.len() {
        let (x0, x1, y0, y1) = (x[k - 1], x[k], y[k - 1] - threshold, y[k] - threshold);
        width += match (y0 > 0.0, y1 > 0.0) {
            (true, true) => x1 - x0,
            (true, false) => (x1 - x0) * y0 / (y0 - y1),
            (false, true) => (x1 - x0) * y1 / (y1 - y0),
            (false, false) => 0.0,
        };
    }
    Ok(width)
}

/// `omega_s` in GHz; widths reported in MHz.
pub fn detection_band(omega_s: &[f64], eta: &[f64]) -> Result<DetectionBand> {
    let (k, peak) = eta
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    Ok(DetectionBand {
        center: omega_s[k],
        peak,
        width_90: band_width(omega_s, eta, 0.9)? * 1e3,
        width_80: band_width(omega_s, eta, 0.8)? * 1e3,
    })
}

/// Strict interior local maxima as (x, y) pairs.
pub fn local_peaks(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    (1..y.len().saturating_sub(1))
        .filter(|&k| y[k] > y[k - 1] && y[k] > y[k + 1])
        .map(|k| (x[k], y[k]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_dispersive, BareParams};

    fn readout(window: f64) -> ReadoutModel {
        let dp = derive_dispersive(&BareParams::default()).unwrap();
        let probe = ProbeSpec::at_excited_resonance(&dp, 0.05);
        snr_fidelity(&dp, &probe, &probe_phases(&dp, Ghz(probe.omega_p)), window)
    }

    #[test]
    fn eta1_limits() {
        assert_eq!(efficiency_eta1(1.0, 1.0), 1.0);
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(efficiency_eta1(p, 0.0), 0.5);
        }
    }

    #[test]
    fn q_endpoints_and_monotonicity() {
        let (snr, w) = (2.58, 575.0);
        let f = erf(snr / SQRT_2);
        assert!((q_of_tau(snr, w, w / 2.0) - 0.5).abs() < 1e-15);
        assert!((q_of_tau(snr, w, 0.0) - (1.0 - f) / 2.0).abs() < 1e-15);
        assert!((q_of_tau(snr, w, w) - (1.0 + f) / 2.0).abs() < 1e-15);
        assert_eq!(q_of_tau(snr, w, 10.0 * w), (1.0 + f) / 2.0);
        let grid: Vec<f64> = (0..=2000).map(|k| k as f64).collect();
        assert!(grid.windows(2).all(|t| q_of_tau(snr, w, t[1]) >= q_of_tau(snr, w, t[0])));
    }

    #[test]
    fn eta2_no_decay_limit() {
        let r = readout(575.0);
        let eta2 = efficiency_eta2(&DurationDistribution::Exponential { gamma: 0.0 }, &r).unwrap();
        assert!((eta2 - (1.0 + r.fidelity) / 2.0).abs() < 1e-12);
        let tiny = efficiency_eta2(&DurationDistribution::Exponential { gamma: 1e-12 }, &r).unwrap();
        assert!((tiny - (1.0 + r.fidelity) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn eta2_quadrature_against_fine_midpoint() {
        // independent brute-force midpoint sum with a closed-form tail
        let r = readout(700.0);
        let g = 1.0 / 3000.0;
        let n = 2_000_000;
        let h = r.window / n as f64;
        let brute: f64 = (0..n)
            .map(|k| {
                let t = (k as f64 + 0.5) * h;
                g * (-g * t).exp() * q_of_tau(r.snr, r.window, t) * h
            })
            .sum::<f64>()
            + 0.5 * (1.0 + r.fidelity) * (-g * r.window).exp();
        let eta2 = efficiency_eta2(&DurationDistribution::Exponential { gamma: g }, &r).unwrap();
        assert!(((eta2 - brute) / brute).abs() < 1e-6, "{eta2} vs {brute}");
    }

    #[test]
    fn sampled_distribution_matches_exponential() {
        let g = 1.0 / 6000.0;
        let tau: Vec<f64> = (0..=3_000).map(|k| k as f64).collect();
        let p: Vec<f64> = tau.iter().map(|t| (-g * t).exp()).collect();
        let q = DurationDistribution::from_decay(&tau, &p).unwrap();
        let r = readout(575.0);
        let sampled = efficiency_eta2(&q, &r).unwrap();
        let exact = efficiency_eta2(&DurationDistribution::Exponential { gamma: g }, &r).unwrap();
        assert!((sampled - exact).abs() < 1e-4, "{sampled} vs {exact}");
    }

    #[test]
    fn rejects_bad_distributions() {
        let r = readout(575.0);
        let bad = DurationDistribution::Sampled {
            tau: vec![0.0, 1.0, 2.0],
            density: vec![0.6, 0.6, 0.6],
            tail: 0.0,
        };
        assert!(efficiency_eta2(&bad, &r).is_err());
        let neg = DurationDistribution::Sampled {
            tau: vec![0.0, 1.0],
            density: vec![1.5, -0.5],
            tail: 0.0,
        };
        assert!(efficiency_eta2(&neg, &r).is_err());
        assert!(efficiency_eta2(&DurationDistribution::Exponential { gamma: -1.0 }, &r).is_err());
    }

    #[test]
    fn band_widths_of_a_triangle() {
        let x: Vec<f64> = (0..=100).map(|k| 10.0 + k as f64 * 1e-3).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - (v - 10.05).abs() * 10.0).collect();
        let band = detection_band(&x, &y).unwrap();
        assert!((band.center - 10.05).abs() < 1e-12);
        assert!((band.width_90 - 20.0).abs() < 1e-6);
        assert!((band.width_80 - 40.0).abs() < 1e-6);
    }

    #[test]
    fn flat_curve_never_crosses() {
        let x = [1.0, 2.0, 3.0];
        let err = detection_band(&x, &[0.5, 0.6, 0.5]).unwrap_err();
        assert!(matches!(err, Error::ThresholdNotCrossed(t) if t == 0.9));
    }

    #[test]
    fn finds_two_peaks() {
        let x: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (-(v - 15.0f64).powi(2) / 10.0).exp() + (-(v - 35.0f64).powi(2) / 10.0).exp()).collect();
        let peaks = local_peaks(&x, &y);
        assert_eq!(peaks.len(), 2);
        assert_eq!((peaks[0].0, peaks[1].0), (15.0, 35.0));
    }
}
