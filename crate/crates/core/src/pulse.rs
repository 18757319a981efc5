//! Gaussian single-photon wavepacket.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pulse windows extend this many lengths either side of the center; the
/// intensity there is 2^-32 of its peak.
pub const WINDOW_LENGTHS: f64 = 2.0;

/// Real Gaussian envelope ξ(t) = (8 ln2/π l²)^{1/4} 2^{−t²/(l/2)²} on a
/// carrier `omega_s`, normalized to ∫ξ² dt = 1 and centered at t = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Carrier (GHz).
    pub omega_s: f64,
    /// Pulse length l (ns).
    pub length: f64,
    /// Envelope is zero outside [t0, t1] (ns).
    pub t0: f64,
    pub t1: f64,
    /// Multiplies the envelope; 1 for a single photon, 0 for no signal.
    pub amplitude: f64,
}

impl PulseSpec {
    pub fn gaussian(omega_s: f64, length: f64) -> Self {
        PulseSpec {
            omega_s,
            length,
            t0: -WINDOW_LENGTHS * length,
            t1: WINDOW_LENGTHS * length,
            amplitude: 1.0,
        }
    }

    pub fn silent(omega_s: f64, length: f64) -> Self {
        PulseSpec {
            amplitude: 0.0,
            ..Self::gaussian(omega_s, length)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid(format!("pulse length must be > 0, got {}", self.length)));
        }
        if !(self.t1 > self.t0) {
            return Err(Error::invalid("pulse window must have t1 > t0"));
        }
        Ok(())
    }

    /// ξ(t) in 1/√ns.
    pub fn envelope(&self, t: f64) -> f64 {
        if t < self.t0 || t > self.t1 || self.amplitude == 0.0 {
            return 0.0;
        }
        let l = self.length;
        let norm = (8.0 * LN_2 / (PI * l * l)).powf(0.25);
        let half = 0.5 * l;
        self.amplitude * norm * (-(t * t) / (half * half) * LN_2).exp()
    }

    /// |ξ(t)|² in 1/ns.
    pub fn intensity(&self, t: f64) -> f64 {
        self.envelope(t).powi(2)
    }

    /// ∫_{-∞}^t ξ² dt′ in closed form (ignoring the window cut).
    pub fn delivered(&self, t: f64) -> f64 {
        // ξ² = N² exp(−8 ln2 t²/l²) is a normal density with σ = l / (4√ln2)
        let sigma = self.length / (4.0 * LN_2.sqrt());
        self.amplitude.powi(2) * 0.5 * (1.0 + statrs::function::erf::erf(t / (sigma * 2f64.sqrt())))
    }

    /// Trapezoidal ∫ξ² over the window on a grid of step `dt`.
    pub fn norm_on_grid(&self, dt: f64) -> f64 {
        let n = ((self.t1 - self.t0) / dt).ceil() as usize;
        let step = (self.t1 - self.t0) / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * self.intensity(self.t0 + k as f64 * step);
        }
        acc * step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_on_simulation_grid() {
        for l in [20.0, 90.0, 100.0, 300.0] {
            let p = PulseSpec::gaussian(10.05, l);
            assert!((p.norm_on_grid(0.1) - 1.0).abs() < 1e-6, "l = {l}");
            assert!((p.norm_on_grid(l / 200.0) - 1.0).abs() < 1e-6, "l = {l}");
        }
    }

    #[test]
    fn envelope_shape() {
        let p = PulseSpec::gaussian(10.05, 100.0);
        // 2^{-1} of the peak at t = l/2
        assert!((p.envelope(50.0) / p.envelope(0.0) - 0.5).abs() < 1e-12);
        assert_eq!(p.envelope(-250.0), 0.0);
        assert!((p.delivered(0.0) - 0.5).abs() < 1e-15);
        assert!((p.delivered(1e4) - 1.0).abs() < 1e-12);
        assert_eq!(PulseSpec::silent(10.05, 100.0).envelope(0.0), 0.0);
    }
}
