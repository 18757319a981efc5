//! Dispersive readout through resonator B: probe phases, SNR, fidelity.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;
use statrs::function::erf::erf;

use crate::params::{DispersiveParams, ProbeSpec};
use crate::units::{angular, Ghz};
use crate::C64;

/// Reflection phases of the probe for the qubit in |g⟩ and |e⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbePhases {
    pub theta_g: f64,
    pub theta_e: f64,
}

impl ProbePhases {
    pub fn unit_g(&self) -> C64 {
        C64::from_polar(1.0, self.theta_g)
    }
    pub fn unit_e(&self) -> C64 {
        C64::from_polar(1.0, self.theta_e)
    }
    /// |e^{iθ_g} − e^{iθ_e}|, between 0 and 2.
    pub fn separation(&self) -> f64 {
        (self.unit_g() - self.unit_e()).norm()
    }
}

/// θ = 2 arctan[κ/(2δ)] with δ = ω_r − ω_p (both rad/ns), taking θ = π
/// on resonance.
pub fn reflection_phase(kappa: f64, detuning: f64) -> f64 {
    if detuning == 0.0 {
        return PI;
    }
    // atan2 keeps the branch continuous through δ → 0⁺ (θ → π)
    2.0 * (kappa / 2.0).atan2(detuning)
}

pub fn probe_phases(dp: &DispersiveParams, omega_p: Ghz) -> ProbePhases {
    let kb = dp.kappa_b_ang();
    ProbePhases {
        theta_g: reflection_phase(kb, angular(Ghz(dp.omega_b - omega_p.0))),
        theta_e: reflection_phase(kb, angular(Ghz(dp.omega_b_excited() - omega_p.0))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReadoutModel {
    pub probe: ProbeSpec,
    /// Integration time Δt (ns).
    pub window: f64,
    pub snr: f64,
    pub fidelity: f64,
}

/// SNR = √(κ_b⟨n_b⟩Δt/4)·|e^{iθ_g} − e^{iθ_e}| and F = erf(SNR/√2), for
/// noise of purely quantum origin.
pub fn snr_fidelity(dp: &DispersiveParams, probe: &ProbeSpec, phases: &ProbePhases, window: f64) -> ReadoutModel {
    let snr = (dp.kappa_b_ang() * probe.n_b_mean * window.max(0.0) / 4.0).sqrt() * phases.separation();
    ReadoutModel {
        probe: *probe,
        window,
        snr,
        fidelity: erf(snr / SQRT_2),
    }
}

/// Order-of-magnitude measurement interval 1/(κ_b⟨n_b⟩) in ns, under
/// both readings of κ_b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZenoTime {
    /// Using angular κ_b (rad/ns).
    pub angular_ns: f64,
    /// Using linear κ_b (1/ns).
    pub linear_ns: f64,
}

pub fn zeno_time(dp: &DispersiveParams, probe: &ProbeSpec) -> Option<ZenoTime> {
    (probe.n_b_mean > 0.0).then(|| ZenoTime {
        angular_ns: 1.0 / (dp.kappa_b_ang() * probe.n_b_mean),
        linear_ns: 1.0 / (dp.kappa_b * 1e-3 * probe.n_b_mean),
    })
}
