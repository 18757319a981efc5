//! The reference operating point of the detector.

use serde::Serialize;

use crate::dressed::find_impedance_match;
use crate::error::Result;
use crate::params::{derive_dispersive, BareParams, DispersiveParams, DriveSpec, ProbeSpec};
use crate::pulse::PulseSpec;
use crate::units::Ghz;

pub const DRIVE_GHZ: f64 = 4.832;
pub const SIGNAL_GHZ: f64 = 10.05;
pub const PROBE_PHOTONS: f64 = 0.05;
pub const WINDOW_NS: f64 = 575.0;
pub const PULSE_NS: f64 = 100.0;

#[derive(Clone, Debug, Serialize)]
pub struct OperatingPoint {
    pub dp: DispersiveParams,
    /// Impedance-matched qubit drive.
    pub drive: DriveSpec,
    pub probe: ProbeSpec,
    pub pulse: PulseSpec,
    /// Readout integration time Δt (ns).
    pub window: f64,
}

impl OperatingPoint {
    /// Impedance-matched drive at 4.832 GHz, probe ⟨n_b⟩ = 0.05 on the
    /// excited-state resonance, 100 ns pulse at 10.05 GHz, Δt = 575 ns.
    pub fn reference() -> Result<Self> {
        Self::from_params(derive_dispersive(&BareParams::default())?, DRIVE_GHZ)
    }

    pub fn from_params(dp: DispersiveParams, omega_d: f64) -> Result<Self> {
        let rabi = find_impedance_match(&dp, Ghz(omega_d))?;
        let probe = ProbeSpec::at_excited_resonance(&dp, PROBE_PHOTONS);
        Ok(OperatingPoint {
            dp,
            drive: DriveSpec::new(Ghz(omega_d), rabi),
            probe,
            pulse: PulseSpec::gaussian(SIGNAL_GHZ, PULSE_NS),
            window: WINDOW_NS,
        })
    }
}
