//! Simulation and analysis toolkit for a continuously operated microwave
//! single-photon detector: a driven transmon dispersively coupled to a
//! capture resonator (A) and a readout resonator (B).
//!
//! Conventions: every user-facing frequency is a *linear* frequency
//! (GHz for carriers, MHz for shifts, couplings and rates). Dynamics run in
//! angular units (rad/ns) with time in ns; [`units`] is the single place
//! where the two meet.

pub mod averaging;
pub mod dressed;
pub mod efficiency;
pub mod error;
pub mod lindblad;
pub mod operating;
pub mod params;
pub mod photon;
pub mod pulse;
pub mod readout;
pub mod reflection;
pub mod regression;
pub mod rk4;
pub mod space;
pub mod sweep;
pub mod units;

pub use num_complex::Complex64 as C64;

pub use crate::dressed::{
    build_hamiltonian, decay_table, diagonalize_dressed, find_impedance_match,
    transition_frequencies, DecayTable, DressedSpectrum, FrameSpec, HamiltonianMatrix,
    TransitionFrequencies,
};
pub use crate::efficiency::{
    detection_band, efficiency_eta1, efficiency_eta2, q_of_tau, DetectionBand,
    DurationDistribution, EfficiencyResult,
};
pub use crate::error::{Error, Result};
pub use crate::lindblad::{build_liouvillian, steady_state, CoherentDrive, Liouvillian, Subsystem};
pub use crate::operating::OperatingPoint;
pub use crate::params::{derive_dispersive, BareParams, DispersiveParams, DriveSpec, ProbeSpec};
pub use crate::photon::{
    dark_count_rate, evolve_single_photon, excited_lifetime, DarkCount, EvolveOptions, Lifetime,
    Trajectory,
};
pub use crate::pulse::PulseSpec;
pub use crate::readout::{probe_phases, snr_fidelity, zeno_time, ProbePhases, ReadoutModel};
pub use crate::reflection::{reflection_coefficient, reflection_map, ReflectionPoint};
pub use crate::averaging::{moving_average, WindowedAverage};
pub use crate::units::{angular, Ghz, Mhz};
