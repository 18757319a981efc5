//! Steady-state reflection of a weak continuous signal off resonator A.

use serde::Serialize;

use crate::dressed::{dressed_at, transition_frequencies};
use crate::error::{Error, Result};
use crate::lindblad::{build_liouvillian, expect, steady_state, CoherentDrive, Subsystem};
use crate::params::{DispersiveParams, DriveSpec};
use crate::space::Space;
use crate::sweep::par_map;
use crate::C64;

/// Largest steady ⟨a†a⟩ accepted as linear response.
pub const WEAK_LIMIT: f64 = 0.01;

/// Input amplitude √(photons/ns) with |α|² = 10⁻⁴ γ: at most one absorbed
/// photon per 10⁴ qubit lifetimes, so the pumped population stays ≲ 10⁻⁴.
pub fn default_alpha(dp: &DispersiveParams) -> f64 {
    (1e-4 * dp.gamma_ang()).sqrt()
}

/// r_s = 1 − √κ_a⟨a⟩/α for input `alpha` (√(photons/ns)) at carrier
/// `omega_s` (GHz). The probe is off, so resonator B stays empty and is
/// dropped from the space.
pub fn reflection_coefficient(dp: &DispersiveParams, drive: &DriveSpec, omega_s: f64, alpha: f64) -> Result<C64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("signal amplitude must be > 0, got {alpha}")));
    }
    drive.validate(dp)?;
    let reduced = dp.with_truncation(dp.n_a_max.max(1), 0);
    let signal = CoherentDrive {
        target: Subsystem::A,
        frequency: omega_s,
        amplitude: C64::new(alpha, 0.0),
    };
    let l = build_liouvillian(&reduced, drive, &[signal])?;
    let rho = steady_state(&l)?;
    let space = Space::new(reduced.n_a_max, 0);
    let a = space.a();
    let n = expect(&a.dagger().matmul(&a), &rho).re;
    if n >= WEAK_LIMIT {
        return Err(Error::NotWeak(n));
    }
    let mean_a = expect(&a, &rho);
    Ok(C64::new(1.0, 0.0) - mean_a * dp.kappa_a_ang().sqrt() / alpha)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReflectionPoint {
    #[serde(rename = "Omega_d_MHz")]
    pub rabi: f64,
    #[serde(rename = "omega_s_GHz")]
    pub omega_s: f64,
    pub abs_r: f64,
    pub arg_r: f64,
    /// Dressed |1̃⟩→|3̃⟩ and |1̃⟩→|4̃⟩ transition frequencies (GHz).
    #[serde(rename = "w31_GHz")]
    pub w31: f64,
    #[serde(rename = "w41_GHz")]
    pub w41: f64,
}

/// Row-major (Ω_d outer, ω_s inner) map of r_s at drive carrier `omega_d`.
pub fn reflection_map(
    dp: &DispersiveParams,
    omega_d: f64,
    rabis: &[f64],
    omega_s: &[f64],
    workers: usize,
) -> Result<Vec<ReflectionPoint>> {
    if rabis.is_empty() || omega_s.is_empty() {
        return Err(Error::invalid("reflection grid is empty"));
    }
    let alpha = default_alpha(dp);
    let overlays = par_map(rabis, workers, |k, &rabi| {
        let drive = DriveSpec { omega_d, rabi };
        dressed_at(dp, &drive)
            .map(|(spec, _)| transition_frequencies(&spec))
            .map_err(|e| Error::at(k, format!("Omega_d={rabi} MHz"), e))
    })?;
    let grid: Vec<(usize, f64)> = (0..rabis.len())
        .flat_map(|i| omega_s.iter().map(move |&w| (i, w)))
        .collect();
    par_map(&grid, workers, |k, &(i, w)| {
        let drive = DriveSpec { omega_d, rabi: rabis[i] };
        let r = reflection_coefficient(dp, &drive, w, alpha)
            .map_err(|e| Error::at(k, format!("Omega_d={} MHz, omega_s={w} GHz", rabis[i]), e))?;
        Ok(ReflectionPoint {
            rabi: rabis[i],
            omega_s: w,
            abs_r: r.norm(),
            arg_r: r.arg(),
            w31: overlays[i].w31,
            w41: overlays[i].w41,
        })
    })
}
