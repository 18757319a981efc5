//! Device parameters and the bare → dispersive transformation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{angular, Ghz, Mhz};

/// Largest admissible g / |ω̄_r − ω̄_q| for the dispersive frame to be trusted.
pub const DISPERSIVE_LIMIT: f64 = 0.2;

/// Bare circuit parameters. Carrier frequencies and couplings in GHz, decay
/// rates in MHz, all linear.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BareParams {
    pub omega_bar_a: f64,
    pub omega_bar_b: f64,
    pub omega_bar_q: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma: f64,
    pub n_a_max: usize,
    pub n_b_max: usize,
}

impl Default for BareParams {
    /// The reference device: (10, 12, 5, 0.5, 0.4) GHz, κ = (20, 46) MHz,
    /// γ = 0.01 MHz, Fock levels 0..=3 in each resonator.
    fn default() -> Self {
        BareParams {
            omega_bar_a: 10.0,
            omega_bar_b: 12.0,
            omega_bar_q: 5.0,
            g_a: 0.5,
            g_b: 0.4,
            kappa_a: 20.0,
            kappa_b: 46.0,
            gamma: 0.01,
            n_a_max: 3,
            n_b_max: 3,
        }
    }
}

impl BareParams {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: BareParams = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Checks positivity, truncation and the dispersive-validity bound.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_bar_a", self.omega_bar_a),
            ("omega_bar_b", self.omega_bar_b),
            ("omega_bar_q", self.omega_bar_q),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("gamma", self.gamma),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("g_a", self.g_a), ("g_b", self.g_b)] {
            // zero coupling is the trivially dispersive limit
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.n_a_max < 2 || self.n_b_max < 2 {
            return Err(Error::invalid(format!(
                "Fock truncations must be >= 2, got n_a_max = {}, n_b_max = {}",
                self.n_a_max, self.n_b_max
            )));
        }
        for (label, g, w) in [('a', self.g_a, self.omega_bar_a), ('b', self.g_b, self.omega_bar_b)] {
            let ratio = g / (w - self.omega_bar_q).abs();
            if !(ratio < DISPERSIVE_LIMIT) {
                return Err(Error::NotDispersive {
                    resonator: label,
                    ratio,
                    limit: DISPERSIVE_LIMIT,
                });
            }
        }
        Ok(())
    }
}

/// Parameters of the dispersive Hamiltonian. Shifts in MHz, renormalized
/// frequencies in GHz, rates in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveParams {
    pub chi_a: f64,
    pub chi_b: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_q: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma: f64,
    pub n_a_max: usize,
    pub n_b_max: usize,
}

/// χ_r = g_r²/(ω̄_r − ω̄_q), with ω_r = ω̄_r + χ_r and ω_q = ω̄_q − χ_a − χ_b.
pub fn derive_dispersive(bare: &BareParams) -> Result<DispersiveParams> {
    bare.validate()?;
    // g² in GHz² scaled to MHz·GHz before the division keeps χ_a = 50 exact
    let chi_a = bare.g_a * bare.g_a * 1e3 / (bare.omega_bar_a - bare.omega_bar_q);
    let chi_b = bare.g_b * bare.g_b * 1e3 / (bare.omega_bar_b - bare.omega_bar_q);
    Ok(DispersiveParams {
        chi_a,
        chi_b,
        omega_a: bare.omega_bar_a + chi_a * 1e-3,
        omega_b: bare.omega_bar_b + chi_b * 1e-3,
        omega_q: bare.omega_bar_q - (chi_a + chi_b) * 1e-3,
        kappa_a: bare.kappa_a,
        kappa_b: bare.kappa_b,
        gamma: bare.gamma,
        n_a_max: bare.n_a_max,
        n_b_max: bare.n_b_max,
    })
}

impl DispersiveParams {
    pub fn kappa_a_ang(&self) -> f64 {
        angular(Mhz(self.kappa_a))
    }
    pub fn kappa_b_ang(&self) -> f64 {
        angular(Mhz(self.kappa_b))
    }
    pub fn gamma_ang(&self) -> f64 {
        angular(Mhz(self.gamma))
    }
    pub fn chi_a_ang(&self) -> f64 {
        angular(Mhz(self.chi_a))
    }
    pub fn chi_b_ang(&self) -> f64 {
        angular(Mhz(self.chi_b))
    }

    /// Open interval of drive frequencies (GHz) giving the nested level
    /// ordering for resonator A and the un-nested one for B.
    pub fn nesting_window(&self) -> (f64, f64) {
        (
            self.omega_q - 2.0 * self.chi_a * 1e-3,
            self.omega_q - 2.0 * self.chi_b * 1e-3,
        )
    }

    /// Readout-resonator frequency conditioned on the excited qubit, ω_b − 2χ_b (GHz).
    pub fn omega_b_excited(&self) -> f64 {
        self.omega_b - 2.0 * self.chi_b * 1e-3
    }

    /// Copy with different Fock truncations.
    pub fn with_truncation(&self, n_a_max: usize, n_b_max: usize) -> Self {
        DispersiveParams {
            n_a_max,
            n_b_max,
            ..self.clone()
        }
    }
}

/// Continuous qubit drive: carrier (GHz) and Rabi frequency Ω_d (MHz, linear).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub omega_d: f64,
    #[serde(rename = "Omega_d")]
    pub rabi: f64,
}

impl DriveSpec {
    pub fn new(omega_d: Ghz, rabi: Mhz) -> Self {
        DriveSpec {
            omega_d: omega_d.0,
            rabi: rabi.0,
        }
    }

    pub fn rabi_ang(&self) -> f64 {
        angular(Mhz(self.rabi))
    }

    /// Rejects drives outside the nesting window (endpoints excluded) or with
    /// a negative Rabi frequency.
    pub fn validate(&self, dp: &DispersiveParams) -> Result<()> {
        if !(self.rabi.is_finite() && self.rabi >= 0.0) {
            return Err(Error::invalid(format!("Omega_d must be >= 0, got {}", self.rabi)));
        }
        let (low, high) = dp.nesting_window();
        if !(self.omega_d > low && self.omega_d < high) {
            return Err(Error::OutsideNestingWindow {
                omega_d: self.omega_d,
                low,
                high,
            });
        }
        Ok(())
    }
}

/// Continuous readout probe on resonator B.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// Probe carrier (GHz).
    pub omega_p: f64,
    /// Probe power expressed as ⟨n_b⟩ = 4|E_p|²/κ_b.
    pub n_b_mean: f64,
}

impl ProbeSpec {
    /// Probe at ω_b − 2χ_b, resonant with the excited-qubit readout resonator.
    pub fn at_excited_resonance(dp: &DispersiveParams, n_b_mean: f64) -> Self {
        ProbeSpec {
            omega_p: dp.omega_b_excited(),
            n_b_mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_b_mean.is_finite() && self.n_b_mean >= 0.0) {
            return Err(Error::invalid(format!("n_b_mean must be >= 0, got {}", self.n_b_mean)));
        }
        if !(self.omega_p.is_finite() && self.omega_p > 0.0) {
            return Err(Error::invalid(format!("omega_p must be > 0, got {}", self.omega_p)));
        }
        Ok(())
    }

    /// Incident photon flux |E_p|² = κ_b⟨n_b⟩/4 in photons per ns.
    pub fn flux(&self, dp: &DispersiveParams) -> f64 {
        dp.kappa_b_ang() * self.n_b_mean / 4.0
    }

    pub fn is_off(&self) -> bool {
        self.n_b_mean == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> DispersiveParams {
        derive_dispersive(&BareParams::default()).unwrap()
    }

    #[test]
    fn reference_shifts_and_frequencies() {
        let dp = reference();
        assert_eq!(dp.chi_a, 50.0);
        assert!((dp.chi_b - 160.0 / 7.0).abs() < 1e-12);
        assert!((dp.omega_a - 10.050).abs() < 1e-3);
        assert!((dp.omega_b - 12.023).abs() < 1e-3);
        assert!((dp.omega_q - 4.927).abs() < 1e-3);
    }

    #[test]
    fn zero_coupling_leaves_bare_frequencies() {
        let bare = BareParams {
            g_a: 0.0,
            g_b: 0.0,
            ..BareParams::default()
        };
        let dp = derive_dispersive(&bare).unwrap();
        assert_eq!((dp.chi_a, dp.chi_b), (0.0, 0.0));
        assert_eq!((dp.omega_a, dp.omega_b, dp.omega_q), (10.0, 12.0, 5.0));
    }

    #[test]
    fn qubit_above_resonator_gives_negative_shift() {
        let bare = BareParams {
            omega_bar_q: 11.0,
            g_a: 0.1,
            g_b: 0.1,
            ..BareParams::default()
        };
        let dp = derive_dispersive(&bare).unwrap();
        assert!(dp.chi_a < 0.0);
        assert!(dp.chi_b > 0.0);
    }

    #[test]
    fn dispersive_bound_names_ratio() {
        let bare = BareParams {
            g_a: 1.5,
            ..BareParams::default()
        };
        let err = derive_dispersive(&bare).unwrap_err();
        match err {
            Error::NotDispersive { resonator, ratio, .. } => {
                assert_eq!(resonator, 'a');
                assert!((ratio - 0.3).abs() < 1e-12);
            }
            other => panic!("unexpected {other}"),
        }
        assert!(err_string(&BareParams { g_b: 2.0, ..BareParams::default() }).contains("0.2857"));
    }

    fn err_string(b: &BareParams) -> String {
        derive_dispersive(b).unwrap_err().to_string()
    }

    #[test]
    fn rejects_bad_truncation_and_rates() {
        assert!(derive_dispersive(&BareParams { n_a_max: 1, ..BareParams::default() }).is_err());
        assert!(derive_dispersive(&BareParams { gamma: 0.0, ..BareParams::default() }).is_err());
        assert!(derive_dispersive(&BareParams { kappa_b: f64::NAN, ..BareParams::default() }).is_err());
    }

    #[test]
    fn derivation_is_bit_identical() {
        let b = BareParams::default();
        assert_eq!(derive_dispersive(&b).unwrap(), derive_dispersive(&b).unwrap());
    }

    #[test]
    fn nesting_window() {
        let dp = reference();
        let (lo, hi) = dp.nesting_window();
        assert!((lo - 4.827_142_857).abs() < 1e-6);
        assert!((hi - 4.881_428_571).abs() < 1e-6);
        for w in [4.8272, 4.832, 4.85, 4.881] {
            assert!(DriveSpec::new(Ghz(w), Mhz(10.0)).validate(&dp).is_ok(), "{w}");
        }
        for w in [lo, hi, 4.82, 4.9] {
            assert!(DriveSpec::new(Ghz(w), Mhz(10.0)).validate(&dp).is_err(), "{w}");
        }
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let good = serde_json::to_string(&BareParams::default()).unwrap();
        assert_eq!(BareParams::from_json_str(&good).unwrap(), BareParams::default());
        let bad = good.replacen('{', "{\"omega_bar_c\": 1.0,", 1);
        assert!(BareParams::from_json_str(&bad).is_err());
        let missing = r#"{"omega_bar_a": 10.0}"#;
        assert!(BareParams::from_json_str(missing).is_err());
    }

    #[test]
    fn probe_flux_convention() {
        let dp = reference();
        let probe = ProbeSpec::at_excited_resonance(&dp, 0.05);
        // |E_p|² = κ_b⟨n_b⟩/4 with angular κ_b
        assert!((probe.flux(&dp) - 0.289_026_524 * 0.05 / 4.0).abs() < 1e-9);
        assert!((probe.omega_p - (12.0 + 160.0 / 7.0 * 1e-3 - 320.0 / 7.0 * 1e-3)).abs() < 1e-12);
    }
}
