//! Linear ("/2π") frequencies at the boundary, angular rad/ns inside.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Linear frequency in GHz.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ghz(pub f64);

/// Linear frequency in MHz.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mhz(pub f64);

pub trait LinearFrequency: Copy {
    /// Value in GHz (cycles per ns).
    fn ghz(self) -> f64;
}

impl LinearFrequency for Ghz {
    fn ghz(self) -> f64 {
        self.0
    }
}

impl LinearFrequency for Mhz {
    fn ghz(self) -> f64 {
        self.0 * 1e-3
    }
}

/// Converts a linear frequency to an angular rate in rad/ns.
pub fn angular<F: LinearFrequency>(f: F) -> f64 {
    TAU * f.ghz()
}

impl Ghz {
    pub fn from_angular(w: f64) -> Self {
        Ghz(w / TAU)
    }
    pub fn to_mhz(self) -> Mhz {
        Mhz(self.0 * 1e3)
    }
}

impl Mhz {
    pub fn from_angular(w: f64) -> Self {
        Mhz(w / TAU * 1e3)
    }
    pub fn to_ghz(self) -> Ghz {
        Ghz(self.0 * 1e-3)
    }
}

/// Rate in 1/ns converted to 1/μs.
pub fn per_us(rate_per_ns: f64) -> f64 {
    rate_per_ns * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_b_angular() {
        assert!((angular(Mhz(46.0)) - 0.289_026_524_130_261_2).abs() < 1e-12);
        assert!((angular(Mhz(46.0)) - 0.28903).abs() < 5e-6);
        assert_eq!(angular(Ghz(0.0)), 0.0);
    }

    #[test]
    fn round_trip_within_one_ulp() {
        for &x in &[1e-6, 0.01, 4.832, 10.05, 12.023, 1234.5] {
            let back = Ghz::from_angular(angular(Ghz(x))).0;
            assert!((back - x).abs() <= f64::EPSILON * x, "{x} -> {back}");
            let back = Mhz::from_angular(angular(Mhz(x))).0;
            assert!((back - x).abs() <= 2.0 * f64::EPSILON * x, "{x} -> {back}");
        }
    }
}
