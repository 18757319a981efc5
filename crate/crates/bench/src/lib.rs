//! Fixtures shared by the benchmarks.

use lambda_scope::{OperatingPoint, C64};

/// The reference operating point; panics only if the defaults are broken.
pub fn reference() -> OperatingPoint {
    OperatingPoint::reference().expect("reference operating point")
}

/// Normalized pseudo-random density-matrix-shaped vector of length `dim²`.
pub fn test_state(dim: usize) -> Vec<C64> {
    let mut x = 0x2545_f491_u64;
    let mut next = || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x % 1000) as f64 / 1000.0
    };
    let mut rho: Vec<C64> = (0..dim * dim).map(|_| C64::new(next(), next())).collect();
    let tr: f64 = (0..dim).map(|i| rho[i * dim + i].re).sum();
    rho.iter_mut().for_each(|z| *z /= tr);
    rho
}
