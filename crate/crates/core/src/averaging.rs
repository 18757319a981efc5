//! Boxcar time average of a sampled excitation probability.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct WindowedAverage {
    /// Window length Δt (ns).
    pub window: f64,
    /// Times at which the full window fits inside the record.
    pub t: Vec<f64>,
    /// p̄(t) = (1/Δt)∫_{t−Δt}^{t} p(t′) dt′.
    pub mean: Vec<f64>,
    /// Earliest time of the maximum.
    pub t_max: f64,
    pub max: f64,
}

/// Trapezoidal moving average over a uniform grid. The lower window edge is
/// linearly interpolated when Δt is not a multiple of the grid step.
pub fn moving_average(t: &[f64], p: &[f64], window: f64) -> Result<WindowedAverage> {
    if t.len() != p.len() || t.len() < 2 {
        return Err(Error::invalid("moving average needs matching time and value arrays of length >= 2"));
    }
    let dt = t[1] - t[0];
    if !(window >= dt * (1.0 - 1e-9)) {
        return Err(Error::invalid(format!("window {window} ns is shorter than one grid step {dt} ns")));
    }
    let span = t[t.len() - 1] - t[0];
    if window > span * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("window {window} ns exceeds trajectory span {span} ns")));
    }

    // cumulative trapezoid integral on the grid
    let mut cum = Vec::with_capacity(p.len());
    cum.push(0.0);
    for k in 1..p.len() {
        let h = t[k] - t[k - 1];
        cum.push(cum[k - 1] + 0.5 * h * (p[k] + p[k - 1]));
    }
    let integral_at = |x: f64| -> f64 {
        let u = (x - t[0]) / dt;
        let k = (u.floor() as usize).min(p.len() - 2);
        let f = u - k as f64;
        if f <= 1e-12 {
            return cum[k];
        }
        // exact integral of the linear interpolant on the partial cell
        let pk = p[k];
        let px = pk + f * (p[k + 1] - pk);
        cum[k] + 0.5 * f * dt * (pk + px)
    };

    let first = t.iter().position(|&x| x - window >= t[0] - 1e-9 * dt).expect("window fits");
    let mut out_t = Vec::with_capacity(t.len() - first);
    let mut mean = Vec::with_capacity(t.len() - first);
    let (mut t_max, mut max) = (f64::NAN, f64::NEG_INFINITY);
    for k in first..t.len() {
        let m = (cum[k] - integral_at((t[k] - window).max(t[0]))) / window;
        // values equal up to round-off count as ties
        if max == f64::NEG_INFINITY || m > max + 1e-12 * max.abs() {
            max = m;
            t_max = t[k];
        }
        out_t.push(t[k]);
        mean.push(m);
    }
    Ok(WindowedAverage {
        window,
        t: out_t,
        mean,
        t_max,
        max,
    })
}
