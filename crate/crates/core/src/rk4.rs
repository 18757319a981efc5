//! Classic fixed-step fourth-order Runge–Kutta on complex state vectors.

use crate::C64;

/// A linear or nonlinear ODE `dy/dt = f(t, y)` on a flat complex vector.
pub trait OdeSystem {
    fn len(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

/// Integrator with preallocated stage buffers.
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Rk4 {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Advances `y` from `t` to `t + dt`.
    pub fn step<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, dt: f64, y: &mut [C64]) {
        let h2 = 0.5 * dt;
        sys.rhs(t, y, &mut self.k1);
        for ((o, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *o = y + k * h2;
        }
        sys.rhs(t + h2, &self.tmp, &mut self.k2);
        for ((o, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *o = y + k * h2;
        }
        sys.rhs(t + h2, &self.tmp, &mut self.k3);
        for ((o, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *o = y + k * dt;
        }
        sys.rhs(t + dt, &self.tmp, &mut self.k4);
        let w = dt / 6.0;
        for (i, y) in y.iter_mut().enumerate() {
            *y += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}
