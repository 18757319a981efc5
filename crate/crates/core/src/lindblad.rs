//! Lindblad generator around the driven dispersive Hamiltonian, with
//! coherent input drives on either resonator, and its stationary state.

use nalgebra::{DMatrix, DVector};

use crate::dressed::{hamiltonian_sparse, FrameSpec};
use crate::error::{Error, Result};
use crate::params::{DispersiveParams, DriveSpec};
use crate::space::{trace, SparseOp, Space};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Coherent input through the waveguide of one resonator, entering as
/// `i√κ (α x† − α* x)` in the frame rotating at `frequency`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentDrive {
    pub target: Subsystem,
    /// Carrier (GHz).
    pub frequency: f64,
    /// Input amplitude α_in in √(photons/ns).
    pub amplitude: C64,
}

/// Generator `L ρ = −i(H_eff ρ − ρ H_eff†) + Σ_c C ρ C†` with
/// `H_eff = H − (i/2) Σ_c C†C` and collapse channels √κ_a a, √κ_b b, √γ σ.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub space: Space,
    pub frame: FrameSpec,
    pub hamiltonian: SparseOp,
    h_eff: SparseOp,
    h_eff_dag: SparseOp,
    collapses: Vec<SparseOp>,
    /// √κ_a a, used as the coupling of an itinerant photon.
    pub port_a: SparseOp,
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `out = L ρ`.
    pub fn apply(&self, rho: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        self.apply_acc(rho, out);
    }

    /// `out += L ρ`.
    pub fn apply_acc(&self, rho: &[C64], out: &mut [C64]) {
        self.h_eff.left_mul_acc(rho, -I, out);
        // ρ H_eff† has the same entries as (H_eff ρ†)† so right-multiply by H_eff†
        self.h_eff_dag.right_mul_acc(rho, I, out);
        for c in &self.collapses {
            c.sandwich_acc(rho, 1.0, out);
        }
    }

    /// Dense superoperator acting on column-major vec(ρ).
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let n = d * d;
        let mut m = DMatrix::zeros(n, n);
        let mut basis = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            basis[k] = C64::new(1.0, 0.0);
            self.apply(&basis, &mut col);
            m.column_mut(k).copy_from_slice(&col);
            basis[k] = C64::new(0.0, 0.0);
        }
        m
    }
}

/// Assembles the generator with the resonator frames implied by `drives`
/// (each driven resonator rotates at its drive carrier).
pub fn build_liouvillian(dp: &DispersiveParams, drive: &DriveSpec, drives: &[CoherentDrive]) -> Result<Liouvillian> {
    let space = Space::new(dp.n_a_max, dp.n_b_max);
    let mut frame = FrameSpec::qubit_only();
    for d in drives {
        let slot = match d.target {
            Subsystem::A => &mut frame.resonator_a,
            Subsystem::B => &mut frame.resonator_b,
        };
        match *slot {
            Some(f) if f != d.frequency => {
                return Err(Error::Frame(format!(
                    "resonator {:?} driven at both {f} GHz and {} GHz",
                    d.target, d.frequency
                )))
            }
            _ => *slot = Some(d.frequency),
        }
    }
    liouvillian_in_frame(&space, dp, drive, &frame, drives)
}

/// Generator in an explicit frame; every drive must share its resonator's frame.
pub fn liouvillian_in_frame(
    space: &Space,
    dp: &DispersiveParams,
    drive: &DriveSpec,
    frame: &FrameSpec,
    drives: &[CoherentDrive],
) -> Result<Liouvillian> {
    let mut h = hamiltonian_sparse(space, dp, drive, frame)?;
    let (ka, kb, gamma) = (dp.kappa_a_ang(), dp.kappa_b_ang(), dp.gamma_ang());
    let a = space.a();
    let b = space.b();
    for d in drives {
        let (op, kappa, rot) = match d.target {
            Subsystem::A => (&a, ka, frame.resonator_a),
            Subsystem::B => (&b, kb, frame.resonator_b),
        };
        if rot != Some(d.frequency) {
            return Err(Error::Frame(format!(
                "drive on resonator {:?} at {} GHz but frame rotates at {:?}",
                d.target, d.frequency, rot
            )));
        }
        let k = I * kappa.sqrt();
        h = h.add(&op.dagger().scale(k * d.amplitude)).add(&op.scale(-k * d.amplitude.conj()));
    }

    let mut collapses = Vec::new();
    if space.n_a_max > 0 {
        collapses.push(a.scale(C64::new(ka.sqrt(), 0.0)));
    }
    if space.n_b_max > 0 {
        collapses.push(b.scale(C64::new(kb.sqrt(), 0.0)));
    }
    collapses.push(space.sigma().scale(C64::new(gamma.sqrt(), 0.0)));

    let mut h_eff = h.clone();
    for c in &collapses {
        h_eff = h_eff.add(&c.dagger().matmul(c).scale(C64::new(0.0, -0.5)));
    }
    let h_eff_dag = h_eff.dagger();
    Ok(Liouvillian {
        space: *space,
        frame: *frame,
        port_a: a.scale(C64::new(ka.sqrt(), 0.0)),
        hamiltonian: h,
        h_eff,
        h_eff_dag,
        collapses,
    })
}

/// Relative pivot size below which the bordered generator counts as singular.
const RANK_TOL: f64 = 1e-12;
/// Required ‖L ρ‖ of the returned stationary state.
pub const STEADY_RESIDUAL: f64 = 1e-10;

/// Stationary state of `l`: solves `L ρ = 0` with the trace condition
/// replacing one row of the vectorized generator.
pub fn steady_state(l: &Liouvillian) -> Result<DMatrix<C64>> {
    let d = l.dim();
    let n = d * d;
    let mut m = l.to_dense();
    // replace row 0 (the (0,0) population equation) by Σ_i ρ_ii = 1
    for k in 0..n {
        m[(0, k)] = C64::new(0.0, 0.0);
    }
    for i in 0..d {
        m[(0, i + i * d)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::zeros(n);
    rhs[0] = C64::new(1.0, 0.0);

    let lu = m.full_piv_lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..n).map(|k| u[(k, k)].norm()).collect();
    let largest = pivots.iter().cloned().fold(0.0, f64::max);
    let deficit = pivots.iter().filter(|&&p| p <= RANK_TOL * largest).count();
    if deficit > 0 {
        return Err(Error::DegenerateSteadyState(deficit));
    }
    let x = lu.solve(&rhs).ok_or(Error::DegenerateSteadyState(1))?;
    let mut rho = DMatrix::from_column_slice(d, d, x.as_slice());
    // symmetrize away rounding
    rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let tr = rho.trace();
    rho /= tr;

    let mut res = vec![C64::new(0.0, 0.0); n];
    l.apply(rho.as_slice(), &mut res);
    let residual = res.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if residual > STEADY_RESIDUAL {
        return Err(Error::Convergence {
            check: "steady-state residual",
            deviation: residual,
            tolerance: STEADY_RESIDUAL,
            advice: "generator is ill-conditioned; check rates and truncation",
        });
    }
    Ok(rho)
}

/// Tr(A ρ) for a dense state.
pub fn expect(op: &SparseOp, rho: &DMatrix<C64>) -> C64 {
    op.expect(rho.as_slice())
}

/// |Tr(L ρ)| for the given state; zero for a trace-preserving generator.
pub fn trace_drift(l: &Liouvillian, rho: &[C64]) -> f64 {
    let mut out = vec![C64::new(0.0, 0.0); rho.len()];
    l.apply(rho, &mut out);
    trace(&out, l.dim()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_dispersive, BareParams};
    use crate::space::{BasisState, Qubit};
    use crate::units::{Ghz, Mhz};

    fn dp() -> DispersiveParams {
        derive_dispersive(&BareParams::default()).unwrap()
    }

    fn drive(rabi: f64) -> DriveSpec {
        DriveSpec::new(Ghz(4.832), Mhz(rabi))
    }

    fn random_state(d: usize, seed: u64) -> Vec<C64> {
        // Hermitian, positive, unit trace: M M† / Tr
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(d, d, |_, _| C64::new(next(), next()));
        let mut r = &m * m.adjoint();
        let tr = r.trace();
        r /= tr;
        r.as_slice().to_vec()
    }

    #[test]
    fn generator_is_traceless() {
        let dp = dp();
        let probe = CoherentDrive {
            target: Subsystem::B,
            frequency: dp.omega_b_excited(),
            amplitude: C64::new(0.06, 0.01),
        };
        let sig = CoherentDrive {
            target: Subsystem::A,
            frequency: 10.05,
            amplitude: C64::new(0.01, 0.0),
        };
        let l = build_liouvillian(&dp, &drive(10.75), &[probe, sig]).unwrap();
        for seed in 0..5 {
            let rho = random_state(l.dim(), seed);
            assert!(trace_drift(&l, &rho) < 1e-10);
        }
        assert!(l.hamiltonian.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn conflicting_frames_are_rejected() {
        let dp = dp();
        let d = |f| CoherentDrive {
            target: Subsystem::B,
            frequency: f,
            amplitude: C64::new(0.1, 0.0),
        };
        let err = build_liouvillian(&dp, &drive(1.0), &[d(11.9), d(12.0)]).unwrap_err();
        assert!(matches!(err, Error::Frame(_)));
    }

    #[test]
    fn ground_state_is_stationary_without_drives() {
        let dp = dp();
        let l = build_liouvillian(&dp, &drive(0.0), &[]).unwrap();
        let g = l.space.projector(BasisState::new(Qubit::G, 0, 0));
        let mut out = vec![C64::new(0.0, 0.0); g.len()];
        l.apply(&g, &mut out);
        assert!(out.iter().all(|z| z.norm() == 0.0));

        let small = dp.with_truncation(2, 2);
        let l = build_liouvillian(&small, &drive(0.0), &[]).unwrap();
        let rho = steady_state(&l).unwrap();
        let g = l.space.index(BasisState::new(Qubit::G, 0, 0));
        for r in 0..l.dim() {
            for c in 0..l.dim() {
                let want = if r == g && c == g { 1.0 } else { 0.0 };
                assert!((rho[(r, c)] - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_cavity_photon_number() {
        // no dispersive pull: resonant probe fills B with 4|α|²/κ_b photons
        let bare = BareParams {
            g_b: 0.0,
            n_a_max: 2,
            n_b_max: 6,
            ..BareParams::default()
        };
        let dp = derive_dispersive(&bare).unwrap().with_truncation(0, 6);
        let alpha = 0.05_f64;
        let probe = CoherentDrive {
            target: Subsystem::B,
            frequency: dp.omega_b,
            amplitude: C64::new(alpha, 0.0),
        };
        let l = build_liouvillian(&dp, &drive(0.0), &[probe]).unwrap();
        let rho = steady_state(&l).unwrap();
        let b = l.space.b();
        let nb = expect(&b.dagger().matmul(&b), &rho).re;
        let want = 4.0 * alpha * alpha / dp.kappa_b_ang();
        assert!((nb - want).abs() < 1e-6 * want.max(1.0), "{nb} vs {want}");
    }

    #[test]
    fn qubit_decays_at_gamma() {
        let dp = dp().with_truncation(0, 0);
        let l = build_liouvillian(&dp, &drive(0.0), &[]).unwrap();
        let e = l.space.projector(BasisState::new(Qubit::E, 0, 0));
        let mut out = vec![C64::new(0.0, 0.0); e.len()];
        l.apply(&e, &mut out);
        // d p_e/dt = −γ p_e
        assert!((out[1 + 1 * 2].re + dp.gamma_ang()).abs() < 1e-15);
        assert!((out[0].re - dp.gamma_ang()).abs() < 1e-15);
    }

    #[test]
    fn steady_state_residual_and_positivity() {
        let dp = dp();
        let probe = CoherentDrive {
            target: Subsystem::B,
            frequency: dp.omega_b_excited(),
            amplitude: C64::new((dp.kappa_b_ang() * 0.05 / 4.0).sqrt(), 0.0),
        };
        let l = build_liouvillian(&dp.with_truncation(0, 3), &drive(10.75), &[probe]).unwrap();
        let rho = steady_state(&l).unwrap();
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(rho.clone());
        assert!(eig.eigenvalues.iter().all(|&x| x > -1e-10));
    }
}
