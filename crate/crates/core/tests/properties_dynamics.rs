use lambda_scope::efficiency::{efficiencies_from_trajectory, record_end};
use lambda_scope::lindblad::Liouvillian;
use lambda_scope::rk4::{OdeSystem, Rk4};
use lambda_scope::{
    build_liouvillian, evolve_single_photon, steady_state, CoherentDrive, EvolveOptions, OperatingPoint, ProbeSpec,
    PulseSpec, Subsystem, C64,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn op() -> OperatingPoint {
    OperatingPoint::reference().unwrap()
}

struct Master<'a>(&'a Liouvillian);

impl OdeSystem for Master<'_> {
    fn len(&self) -> usize {
        self.0.dim() * self.0.dim()
    }
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.0.apply(y, dy);
    }
}

fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let h = (&d + d.adjoint()) * C64::new(0.5, 0.0);
    0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // probe off: nothing can be absorbed before it is delivered
    #[test]
    fn capture_respects_delivered_energy(length in 60.0f64..200.0, carrier in 10.03f64..10.07) {
        let op = op();
        let pulse = PulseSpec::gaussian(carrier, length);
        let traj = evolve_single_photon(&op.dp, &op.drive, None, &pulse, 3.0 * length, &EvolveOptions::default())
            .unwrap();
        for (t, p) in traj.t.iter().zip(&traj.p_e) {
            prop_assert!(*p <= pulse.delivered(*t) + 1e-3, "p_e {p} at {t} ns exceeds delivered");
        }
        prop_assert!(traj.max_trace_error <= 1e-8);
        prop_assert!(traj.max_hermiticity_error <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    // verification re-runs at dt/2 and with one more Fock level of B
    #[test]
    fn refined_trajectories_agree(n_b in 0.01f64..0.1, length in 70.0f64..130.0) {
        let op = op();
        let probe = ProbeSpec::at_excited_resonance(&op.dp, n_b);
        let pulse = PulseSpec::gaussian(10.05, length);
        let windows = [200.0, 575.0, 1000.0];
        let opts = EvolveOptions::default().verified();
        let traj = evolve_single_photon(&op.dp, &op.drive, Some(&probe), &pulse, record_end(&pulse, &windows), &opts);
        prop_assert!(traj.is_ok(), "{}", traj.unwrap_err());
        let traj = traj.unwrap();
        prop_assert!(traj.max_trace_error <= 1e-8);
        prop_assert!(traj.max_hermiticity_error <= 1e-10);
        for r in efficiencies_from_trajectory(&traj, &op.dp, &probe, &windows).unwrap() {
            let (lo, hi) = ((1.0 - r.fidelity) / 2.0, (1.0 + r.fidelity) / 2.0);
            prop_assert!(r.eta1 >= lo - 1e-12 && r.eta1 <= hi + 1e-12, "eta1 {} outside [{lo}, {hi}]", r.eta1);
            prop_assert!(r.eta2 >= lo - 1e-12 && r.eta2 <= hi + 1e-12, "eta2 {} outside [{lo}, {hi}]", r.eta2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    // resonator A carries no field here and is dropped; B keeps three levels
    #[test]
    fn long_time_integration_reaches_the_steady_state(n_b in 0.0f64..0.1) {
        let op = op();
        let dp = op.dp.with_truncation(0, 2);
        let probe = ProbeSpec::at_excited_resonance(&dp, n_b);
        let drive = CoherentDrive {
            target: Subsystem::B,
            frequency: probe.omega_p,
            amplitude: C64::new(probe.flux(&dp).sqrt(), 0.0),
        };
        let l = build_liouvillian(&dp, &op.drive, &[drive]).unwrap();
        let rho_ss = steady_state(&l).unwrap();

        let dim = l.dim();
        let mut rho: Vec<C64> = DMatrix::<C64>::identity(dim, dim).scale(1.0 / dim as f64).as_slice().to_vec();
        let sys = Master(&l);
        let mut rk = Rk4::new(rho.len());
        let (dt, t_end) = (0.5, 30.0 / dp.gamma_ang());
        let steps = (t_end / dt).ceil() as usize;
        for k in 0..steps {
            rk.step(&sys, k as f64 * dt, dt, &mut rho);
        }
        let rho = DMatrix::from_column_slice(dim, dim, &rho);
        let d = trace_distance(&rho, &rho_ss);
        prop_assert!(d < 1e-6, "trace distance {d:.3e}");
    }
}
