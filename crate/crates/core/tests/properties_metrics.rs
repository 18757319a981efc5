use std::f64::consts::SQRT_2;

use lambda_scope::efficiency::{exponential_model, q_step, step_error_bound};
use lambda_scope::reflection::default_alpha;
use lambda_scope::{
    derive_dispersive, efficiency_eta2, q_of_tau, reflection_coefficient, BareParams, DurationDistribution,
    OperatingPoint, ProbeSpec, ReadoutModel,
};
use proptest::prelude::*;
use statrs::function::erf::erf;

fn readout(snr: f64, window: f64) -> ReadoutModel {
    let dp = derive_dispersive(&BareParams::default()).unwrap();
    ReadoutModel {
        probe: ProbeSpec::at_excited_resonance(&dp, 0.05),
        window,
        snr,
        fidelity: erf(snr / SQRT_2),
    }
}

/// η₂ with q replaced by its step-function stand-in, in closed form.
fn eta2_step(fidelity: f64, gamma: f64, window: f64) -> f64 {
    let survive = (-gamma * window / 2.0).exp();
    q_step(fidelity, window, 0.0) * (1.0 - survive) + q_step(fidelity, window, window) * survive
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn efficiencies_stay_within_fidelity_bounds(
        snr in 0.0f64..6.0,
        window in 1.0f64..5000.0,
        lifetime_us in 0.1f64..50.0,
    ) {
        let r = readout(snr, window);
        let m = exponential_model(&r, lifetime_us).unwrap();
        let (lo, hi) = ((1.0 - r.fidelity) / 2.0, (1.0 + r.fidelity) / 2.0);
        for eta in [m.eta1, m.eta2] {
            prop_assert!(eta >= lo - 1e-12 && eta <= hi + 1e-12, "{eta} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn eta1_and_eta2_agree_for_short_windows(snr in 0.0f64..6.0, lifetime_us in 0.5f64..50.0, x in 0.0f64..0.2) {
        let window = x * lifetime_us * 1e3;
        let m = exponential_model(&readout(snr, window), lifetime_us).unwrap();
        let bound = step_error_bound(m.fidelity, 1e-3 / lifetime_us, window);
        prop_assert!((m.eta1 - m.eta2).abs() <= bound + 1e-9, "{} > {bound}", (m.eta1 - m.eta2).abs());
    }

    #[test]
    fn step_function_error_is_second_order(snr in 0.0f64..6.0, window in 1.0f64..5000.0, lifetime_us in 0.1f64..50.0) {
        let r = readout(snr, window);
        let gamma = 1e-3 / lifetime_us;
        let exact = efficiency_eta2(&DurationDistribution::Exponential { gamma }, &r).unwrap();
        let bound = r.fidelity * (gamma * window).powi(2) / 8.0;
        let err = (exact - eta2_step(r.fidelity, gamma, window)).abs();
        prop_assert!(err <= bound + 1e-9, "{err} > {bound}");
    }

    #[test]
    fn q_rises_monotonically_between_its_limits(snr in 0.0f64..6.0, window in 1.0f64..5000.0, a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let f = erf(snr / SQRT_2);
        let (t0, t1) = (a.min(b) * window, a.max(b) * window);
        let (q0, q1) = (q_of_tau(snr, window, t0), q_of_tau(snr, window, t1));
        prop_assert!(q0 <= q1 + 1e-15);
        for q in [q0, q1] {
            prop_assert!(q >= (1.0 - f) / 2.0 - 1e-15 && q <= (1.0 + f) / 2.0 + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // stated tolerances that the exact expressions violate at large SNR; the
    // properties above enforce the bounds that do hold
    #[test]
    #[ignore = "violated: the gap reaches F(ΓΔt)²/4, about 1e-2 at ΓΔt = 0.2"]
    fn eta1_and_eta2_within_1e3_for_short_windows(snr in 0.0f64..6.0, lifetime_us in 0.5f64..50.0, x in 0.0f64..0.2) {
        let window = x * lifetime_us * 1e3;
        let m = exponential_model(&readout(snr, window), lifetime_us).unwrap();
        prop_assert!((m.eta1 - m.eta2).abs() <= 1e-3);
    }

    #[test]
    #[ignore = "violated: the error scales as F(ΓΔt)², not (1−F)ΓΔt"]
    fn step_function_error_within_first_order_bound(snr in 0.0f64..6.0, window in 1.0f64..5000.0, lifetime_us in 0.1f64..50.0) {
        let r = readout(snr, window);
        let gamma = 1e-3 / lifetime_us;
        let exact = efficiency_eta2(&DurationDistribution::Exponential { gamma }, &r).unwrap();
        let err = (exact - eta2_step(r.fidelity, gamma, window)).abs();
        prop_assert!(err <= (1.0 - r.fidelity) / 2.0 * gamma * window);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weak_signal_reflection_is_linear(carrier in 9.98f64..10.12, scale in 0.05f64..2.0) {
        let op = OperatingPoint::reference().unwrap();
        let alpha = default_alpha(&op.dp);
        let r0 = reflection_coefficient(&op.dp, &op.drive, carrier, alpha).unwrap();
        let r1 = reflection_coefficient(&op.dp, &op.drive, carrier, alpha * scale).unwrap();
        // the pumped |2̃⟩ population, ~1e-4 at the default amplitude and growing as α², sets the nonlinearity
        let response = (lambda_scope::C64::new(1.0, 0.0) - r0).norm();
        prop_assert!((r0 - r1).norm() < 1e-3 * response.max(1e-3), "{r0} vs {r1}");
    }
}
