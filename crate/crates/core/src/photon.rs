//! Single-photon capture dynamics, probe backaction and dark counts.
//!
//! A one-photon wavepacket ξ(t) incident on resonator A is handled exactly
//! by the Fock-state hierarchy over ρ⁰⁰, ρ¹⁰ (ρ⁰¹ = ρ¹⁰†) and ρ¹¹:
//!
//! ```text
//! dρ⁰⁰/dt = L ρ⁰⁰
//! dρ¹⁰/dt = L ρ¹⁰ + ξ(t) [ρ⁰⁰, C†]
//! dρ¹¹/dt = L ρ¹¹ + ξ(t) ([ρ⁰¹, C†] + [C, ρ¹⁰])
//! ```
//!
//! with `C = √κ_a a`; the physical state is ρ¹¹. Since no coherent field
//! drives resonator A, ρ⁰⁰ stays in its vacuum and ρ¹¹ never holds more than
//! one A photon, so the A truncation is reduced to one photon without error.
//! Likewise resonator B is dropped when the probe is off.

use serde::Serialize;

use crate::dressed::{dressed_at, FrameSpec};
use crate::error::{Error, Result};
use crate::lindblad::{liouvillian_in_frame, steady_state, CoherentDrive, Liouvillian, Subsystem};
use crate::params::{DispersiveParams, DriveSpec, ProbeSpec};
use crate::pulse::PulseSpec;
use crate::rk4::{OdeSystem, Rk4};
use crate::space::{hermiticity_defect, trace, BasisState, Qubit, SparseOp, Space};
use crate::C64;

/// Maximum change of p_e allowed when the step is halved.
pub const STEP_HALVING_TOL: f64 = 1e-4;
/// Maximum change of max p_e allowed when the B truncation grows by one.
pub const TRUNCATION_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    /// Integrator step (ns).
    pub dt: f64,
    /// Keep every `stride`-th step in the trajectory.
    pub stride: usize,
    /// Re-run at dt/2 and fail if p_e moves by more than [`STEP_HALVING_TOL`].
    pub verify_step: bool,
    /// Re-run with one more B Fock level and fail beyond [`TRUNCATION_TOL`].
    pub verify_truncation: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 0.1,
            stride: 1,
            verify_step: false,
            verify_truncation: false,
        }
    }
}

impl EvolveOptions {
    pub fn with_dt(dt: f64) -> Self {
        EvolveOptions {
            dt,
            ..Self::default()
        }
    }

    pub fn verified(self) -> Self {
        EvolveOptions {
            verify_step: true,
            verify_truncation: true,
            ..self
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    /// Sample times (ns).
    pub t: Vec<f64>,
    /// Population of the dressed level |2̃⟩.
    pub p_e: Vec<f64>,
    pub n_a: Vec<f64>,
    pub n_b: Vec<f64>,
    pub dt: f64,
    pub method: &'static str,
    pub n_a_max: usize,
    pub n_b_max: usize,
    /// Worst |Tr ρ − 1| over recorded samples (physical and vacuum components).
    pub max_trace_error: f64,
    /// Worst Hermiticity defect of the physical state over recorded samples.
    pub max_hermiticity_error: f64,
}

impl Trajectory {
    pub fn max_p_e(&self) -> f64 {
        self.p_e.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear interpolation of p_e at `t`.
    pub fn p_e_at(&self, t: f64) -> f64 {
        let k = self.t.partition_point(|&x| x <= t).clamp(1, self.t.len() - 1);
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.p_e[k - 1] + f * (self.p_e[k] - self.p_e[k - 1])
    }
}

/// Observables read from the physical state.
struct Observables {
    p2: SparseOp,
    n_a: SparseOp,
    n_b: SparseOp,
}

impl Observables {
    /// `p2` projects the qubit onto |2̃⟩ = s|g⟩ + c|e⟩, any photon numbers.
    fn new(space: &Space, two: (C64, C64)) -> Self {
        let mut p2 = SparseOp::zeros(space.dim());
        for s in space.states().filter(|s| s.qubit == Qubit::G) {
            let g = space.index(s);
            let e = space.index(BasisState { qubit: Qubit::E, ..s });
            let (ag, ae) = two;
            p2.push(g, g, ag * ag.conj());
            p2.push(g, e, ag * ae.conj());
            p2.push(e, g, ae * ag.conj());
            p2.push(e, e, ae * ae.conj());
        }
        let a = space.a();
        let b = space.b();
        Observables {
            p2,
            n_a: a.dagger().matmul(&a),
            n_b: b.dagger().matmul(&b),
        }
    }
}

/// The three-component hierarchy driven by the wavepacket.
struct Hierarchy<'a> {
    l: &'a Liouvillian,
    pulse: &'a PulseSpec,
    port: SparseOp,
    port_dag: SparseOp,
    scratch: std::cell::RefCell<Vec<C64>>,
}

impl OdeSystem for Hierarchy<'_> {
    fn len(&self) -> usize {
        3 * self.l.dim() * self.l.dim()
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        let n = self.l.dim() * self.l.dim();
        let d = self.l.dim();
        let (r00, rest) = y.split_at(n);
        let (r10, r11) = rest.split_at(n);
        let (d00, rest) = dy.split_at_mut(n);
        let (d10, d11) = rest.split_at_mut(n);
        self.l.apply(r00, d00);
        self.l.apply(r10, d10);
        self.l.apply(r11, d11);
        let xi = self.pulse.envelope(t);
        if xi == 0.0 {
            return;
        }
        let k = C64::new(xi, 0.0);
        // ξ [ρ00, C†]
        self.port_dag.right_mul_acc(r00, k, d10);
        self.port_dag.left_mul_acc(r00, -k, d10);
        // X = ξ [C, ρ10]; dρ11 += X + X†
        let mut x = self.scratch.borrow_mut();
        x.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.port.left_mul_acc(r10, k, &mut x);
        self.port.right_mul_acc(r10, -k, &mut x);
        for j in 0..d {
            for i in 0..d {
                d11[i + j * d] += x[i + j * d] + x[j + i * d].conj();
            }
        }
    }
}

/// Plain master equation for a single density matrix.
struct Master<'a>(&'a Liouvillian);

impl OdeSystem for Master<'_> {
    fn len(&self) -> usize {
        self.0.dim() * self.0.dim()
    }
    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        self.0.apply(y, dy);
    }
}

fn probe_drive(dp: &DispersiveParams, probe: &ProbeSpec) -> CoherentDrive {
    CoherentDrive {
        target: Subsystem::B,
        frequency: probe.omega_p,
        amplitude: C64::new(probe.flux(dp).sqrt(), 0.0),
    }
}

/// Generator for a run with an optional probe; `n_a` and `n_b` are the
/// truncations actually simulated.
fn generator(
    dp: &DispersiveParams,
    drive: &DriveSpec,
    probe: Option<&ProbeSpec>,
    signal_carrier: Option<f64>,
    n_a: usize,
    n_b: usize,
) -> Result<Liouvillian> {
    let space = Space::new(n_a, n_b);
    let drives: Vec<CoherentDrive> = probe.filter(|p| !p.is_off()).map(|p| probe_drive(dp, p)).into_iter().collect();
    let frame = FrameSpec::rotating(
        signal_carrier.filter(|_| n_a > 0),
        (n_b > 0).then(|| probe.map(|p| p.omega_p)).flatten(),
    );
    liouvillian_in_frame(&space, dp, drive, &frame, &drives)
}

fn effective_nb(dp: &DispersiveParams, probe: Option<&ProbeSpec>) -> usize {
    match probe {
        Some(p) if !p.is_off() => dp.n_b_max,
        _ => 0,
    }
}

/// Dressed |label⟩ qubit state ⊗ resonator vacua as a flat density matrix.
fn dressed_vacuum(space: &Space, amps: (C64, C64)) -> Vec<C64> {
    let d = space.dim();
    let g = space.index(BasisState::new(Qubit::G, 0, 0));
    let e = space.index(BasisState::new(Qubit::E, 0, 0));
    let mut rho = vec![C64::new(0.0, 0.0); d * d];
    let (ag, ae) = amps;
    rho[g + g * d] = ag * ag.conj();
    rho[e + g * d] = ae * ag.conj();
    rho[g + e * d] = ag * ae.conj();
    rho[e + e * d] = ae * ae.conj();
    rho
}

struct Recorder<'a> {
    obs: &'a Observables,
    traj: Trajectory,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, rho: &[C64], vacuum: Option<&[C64]>, d: usize) {
        self.traj.t.push(t);
        self.traj.p_e.push(self.obs.p2.expect(rho).re);
        self.traj.n_a.push(self.obs.n_a.expect(rho).re);
        self.traj.n_b.push(self.obs.n_b.expect(rho).re);
        let mut tr_err = (trace(rho, d) - 1.0).norm();
        if let Some(v) = vacuum {
            tr_err = tr_err.max((trace(v, d) - 1.0).norm());
        }
        self.traj.max_trace_error = self.traj.max_trace_error.max(tr_err);
        self.traj.max_hermiticity_error = self.traj.max_hermiticity_error.max(hermiticity_defect(rho, d));
    }
}

fn check_grid(dp: &DispersiveParams, pulse: &PulseSpec, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be > 0"));
    }
    let kb = dp.kappa_b_ang();
    if dt > 0.5 / kb * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("dt = {dt} ns does not resolve κ_b (need <= {:.3} ns)", 0.5 / kb)));
    }
    if pulse.amplitude != 0.0 && dt > pulse.length / 200.0 * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "dt = {dt} ns does not resolve the pulse (need <= l/200 = {:.3} ns)",
            pulse.length / 200.0
        )));
    }
    Ok(())
}

/// Integrates the single-photon hierarchy from the pulse window start to
/// `t_end` (ns), starting in |1̃⟩ with both resonators empty.
pub fn evolve_single_photon(
    dp: &DispersiveParams,
    drive: &DriveSpec,
    probe: Option<&ProbeSpec>,
    pulse: &PulseSpec,
    t_end: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let n_b = effective_nb(dp, probe);
    let traj = evolve_raw(dp, drive, probe, pulse, t_end, opts.dt, opts.stride, n_b)?;

    if opts.verify_step {
        let fine = evolve_raw(dp, drive, probe, pulse, t_end, opts.dt / 2.0, opts.stride * 2, n_b)?;
        let dev = traj
            .p_e
            .iter()
            .zip(&fine.p_e)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if dev > STEP_HALVING_TOL {
            return Err(Error::Convergence {
                check: "step halving",
                deviation: dev,
                tolerance: STEP_HALVING_TOL,
                advice: "reduce dt",
            });
        }
    }
    if opts.verify_truncation && n_b > 0 {
        let bigger = evolve_raw(dp, drive, probe, pulse, t_end, opts.dt, opts.stride, n_b + 1)?;
        let dev = (bigger.max_p_e() - traj.max_p_e()).abs();
        if dev > TRUNCATION_TOL {
            return Err(Error::Convergence {
                check: "Fock truncation",
                deviation: dev,
                tolerance: TRUNCATION_TOL,
                advice: "increase n_b_max",
            });
        }
    }
    Ok(traj)
}

#[allow(clippy::too_many_arguments)]
fn evolve_raw(
    dp: &DispersiveParams,
    drive: &DriveSpec,
    probe: Option<&ProbeSpec>,
    pulse: &PulseSpec,
    t_end: f64,
    dt: f64,
    stride: usize,
    n_b: usize,
) -> Result<Trajectory> {
    pulse.validate()?;
    drive.validate(dp)?;
    if let Some(p) = probe {
        p.validate()?;
    }
    check_grid(dp, pulse, dt)?;
    if !(t_end > pulse.t0) {
        return Err(Error::invalid("t_end must lie after the pulse window start"));
    }
    let stride = stride.max(1);

    let (spectrum, _) = dressed_at(dp, drive)?;
    let n_a = dp.n_a_max.min(1);
    let l = generator(dp, drive, probe, Some(pulse.omega_s), n_a, n_b)?;
    let space = l.space;
    let d = space.dim();
    let n = d * d;
    let obs = Observables::new(&space, spectrum.qubit_amplitudes(2));
    let rho0 = dressed_vacuum(&space, spectrum.qubit_amplitudes(1));

    let steps = ((t_end - pulse.t0) / dt).round() as usize;
    let pulse_steps = (((pulse.t1 - pulse.t0) / dt).ceil() as usize).min(steps);
    let mut rec = Recorder {
        obs: &obs,
        traj: Trajectory {
            t: Vec::with_capacity(steps / stride + 1),
            p_e: Vec::with_capacity(steps / stride + 1),
            n_a: Vec::with_capacity(steps / stride + 1),
            n_b: Vec::with_capacity(steps / stride + 1),
            dt,
            method: "rk4-fixed",
            n_a_max: n_a,
            n_b_max: n_b,
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
        },
    };

    let a = space.a();
    let port = a.scale(C64::new(dp.kappa_a_ang().sqrt(), 0.0));
    let hier = Hierarchy {
        l: &l,
        pulse,
        port_dag: port.dagger(),
        port,
        scratch: std::cell::RefCell::new(vec![C64::new(0.0, 0.0); n]),
    };

    // phase 1: full hierarchy while the pulse is on
    let mut y = vec![C64::new(0.0, 0.0); 3 * n];
    y[..n].copy_from_slice(&rho0);
    y[2 * n..].copy_from_slice(&rho0);
    let mut rk = Rk4::new(3 * n);
    rec.record(pulse.t0, &y[2 * n..], Some(&y[..n]), d);
    for k in 0..pulse_steps {
        let t = pulse.t0 + k as f64 * dt;
        rk.step(&hier, t, dt, &mut y);
        if (k + 1) % stride == 0 {
            rec.record(t + dt, &y[2 * n..], Some(&y[..n]), d);
        }
    }

    // phase 2: the source terms vanish, only ρ¹¹ matters
    let mut rho = y[2 * n..].to_vec();
    let master = Master(&l);
    let mut rk = Rk4::new(n);
    for k in pulse_steps..steps {
        let t = pulse.t0 + k as f64 * dt;
        rk.step(&master, t, dt, &mut rho);
        if (k + 1) % stride == 0 {
            rec.record(t + dt, &rho, None, d);
        }
    }
    Ok(rec.traj)
}

/// Evolves a single density matrix under the no-signal generator and
/// samples p_e every `sample_every` ns.
fn evolve_plain(
    l: &Liouvillian,
    rho0: Vec<C64>,
    obs: &Observables,
    t_end: f64,
    dt: f64,
    sample_every: f64,
) -> (Vec<f64>, Vec<f64>) {
    let steps = (t_end / dt).round() as usize;
    let stride = ((sample_every / dt).round() as usize).max(1);
    let mut rho = rho0;
    let mut rk = Rk4::new(rho.len());
    let master = Master(l);
    let (mut ts, mut ps) = (vec![0.0], vec![obs.p2.expect(&rho).re]);
    for k in 0..steps {
        rk.step(&master, k as f64 * dt, dt, &mut rho);
        if (k + 1) % stride == 0 {
            ts.push((k + 1) as f64 * dt);
            ps.push(obs.p2.expect(&rho).re);
        }
    }
    (ts, ps)
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

/// Excited-state decay fit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Lifetime {
    /// Decay rate Γ (1/μs).
    pub gamma_per_us: f64,
    /// 1/Γ (μs).
    pub lifetime_us: f64,
    /// Stationary |2̃⟩ population the decay relaxes towards.
    pub floor: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub window_us: (f64, f64),
}

/// Window of the exponential fit (ns).
pub const LIFETIME_WINDOW: (f64, f64) = (500.0, 5000.0);
/// Largest acceptable RMS residual of ln(p_e − floor).
pub const LIFETIME_MAX_RESIDUAL: f64 = 0.05;

/// Decay of |2̃⟩ with the probe on and no signal: exponential fit of
/// p_e − p_ss over [`LIFETIME_WINDOW`].
pub fn excited_lifetime(dp: &DispersiveParams, drive: &DriveSpec, probe: Option<&ProbeSpec>, dt: f64) -> Result<Lifetime> {
    drive.validate(dp)?;
    let (spectrum, _) = dressed_at(dp, drive)?;
    let n_b = effective_nb(dp, probe);
    let l = generator(dp, drive, probe, None, 0, n_b)?;
    let obs = Observables::new(&l.space, spectrum.qubit_amplitudes(2));
    let floor = obs.p2.expect(steady_state(&l)?.as_slice()).re;
    let rho0 = dressed_vacuum(&l.space, spectrum.qubit_amplitudes(2));
    let (ts, ps) = evolve_plain(&l, rho0, &obs, LIFETIME_WINDOW.1, dt, 10.0);

    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (t, p) in ts.iter().zip(&ps) {
        if *t >= LIFETIME_WINDOW.0 - 1e-9 && *t <= LIFETIME_WINDOW.1 + 1e-9 {
            let excess = p - floor;
            if excess <= 0.0 {
                return Err(Error::Fit(format!(
                    "p_e reached its stationary value {floor:.3e} at t = {t} ns inside the fit window"
                )));
            }
            x.push(*t);
            y.push(excess.ln());
        }
    }
    let (slope, _, residual) = linear_fit(&x, &y);
    if residual > LIFETIME_MAX_RESIDUAL || slope >= 0.0 {
        return Err(Error::Fit(format!(
            "non-exponential decay over [{}, {}] ns: slope {slope:.3e}/ns, residual {residual:.3e}",
            LIFETIME_WINDOW.0, LIFETIME_WINDOW.1
        )));
    }
    let gamma = -slope * 1e3;
    Ok(Lifetime {
        gamma_per_us: gamma,
        lifetime_us: 1.0 / gamma,
        floor,
        residual,
        window_us: (LIFETIME_WINDOW.0 * 1e-3, LIFETIME_WINDOW.1 * 1e-3),
    })
}

/// Probe-induced transitions |1̃⟩ → |2̃⟩ in the absence of signal photons.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DarkCount {
    /// Probe-induced rate (1/μs): fitted growth minus the probe-off baseline.
    pub rate_per_us: f64,
    /// Growth with the probe off, from qubit decay in the drive-dressed basis (1/μs).
    pub baseline_per_us: f64,
    /// Probe photon flux |E_p|² (1/μs).
    pub flux_per_us: f64,
    /// Probe-induced transition probability per incident probe photon.
    pub per_photon: f64,
    /// Fit window actually used (ns).
    pub window_ns: (f64, f64),
}

/// Initial dark-count fit window (ns); the upper edge shrinks until the
/// slope is stable.
pub const DARK_WINDOW: (f64, f64) = (100.0, 800.0);
/// Largest relative slope change between a window and its first half.
pub const DARK_SLOPE_STABILITY: f64 = 0.1;
const DARK_MIN_SPAN: f64 = 100.0;

fn early_slope(ts: &[f64], ps: &[f64]) -> Result<(f64, (f64, f64))> {
    let (lo, mut hi) = DARK_WINDOW;
    loop {
        let fit = |a: f64, b: f64| {
            let (x, y): (Vec<f64>, Vec<f64>) =
                ts.iter().zip(ps).filter(|(t, _)| **t >= a - 1e-9 && **t <= b + 1e-9).map(|(t, p)| (*t, *p)).unzip();
            linear_fit(&x, &y).0
        };
        let full = fit(lo, hi);
        let half = fit(lo, 0.5 * (lo + hi));
        if (full - half).abs() <= DARK_SLOPE_STABILITY * full.abs().max(half.abs()) || full.abs() < 1e-15 {
            return Ok((full, (lo, hi)));
        }
        hi = 0.5 * (lo + hi);
        if hi - lo < DARK_MIN_SPAN {
            return Err(Error::Fit(format!("dark-count slope unstable down to window [{lo}, {hi}] ns")));
        }
    }
}

/// Early-time growth of p_e from |1̃⟩ under the probe alone.
pub fn dark_count_rate(dp: &DispersiveParams, drive: &DriveSpec, probe: &ProbeSpec, dt: f64) -> Result<DarkCount> {
    drive.validate(dp)?;
    probe.validate()?;
    let (spectrum, _) = dressed_at(dp, drive)?;
    let run = |p: Option<&ProbeSpec>| -> Result<(f64, (f64, f64))> {
        let l = generator(dp, drive, p, None, 0, effective_nb(dp, p))?;
        let obs = Observables::new(&l.space, spectrum.qubit_amplitudes(2));
        let rho0 = dressed_vacuum(&l.space, spectrum.qubit_amplitudes(1));
        let (ts, ps) = evolve_plain(&l, rho0, &obs, DARK_WINDOW.1, dt, 2.0);
        early_slope(&ts, &ps)
    };
    let (baseline, base_window) = run(None)?;
    let flux = probe.flux(dp);
    let (total, window) = if probe.is_off() { (baseline, base_window) } else { run(Some(probe))? };
    let rate = total - baseline;
    Ok(DarkCount {
        rate_per_us: rate * 1e3,
        baseline_per_us: baseline * 1e3,
        flux_per_us: flux * 1e3,
        per_photon: if flux > 0.0 { rate / flux } else { 0.0 },
        window_ns: window,
    })
}
