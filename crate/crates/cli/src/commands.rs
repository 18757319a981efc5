use std::path::PathBuf;
use std::time::Instant;

use lambda_scope::efficiency::{
    band_width, detection_efficiency, exponential_model, local_peaks, record_end,
};
use lambda_scope::operating::{DRIVE_GHZ, PROBE_PHOTONS, PULSE_NS, SIGNAL_GHZ, WINDOW_NS};
use lambda_scope::reflection::default_alpha;
use lambda_scope::regression::{run_regression, RegressionOptions, RegressionReport, APPENDIX_LIFETIMES, LENGTH_SCAN, MATCH_TARGETS};
use lambda_scope::sweep::par_map;
use lambda_scope::{
    decay_table, derive_dispersive, diagonalize_dressed, build_hamiltonian, evolve_single_photon, find_impedance_match,
    moving_average, probe_phases, q_of_tau, reflection_coefficient, reflection_map, snr_fidelity, DispersiveParams,
    DriveSpec, EvolveOptions, FrameSpec, Ghz, ProbeSpec, PulseSpec, Result,
};

use crate::config::{linspace, RunConfig};
use crate::output::{FigureReport, Headline, Table};

/// Shared state of one invocation.
pub struct Context {
    pub cfg: RunConfig,
    pub dp: DispersiveParams,
    pub out: PathBuf,
    started: Instant,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let dp = derive_dispersive(&cfg.bare()?)?;
        if let Some(dt) = cfg.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(lambda_scope::Error::Config(format!("dt must be > 0, got {dt}")));
            }
        }
        let out = cfg.out_dir();
        std::fs::create_dir_all(&out)
            .map_err(|e| lambda_scope::Error::Config(format!("cannot create {}: {e}", out.display())))?;
        Ok(Context {
            cfg,
            dp,
            out,
            started: Instant::now(),
        })
    }

    fn report(&self, command: &'static str, csv: Vec<PathBuf>, headlines: Vec<Headline>, notes: Vec<String>) -> FigureReport {
        FigureReport {
            command,
            csv,
            headlines,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            dt_ns: self.cfg.dt(),
            n_a_max: self.dp.n_a_max,
            n_b_max: self.dp.n_b_max,
            workers: self.cfg.workers(),
            notes,
        }
    }

    fn drives(&self) -> Vec<f64> {
        self.cfg.omega_d.clone().unwrap_or_else(|| vec![DRIVE_GHZ])
    }

    fn first_drive(&self) -> f64 {
        self.drives()[0]
    }

    fn matched(&self, omega_d: f64) -> Result<DriveSpec> {
        let rabi = find_impedance_match(&self.dp, Ghz(omega_d))?;
        Ok(DriveSpec::new(Ghz(omega_d), rabi))
    }

    fn probe(&self) -> ProbeSpec {
        let nb = self.cfg.n_b.as_ref().map(|v| v[0]).unwrap_or(PROBE_PHOTONS);
        ProbeSpec::at_excited_resonance(&self.dp, nb)
    }

    fn evolve(&self) -> EvolveOptions {
        EvolveOptions::with_dt(self.cfg.dt())
    }

    fn window(&self) -> f64 {
        self.cfg.windows.as_ref().map(|v| v[0]).unwrap_or(WINDOW_NS)
    }
}

/// Reference Ω_d^imp (MHz) and tolerance for a drive carrier, when tabulated.
fn match_target(omega_d: f64) -> Option<(f64, f64)> {
    MATCH_TARGETS
        .iter()
        .find(|(w, _, _)| (w - omega_d).abs() < 1e-9)
        .map(|&(_, r, tol)| (r, tol))
}

pub fn dressed_rates(ctx: &Context) -> Result<FigureReport> {
    let drives = ctx.drives();
    let rabis = ctx.cfg.rabi.clone().unwrap_or_else(|| linspace(0.0, 30.0, 61));
    let grid: Vec<(f64, f64)> = drives.iter().flat_map(|&w| rabis.iter().map(move |&r| (w, r))).collect();
    let tables = par_map(&grid, ctx.cfg.workers(), |_, &(w, r)| {
        let drive = DriveSpec { omega_d: w, rabi: r };
        drive.validate(&ctx.dp)?;
        let spec = diagonalize_dressed(&build_hamiltonian(&ctx.dp, &drive, &FrameSpec::qubit_only())?)?;
        Ok(decay_table(&spec, &ctx.dp).normalized())
    })?;
    let matches = par_map(&drives, ctx.cfg.workers(), |_, &w| Ok(find_impedance_match(&ctx.dp, Ghz(w))?.0))?;

    let notes: Vec<String> = drives
        .iter()
        .zip(&matches)
        .map(|(w, r)| format!("Omega_d_imp_MHz at omega_drive_GHz={w}: {r}"))
        .collect();
    let mut table = Table::create(
        &ctx.out,
        "fig2c_dressed_rates.csv",
        &[
            ("omega_drive_GHz", "GHz"),
            ("Omega_d_MHz", "MHz"),
            ("ka31", "kappa_a"),
            ("ka32", "kappa_a"),
            ("ka41", "kappa_a"),
            ("ka42", "kappa_a"),
            ("kb51", "kappa_b"),
            ("kb52", "kappa_b"),
            ("kb61", "kappa_b"),
            ("kb62", "kappa_b"),
        ],
        &notes,
    )?;
    for ((w, r), k) in grid.iter().zip(&tables) {
        let mut row = vec![*w, *r];
        row.extend_from_slice(k);
        table.row(&row)?;
    }
    let csv = vec![table.finish()?];

    let mut headlines = Vec::new();
    for (w, r) in drives.iter().zip(&matches) {
        let name = format!("Omega_d_imp at {w} GHz [MHz]");
        headlines.push(match match_target(*w) {
            Some((target, tol)) => Headline::band(name, *r, target, tol),
            None => Headline::info(name, Some(*r)),
        });
    }
    let kb51_min = tables.iter().map(|k| k[4]).fold(f64::INFINITY, f64::min);
    headlines.push(Headline::at_least("min kb51/kappa_b over the sweep", kb51_min, 0.95));
    Ok(ctx.report("dressed-rates", csv, headlines, notes))
}

pub fn reflection(ctx: &Context) -> Result<FigureReport> {
    let rabis = ctx.cfg.rabi.clone().unwrap_or_else(|| linspace(0.0, 30.0, 31));
    let omega_s = ctx.cfg.omega_s.clone().unwrap_or_else(|| linspace(9.95, 10.15, 101));
    let mut csv = Vec::new();
    let mut headlines = Vec::new();
    for w in ctx.drives() {
        let map = reflection_map(&ctx.dp, w, &rabis, &omega_s, ctx.cfg.workers())?;
        let mut table = Table::create(
            &ctx.out,
            &format!("fig2d_reflection_wd{w}.csv"),
            &[
                ("Omega_d_MHz", "MHz"),
                ("omega_s_GHz", "GHz"),
                ("abs_r", "1"),
                ("arg_r", "rad"),
                ("w31_GHz", "GHz"),
                ("w41_GHz", "GHz"),
            ],
            &[format!("omega_drive_GHz: {w}")],
        )?;
        for p in &map {
            table.row(&[p.rabi, p.omega_s, p.abs_r, p.arg_r, p.w31, p.w41])?;
        }
        csv.push(table.finish()?);

        let drive = ctx.matched(w)?;
        let r = reflection_coefficient(&ctx.dp, &drive, SIGNAL_GHZ, default_alpha(&ctx.dp))?;
        headlines.push(Headline::info(format!("Omega_d_imp at {w} GHz [MHz]"), Some(drive.rabi)));
        headlines.push(Headline::at_most(
            format!("|r_s| at Omega_d_imp, {SIGNAL_GHZ} GHz, drive {w} GHz"),
            r.norm(),
            0.1,
        ));
        let min = map.iter().map(|p| p.abs_r).fold(f64::INFINITY, f64::min);
        headlines.push(Headline::info(format!("min |r_s| on the grid, drive {w} GHz"), Some(min)));
    }
    Ok(ctx.report("reflection-map", csv, headlines, Vec::new()))
}

pub fn pulse_response(ctx: &Context) -> Result<FigureReport> {
    let omega_d = ctx.first_drive();
    let drive = ctx.matched(omega_d)?;
    let levels = ctx.cfg.n_b.clone().unwrap_or_else(|| vec![0.0, 0.025, 0.05, 0.1]);
    let windows = ctx.cfg.windows.clone().unwrap_or_else(|| vec![200.0, 575.0, 1000.0]);
    let length = ctx.cfg.lengths.as_ref().map(|v| v[0]).unwrap_or(PULSE_NS);
    let carrier = ctx.cfg.omega_s.as_ref().map(|v| v[0]).unwrap_or(SIGNAL_GHZ);
    let pulse = PulseSpec::gaussian(carrier, length);
    let t_end = ctx.cfg.t_end.unwrap_or_else(|| record_end(&pulse, &windows));
    let opts = ctx.evolve().verified();

    // last run is the silent control: probe off, no signal
    let runs: Vec<(f64, bool)> = levels.iter().map(|&nb| (nb, true)).chain([(0.0, false)]).collect();
    let trajectories = par_map(&runs, ctx.cfg.workers(), |_, &(nb, signal)| {
        let probe = ProbeSpec::at_excited_resonance(&ctx.dp, nb);
        let p = if signal { pulse } else { PulseSpec::silent(carrier, length) };
        evolve_single_photon(&ctx.dp, &drive, (!probe.is_off()).then_some(&probe), &p, t_end, &opts)
    })?;

    let mut columns: Vec<(String, &str)> = vec![
        ("t_ns".into(), "ns"),
        ("p_e".into(), "1"),
        ("n_a".into(), "photons"),
        ("n_b".into(), "photons"),
    ];
    for w in &windows {
        columns.push((pbar_column(*w, windows.len()), "1"));
    }
    let columns: Vec<(&str, &str)> = columns.iter().map(|(c, u)| (c.as_str(), *u)).collect();

    let mut csv = Vec::new();
    let mut headlines = Vec::new();
    for ((nb, signal), traj) in runs.iter().zip(&trajectories) {
        let name = if *signal { format!("fig3_pulse_nb{nb}.csv") } else { "fig3_silent.csv".into() };
        let note = format!(
            "omega_drive_GHz: {omega_d}, Omega_d_MHz: {}, n_b: {nb}, l_ns: {length}, omega_s_GHz: {carrier}, signal: {signal}",
            drive.rabi
        );
        let mut table = Table::create(&ctx.out, &name, &columns, &[note])?;
        let averages = windows
            .iter()
            .map(|&w| moving_average(&traj.t, &traj.p_e, w))
            .collect::<Result<Vec<_>>>()?;
        for k in 0..traj.t.len() {
            let mut row = vec![Some(traj.t[k]), Some(traj.p_e[k]), Some(traj.n_a[k]), Some(traj.n_b[k])];
            for avg in &averages {
                let offset = traj.t.len() - avg.mean.len();
                row.push(k.checked_sub(offset).map(|j| avg.mean[j]));
            }
            table.sparse_row(&row)?;
        }
        csv.push(table.finish()?);

        if !*signal {
            // qubit decay in the drive-dressed basis feeds |2̃⟩ at ~1e-5 per μs
            headlines.push(Headline::at_most("max p_e without signal", traj.max_p_e(), 1e-4));
        } else if *nb == 0.0 {
            headlines.push(Headline::at_least("max p_e, probe off", traj.max_p_e(), 0.95));
        } else {
            headlines.push(Headline::info(format!("max p_e, n_b = {nb}"), Some(traj.max_p_e())));
            for avg in &averages {
                headlines.push(Headline::info(format!("max pbar_e, n_b = {nb}, dt = {} ns", avg.window), Some(avg.max)));
            }
            let mut by_window: Vec<(f64, f64)> = averages.iter().map(|a| (a.window, a.max)).collect();
            by_window.sort_by(|a, b| a.0.total_cmp(&b.0));
            headlines.push(Headline::holds(
                format!("max pbar_e falls as dt grows, n_b = {nb}"),
                by_window.windows(2).all(|w| w[1].1 <= w[0].1),
            ));
        }
        headlines.push(Headline::at_most(format!("trace error, {name}"), traj.max_trace_error, 1e-8));
    }
    let notes = vec!["every trajectory passed step-halving and Fock-truncation refinement".to_string()];
    Ok(ctx.report("pulse-response", csv, headlines, notes))
}

fn pbar_column(window: f64, count: usize) -> String {
    if count == 1 {
        "pbar_e".into()
    } else {
        format!("pbar_e_{window}ns")
    }
}

/// Which panels of the efficiency figure to compute.
#[derive(Clone, Copy, Debug)]
pub struct Panels {
    pub lengths: bool,
    pub map: bool,
    pub bands: bool,
}

pub fn efficiency(ctx: &Context, panels: Panels) -> Result<FigureReport> {
    let mut csv = Vec::new();
    let mut headlines = Vec::new();
    let mut notes = Vec::new();
    let probe = ctx.probe();
    let opts = ctx.evolve();
    let window = ctx.window();

    if panels.lengths {
        let drive = ctx.matched(ctx.first_drive())?;
        let lengths = ctx.cfg.lengths.clone().unwrap_or_else(|| LENGTH_SCAN.to_vec());
        let windows = ctx.cfg.windows.clone().unwrap_or_else(|| vec![WINDOW_NS]);
        // the carrier grid belongs to the map and band panels
        let carrier = SIGNAL_GHZ;
        let rows = par_map(&lengths, ctx.cfg.workers(), |_, &l| {
            detection_efficiency(&ctx.dp, &drive, &probe, &PulseSpec::gaussian(carrier, l), &windows, &opts)
        })?;
        let mut table = Table::create(
            &ctx.out,
            "fig4a_efficiency_vs_length.csv",
            &[("l_ns", "ns"), ("Delta_t_ns", "ns"), ("F", "1"), ("eta1", "1")],
            &[format!("omega_drive_GHz: {}, omega_s_GHz: {carrier}, n_b: {}", drive.omega_d, probe.n_b_mean)],
        )?;
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for (l, results) in lengths.iter().zip(&rows) {
            for r in results {
                table.row(&[*l, r.window, r.fidelity, r.eta1])?;
                if (r.window - window).abs() < 1e-9 && r.eta1 > best.1 {
                    best = (*l, r.eta1);
                }
            }
        }
        csv.push(table.finish()?);
        headlines.push(Headline::band(format!("max eta1 over l, dt = {window} ns"), best.1, 0.91, 0.03));
        headlines.push(Headline::band("l at max eta1 [ns]", best.0, 90.0, 20.0));
    }

    if panels.map {
        let omega_d = ctx.first_drive();
        let rabis = ctx.cfg.rabi.clone().unwrap_or_else(|| linspace(0.0, 30.0, 31));
        let carriers = ctx.cfg.omega_s.clone().unwrap_or_else(|| linspace(10.0, 10.1, 41));
        let length = ctx.cfg.lengths.as_ref().map(|v| v[0]).unwrap_or(PULSE_NS);
        let grid: Vec<(f64, f64)> = rabis.iter().flat_map(|&r| carriers.iter().map(move |&w| (r, w))).collect();
        let etas = par_map(&grid, ctx.cfg.workers(), |_, &(rabi, w)| {
            let drive = DriveSpec { omega_d, rabi };
            Ok(detection_efficiency(&ctx.dp, &drive, &probe, &PulseSpec::gaussian(w, length), &[window], &opts)?[0].eta1)
        })?;
        let mut table = Table::create(
            &ctx.out,
            "fig4b_efficiency_map.csv",
            &[("Omega_d_MHz", "MHz"), ("omega_s_GHz", "GHz"), ("eta1", "1")],
            &[format!("omega_drive_GHz: {omega_d}, l_ns: {length}, Delta_t_ns: {window}, n_b: {}", probe.n_b_mean)],
        )?;
        for ((r, w), e) in grid.iter().zip(&etas) {
            table.row(&[*r, *w, *e])?;
        }
        csv.push(table.finish()?);
        let max = etas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        headlines.push(Headline::info("max eta1 on the map", Some(max)));
    }

    if panels.bands {
        let drives = ctx.cfg.omega_d.clone().unwrap_or_else(|| MATCH_TARGETS.iter().map(|t| t.0).collect());
        let carriers = ctx.cfg.omega_s.clone().unwrap_or_else(|| linspace(9.99, 10.11, 121));
        let length = ctx.cfg.lengths.as_ref().map(|v| v[0]).unwrap_or(PULSE_NS);
        let matched = drives.iter().map(|&w| ctx.matched(w)).collect::<Result<Vec<_>>>()?;
        let grid: Vec<(usize, f64)> = (0..drives.len()).flat_map(|i| carriers.iter().map(move |&w| (i, w))).collect();
        let etas = par_map(&grid, ctx.cfg.workers(), |_, &(i, w)| {
            Ok(detection_efficiency(&ctx.dp, &matched[i], &probe, &PulseSpec::gaussian(w, length), &[window], &opts)?[0].eta1)
        })?;
        let mut table = Table::create(
            &ctx.out,
            "fig4c_efficiency_bands.csv",
            &[("omega_drive_GHz", "GHz"), ("Omega_d_MHz", "MHz"), ("omega_s_GHz", "GHz"), ("eta1", "1")],
            &[format!("l_ns: {length}, Delta_t_ns: {window}, n_b: {}", probe.n_b_mean)],
        )?;
        for ((i, w), e) in grid.iter().zip(&etas) {
            table.row(&[matched[*i].omega_d, matched[*i].rabi, *w, *e])?;
        }
        csv.push(table.finish()?);

        let mut summary = Table::create(
            &ctx.out,
            "fig4c_band_summary.csv",
            &[
                ("omega_drive_GHz", "GHz"),
                ("peak_omega_s_GHz", "GHz"),
                ("peak_eta1", "1"),
                ("width_90_MHz", "MHz"),
                ("width_80_MHz", "MHz"),
                ("n_peaks", "1"),
            ],
            &["widths are blank where eta1 never crosses the threshold inside the grid".to_string()],
        )?;
        for (i, d) in matched.iter().enumerate() {
            let ys: Vec<f64> = etas[i * carriers.len()..(i + 1) * carriers.len()].to_vec();
            let k = ys.iter().enumerate().fold(0, |b, (j, &y)| if y > ys[b] { j } else { b });
            let w90 = band_width(&carriers, &ys, 0.9).ok().map(|w| w * 1e3);
            let w80 = band_width(&carriers, &ys, 0.8).ok().map(|w| w * 1e3);
            let peaks = local_peaks(&carriers, &ys);
            summary.sparse_row(&[
                Some(d.omega_d),
                Some(carriers[k]),
                Some(ys[k]),
                w90,
                w80,
                Some(peaks.len() as f64),
            ])?;
            if (d.omega_d - DRIVE_GHZ).abs() < 1e-9 {
                headlines.push(match w90 {
                    Some(w) => Headline::band("band width eta1 > 0.9 at 4.832 GHz [MHz]", w, 9.0, 2.0),
                    None => Headline::info("band width eta1 > 0.9 at 4.832 GHz [MHz]", None),
                });
                headlines.push(match w80 {
                    Some(w) => Headline::band("band width eta1 > 0.8 at 4.832 GHz [MHz]", w, 20.0, 3.0),
                    None => Headline::info("band width eta1 > 0.8 at 4.832 GHz [MHz]", None),
                });
            }
            headlines.push(Headline::info(format!("band peak carrier at {} GHz [GHz]", d.omega_d), Some(carriers[k])));
            if peaks.len() > 1 {
                notes.push(format!("drive {} GHz: {} separate efficiency peaks", d.omega_d, peaks.len()));
            }
        }
        csv.push(summary.finish()?);
    }
    Ok(ctx.report("efficiency", csv, headlines, notes))
}

pub fn appendix(ctx: &Context) -> Result<FigureReport> {
    let lifetimes = ctx.cfg.lifetimes.clone().unwrap_or_else(|| APPENDIX_LIFETIMES.to_vec());
    let windows = ctx.cfg.windows.clone().unwrap_or_else(|| (1..=2000).map(|k| 10.0 * k as f64).collect());
    let probe = ctx.probe();
    let phases = probe_phases(&ctx.dp, Ghz(probe.omega_p));

    let mut table = Table::create(
        &ctx.out,
        "figS_eta_comparison.csv",
        &[("Delta_t_ns", "ns"), ("Gamma_inv_us", "us"), ("eta1", "1"), ("eta2", "1")],
        &[format!("n_b: {}", probe.n_b_mean)],
    )?;
    let mut headlines = Vec::new();
    for &life in &lifetimes {
        let mut worst: f64 = 0.0;
        for &w in &windows {
            let m = exponential_model(&snr_fidelity(&ctx.dp, &probe, &phases, w), life)?;
            table.row(&[w, life, m.eta1, m.eta2])?;
            if w <= 1000.0 {
                worst = worst.max((m.eta1 - m.eta2).abs());
            }
        }
        let name = format!("max |eta1 - eta2| for dt <= 1 us, lifetime {life} us");
        headlines.push(if (life - 6.0).abs() < 1e-12 {
            Headline::at_most(name, worst, 1e-4)
        } else {
            Headline::info(name, Some(worst))
        });
    }
    let mut csv = vec![table.finish()?];

    let readout = snr_fidelity(&ctx.dp, &probe, &phases, ctx.window());
    let mut q = Table::create(
        &ctx.out,
        "figS_q_of_tau.csv",
        &[("tau_ns", "ns"), ("q", "1")],
        &[format!("Delta_t_ns: {}, SNR: {}", readout.window, readout.snr)],
    )?;
    for tau in linspace(0.0, 2.0 * readout.window, 401) {
        q.row(&[tau, q_of_tau(readout.snr, readout.window, tau)])?;
    }
    csv.push(q.finish()?);
    Ok(ctx.report("appendix", csv, headlines, Vec::new()))
}

pub fn regression(ctx: &Context) -> Result<RegressionReport> {
    let opts = RegressionOptions {
        dt: ctx.cfg.dt(),
        workers: ctx.cfg.workers(),
    };
    let report = run_regression(&ctx.cfg.bare()?, &opts)?;
    std::fs::write(ctx.out.join("regression.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}
