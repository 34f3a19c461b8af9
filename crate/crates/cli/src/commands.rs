use std::f64::consts::PI;
use std::path::Path;

use rimflow_core::evolve::{integrate, EvolveConfig, Frame, Params, StopReason};
use rimflow_core::slowode::{
    integrate_ode, manifold_to_field, phase_portrait, ManifoldPoint, OdeConfig, OdeTrajectory,
};
use rimflow_core::spectral::{synthesize, Lattice};
use rimflow_core::spectrum::{assemble_ldelta, eigensolve};
use rimflow_core::steady::{continuation, expansion_hdelta, newton_steady, reduced_f_sample, zeta_dependence};
use rimflow_core::{Complex64, SpectralField};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    Common, OdeArgs, PortraitArgs, Preset, ReducedFArgs, SimulateArgs, SlowOdeArgs, SpectrumArgs, SteadyArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, fmt_f64, line_chart, out_dir, write_json, write_snapshot, write_text, Csv, Series};
use crate::presets::{initial_field, portrait_preset, InitContext};

/// Common flags with defaults filled in.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Setup {
    pub gamma: f64,
    pub delta: f64,
    pub ell: f64,
    pub m: f64,
    pub k: usize,
    pub l: usize,
    #[serde(skip)]
    pub explicit_truncation: bool,
}

impl Setup {
    pub fn from_common(c: &Common, default_k: usize, default_l: usize) -> Self {
        Self {
            gamma: c.gamma.unwrap_or(1.0),
            delta: c.delta.unwrap_or(0.0),
            ell: c.ell.unwrap_or(PI),
            m: c.m.unwrap_or(1.0),
            k: c.k.unwrap_or(default_k),
            l: c.l.unwrap_or(default_l),
            explicit_truncation: c.k.is_some() || c.l.is_some(),
        }
    }

    pub fn lattice(&self) -> CliResult<Lattice> {
        Ok(Lattice::new(self.k, self.l, self.ell)?)
    }

    pub fn params(&self) -> CliResult<Params> {
        Ok(Params::new(self.gamma, self.delta, self.ell, self.m)?)
    }
}

fn maybe_json<T: Serialize>(common: &Common, value: &T) -> CliResult<()> {
    match &common.json {
        Some(target) => write_json(target, value),
        None => Ok(()),
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let setup = Setup::from_common(&args.common, 12, 8);
    let ctx = InitContext {
        lattice: setup.lattice()?,
        m: setup.m,
        gamma: setup.gamma,
        delta: setup.delta,
        explicit_truncation: setup.explicit_truncation,
        explicit_ell: args.common.ell.is_some(),
    };
    let h0 = initial_field(&args.init, &ctx)?;
    let p = Params::new(setup.gamma, setup.delta, h0.lattice().ell(), h0.mean())?;
    let frame: Frame = args.frame.into();
    let cfg = EvolveConfig {
        dt: args.dt,
        t_end: args.t_end,
        frame,
        rupture_eps: args.rupture_eps,
        snapshot_every: args.snapshot_every,
        sample_interval: args.sample_interval,
        rtol: args.rtol,
        ..EvolveConfig::default()
    };
    let traj = integrate(&h0, &p, &cfg)?;
    let dir = out_dir(&args.common.out, "simulate");
    ensure_dir(&dir)?;
    let mut csv = Csv::new(&["t", "mass", "energy", "min_h", "dist_M", "re_a1", "im_a1", "b"]);
    for s in &traj.samples {
        csv.row(&[s.t, s.mass, s.energy, s.min_h, s.dist_m, s.a1.re, s.a1.im, s.b]);
    }
    csv.write(&dir.join("trajectory.csv"))?;
    for (i, t, field) in &traj.snapshots {
        write_snapshot(&dir.join(format!("snap_{i:05}_{t:.6}.rff")), field)?;
    }
    write_snapshot(&dir.join("final.rff"), &traj.final_field)?;
    let last = traj.samples.last().copied();
    println!(
        "{}: t = {} after {} accepted and {} rejected steps",
        traj.reason.label(),
        fmt_f64(traj.final_time),
        traj.accepted_steps,
        traj.rejected_steps
    );
    maybe_json(
        &args.common,
        &json!({
            "command": "simulate",
            "setup": setup,
            "frame": format!("{frame:?}").to_lowercase(),
            "reason": traj.reason.label(),
            "final_time": traj.final_time,
            "accepted_steps": traj.accepted_steps,
            "rejected_steps": traj.rejected_steps,
            "energy_increases": traj.energy_increases,
            "final_min_h": last.map(|s| s.min_h),
            "final_dist_M": last.map(|s| s.dist_m),
            "out": dir,
        }),
    )?;
    match traj.reason {
        StopReason::Completed => Ok(()),
        other => Err(CliError::Stopped(format!(
            "{} at t = {} (min h = {:.6e})",
            other.label(),
            fmt_f64(traj.final_time),
            last.map_or(f64::NAN, |s| s.min_h)
        ))),
    }
}

pub fn steady(args: &SteadyArgs) -> CliResult<()> {
    let setup = Setup::from_common(&args.common, 16, 4);
    let lattice = setup.lattice()?;
    let results = match &args.deltas {
        Some(deltas) => continuation(deltas, setup.m, setup.gamma, lattice, args.tol)?,
        None => {
            let p = setup.params()?;
            let init = expansion_hdelta(setup.m, setup.gamma, setup.delta, lattice)
                .unwrap_or_else(|_| SpectralField::constant(lattice, setup.m));
            vec![newton_steady(&p, &init, args.tol)?]
        }
    };
    let dir = out_dir(&args.common.out, "steady");
    ensure_dir(&dir)?;
    let mut csv = Csv::new(&["delta", "residual", "newton_iters", "min_h", "zeta_dependence"]);
    let mut summary = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let min_h = rimflow_core::spectral::grid_min(&r.field);
        csv.raw_row(&[
            fmt_f64(r.delta),
            fmt_f64(r.residual_norm),
            r.newton_iters.to_string(),
            fmt_f64(min_h),
            fmt_f64(zeta_dependence(&r.field)),
        ]);
        let file = format!("steady_{i:03}.rff");
        write_snapshot(&dir.join(&file), &r.field)?;
        println!(
            "delta = {}: residual {:.3e} after {} evaluations, min h {:.6}",
            r.delta, r.residual_norm, r.newton_iters, min_h
        );
        summary.push(json!({"delta": r.delta, "residual": r.residual_norm, "newton_iters": r.newton_iters, "min_h": min_h, "file": file}));
    }
    csv.write(&dir.join("steady.csv"))?;
    maybe_json(&args.common, &json!({"command": "steady", "setup": setup, "states": summary, "out": dir}))
}

pub fn reduced_f(args: &ReducedFArgs) -> CliResult<()> {
    let setup = Setup::from_common(&args.common, 16, 16);
    let deltas = args.deltas.clone().unwrap_or_else(|| vec![args.common.delta.unwrap_or(0.01)]);
    let mut csv = Csv::new(&["a", "delta", "f"]);
    let mut rows = Vec::new();
    for &delta in &deltas {
        for &a in &args.amplitudes {
            let f = if args.common.k.is_some() || args.common.l.is_some() {
                rimflow_core::steady::reduced_f_sample_on(a, delta, setup.m, setup.gamma, setup.lattice()?)?
            } else {
                reduced_f_sample(a, delta, setup.m, setup.gamma, setup.ell)?
            };
            csv.row(&[a, delta, f]);
            rows.push(json!({"a": a, "delta": delta, "f": f}));
        }
    }
    let dir = out_dir(&args.common.out, "reduced-f");
    ensure_dir(&dir)?;
    csv.write(&dir.join("reduced_f.csv"))?;
    print!("{}", csv.as_str());
    maybe_json(&args.common, &json!({"command": "reduced-f", "setup": setup, "samples": rows, "out": dir}))
}

pub fn spectrum(args: &SpectrumArgs) -> CliResult<()> {
    let setup = Setup::from_common(&args.common, 8, 8);
    let lattice = setup.lattice()?;
    let p = setup.params()?;
    let base = if setup.delta == 0.0 {
        SpectralField::constant(lattice, setup.m)
    } else {
        let init = expansion_hdelta(setup.m, setup.gamma, setup.delta, lattice)
            .unwrap_or_else(|_| SpectralField::constant(lattice, setup.m));
        newton_steady(&p, &init, 1e-12)?.field
    };
    let op = assemble_ldelta(&base, &p, args.frame.into())?;
    let report = eigensolve(&op)?;
    let mut csv = Csv::new(&["re", "im", "k_dominant", "l_dominant", "residual"]);
    for e in &report.eigenpairs {
        csv.raw_row(&[
            fmt_f64(e.lambda.re),
            fmt_f64(e.lambda.im),
            e.dominant.0.to_string(),
            e.dominant.1.to_string(),
            fmt_f64(e.residual),
        ]);
    }
    let dir = out_dir(&args.common.out, "spectrum");
    ensure_dir(&dir)?;
    csv.write(&dir.join("spectrum.csv"))?;
    write_snapshot(&dir.join("base_state.rff"), &base)?;
    println!("{} stable, {} critical, {} unstable", report.stable, report.critical, report.unstable);
    if let Some(top) = report.eigenpairs.first() {
        println!("leading eigenvalue {} {:+}i at mode {:?}", fmt_f64(top.lambda.re), top.lambda.im, top.dominant);
    }
    maybe_json(
        &args.common,
        &json!({
            "command": "spectrum",
            "setup": setup,
            "stable": report.stable,
            "critical": report.critical,
            "unstable": report.unstable,
            "max_residual": report.max_residual(),
            "leading": report.eigenpairs.first().map(|e| [e.lambda.re, e.lambda.im]),
            "out": dir,
        }),
    )
}

fn ode_config(base: OdeConfig, common: &Common, ode: &OdeArgs) -> CliResult<OdeConfig> {
    let cfg = OdeConfig {
        k_max: common.k.unwrap_or(base.k_max),
        l_max: common.l.unwrap_or(base.l_max),
        tau_end: ode.tau_end.unwrap_or(base.tau_end),
        dtau: ode.dtau.unwrap_or(base.dtau),
        tol: ode.tol.unwrap_or(base.tol),
        margin: ode.margin.unwrap_or(base.margin),
        ..base
    };
    cfg.validate()?;
    Ok(cfg)
}

fn check_ell_pi(common: &Common) -> CliResult<()> {
    match common.ell {
        Some(ell) if (ell - PI).abs() > 1e-9 => {
            Err(CliError::Usage(format!("the slow-manifold reduction is defined only for ell = pi, got {ell}")))
        }
        _ => Ok(()),
    }
}

fn trajectory_csv(traj: &OdeTrajectory) -> Csv {
    let mut csv = Csv::new(&["tau", "re_a1", "im_a1", "b"]);
    for &(tau, a1, b) in &traj.samples {
        csv.row(&[tau, a1.re, a1.im, b]);
    }
    csv
}

pub fn slow_ode(args: &SlowOdeArgs) -> CliResult<()> {
    check_ell_pi(&args.common)?;
    let setup = Setup::from_common(&args.common, 16, 16);
    let cfg = ode_config(OdeConfig::default(), &args.common, &args.ode)?;
    let x0 = ManifoldPoint::new(Complex64::new(args.a1, args.a1_im), args.b, setup.m)?;
    let traj = integrate_ode(&x0, setup.gamma, &cfg)?;
    let dir = out_dir(&args.common.out, "slow-ode");
    ensure_dir(&dir)?;
    trajectory_csv(&traj).write(&dir.join("trajectory.csv"))?;
    let &(tau, a1, b) = traj.samples.last().expect("trajectory has its initial sample");
    println!("{}: tau = {} |a1| = {} b = {}", traj.exit.label(), fmt_f64(tau), fmt_f64(a1.norm()), fmt_f64(b));
    maybe_json(
        &args.common,
        &json!({
            "command": "slow-ode",
            "gamma": setup.gamma,
            "m": setup.m,
            "config": {"K": cfg.k_max, "L": cfg.l_max, "tau_end": cfg.tau_end, "dtau": cfg.dtau, "tol": cfg.tol, "margin": cfg.margin},
            "exit": traj.exit.label(),
            "final": {"tau": tau, "re_a1": a1.re, "im_a1": a1.im, "b": b},
            "evaluations": traj.evaluations,
            "out": dir,
        }),
    )?;
    match traj.exit {
        rimflow_core::slowode::OdeExit::Completed => Ok(()),
        rimflow_core::slowode::OdeExit::ValidityExit => {
            Err(CliError::Stopped(format!("left the positivity region at tau = {}", fmt_f64(tau))))
        }
    }
}

/// Linear interpolation of `(a1, b)` at slow time `tau`.
pub fn interpolate(traj: &OdeTrajectory, tau: f64) -> (Complex64, f64) {
    let s = &traj.samples;
    let i = s.partition_point(|p| p.0 < tau);
    if i == 0 {
        return (s[0].1, s[0].2);
    }
    if i >= s.len() {
        let last = s[s.len() - 1];
        return (last.1, last.2);
    }
    let (t0, a0, b0) = s[i - 1];
    let (t1, a1, b1) = s[i];
    let w = if t1 > t0 { (tau - t0) / (t1 - t0) } else { 0.0 };
    (a0 + (a1 - a0) * w, b0 + (b1 - b0) * w)
}

pub fn phase_portrait_cmd(args: &PortraitArgs) -> CliResult<()> {
    check_ell_pi(&args.common)?;
    let preset = portrait_preset(args.preset);
    let cfg = ode_config(preset.cfg.clone(), &args.common, &args.ode)?;
    let gamma = args.common.gamma.unwrap_or(1.0);
    let results = phase_portrait(&preset.initial, gamma, &cfg);
    let dir = out_dir(&args.common.out, "phase-portrait");
    ensure_dir(&dir)?;
    let mut entries = Vec::new();
    let mut series = Vec::new();
    let mut failures = 0;
    for (i, (x0, res)) in preset.initial.iter().zip(&results).enumerate() {
        let mut entry = json!({"index": i, "re_a1": x0.a1.re, "im_a1": x0.a1.im, "b": x0.b, "m": x0.m});
        match res {
            Ok(traj) => {
                let file = format!("traj_{i:03}.csv");
                trajectory_csv(traj).write(&dir.join(&file))?;
                entry["exit"] = json!(traj.exit.label());
                entry["file"] = json!(file);
                entry["tau_final"] = json!(traj.samples.last().map(|s| s.0));
                let points = traj
                    .samples
                    .iter()
                    .map(|&(_, a1, b)| match args.preset {
                        Preset::Fig7 => (a1.norm(), b),
                        _ => (-2.0 * a1.re, -2.0 * a1.im),
                    })
                    .collect();
                series.push(Series { label: format!("trajectory {i}"), points });
            }
            Err(e) => {
                failures += 1;
                entry["exit"] = json!("error");
                entry["error"] = json!(e.to_string());
                eprintln!("trajectory {i}: {e}");
            }
        }
        entries.push(entry);
    }
    let (title, xl, yl) = match args.preset {
        Preset::Fig7 => ("Slow dynamics of |a1| and b", "|a1|", "b"),
        _ => ("Centre of the cross-section, H0 = m - x cos - y sin", "x", "y"),
    };
    write_text(&dir.join("portrait.svg"), &line_chart(title, xl, yl, &series))?;
    if args.preset == Preset::Fig6 {
        if let Some(Ok(traj)) = results.first() {
            write_profiles(&dir, traj, &preset.profile_times)?;
        }
    }
    let preset_name = format!("{:?}", args.preset).to_lowercase();
    let count = entries.len();
    let index = json!({
        "preset": preset_name,
        "gamma": gamma,
        "config": {"K": cfg.k_max, "L": cfg.l_max, "tau_end": cfg.tau_end, "dtau": cfg.dtau, "tol": cfg.tol, "margin": cfg.margin},
        "trajectories": entries,
    });
    write_json(dir.join("portrait.json").to_str().unwrap_or("portrait.json"), &index)?;
    println!("{count} trajectories written to {}", dir.display());
    maybe_json(&args.common, &index)?;
    if failures > 0 {
        return Err(CliError::Stopped(format!("{failures} trajectories failed")));
    }
    Ok(())
}

/// Cross-section profiles of the slow state at the requested times, as
/// snapshots, CSV and an outline of the free surface.
fn write_profiles(dir: &Path, traj: &OdeTrajectory, times: &[f64]) -> CliResult<()> {
    const N: usize = 128;
    // Radial scale of the film in the outline; the profile itself is in the CSV.
    const FILM_SCALE: f64 = 0.3;
    let lattice = Lattice::new(8, 2, PI)?;
    let mut outline = Vec::new();
    for (j, &tau) in times.iter().enumerate() {
        let (a1, b) = interpolate(traj, tau);
        let h: SpectralField = manifold_to_field(&ManifoldPoint { a1, b, m: traj.x0.m }, lattice)?;
        write_snapshot(&dir.join(format!("profile_{j}.rff")), &h)?;
        let grid = synthesize(&h, N, 6)?;
        let mut csv = Csv::new(&["theta", "h"]);
        let mut points = Vec::with_capacity(N + 1);
        for i in 0..=N {
            let theta = 2.0 * PI * i as f64 / N as f64;
            let value = grid.at(i % N, 0);
            if i < N {
                csv.row(&[theta, value]);
            }
            let r = 1.0 - FILM_SCALE * value;
            points.push((r * theta.cos(), r * theta.sin()));
        }
        csv.write(&dir.join(format!("profile_{j}.csv")))?;
        outline.push(Series { label: format!("tau = {tau}"), points });
    }
    let wall = (0..=N)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / N as f64;
            (t.cos(), t.sin())
        })
        .collect();
    outline.push(Series { label: "cylinder wall".into(), points: wall });
    write_text(&dir.join("profiles.svg"), &line_chart("Free surface in the cross-section", "x", "y", &outline))
}
