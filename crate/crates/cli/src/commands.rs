//! Subcommand implementations.

use std::fmt::Write as _;

use delta_piston::ode::events_json;
use delta_piston::particles::{event_log_csv, ParticleRun};
use delta_piston::{
    classify, convergence_study, default_half_width, delta_weights, discretize, entropy_check, format_number, integrate,
    residual_csv, residual_report, run, solve, trajectory_csv, uniform_grid, weak_residual_ibvp, CaseId, Faults, MeasureField,
    Side, TestFunction, TrajectoryF64, View,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{with_parameter, BackendChoice, Format, RunConfig};
use crate::error::CliError;
use crate::output::write_atomic;

fn wants(cfg: &RunConfig, backend: BackendChoice) -> bool {
    cfg.backend == backend || cfg.backend == BackendChoice::All
}

fn trajectory_json(traj: &TrajectoryF64, backend: &str, grid: &[f64]) -> String {
    let samples: Vec<_> =
        grid.iter().map(|&t| json!({"t": t, "x1": traj.position(t), "v": traj.velocity(t), "branch": traj.branch(t)})).collect();
    let doc = json!({
        "backend": backend,
        "case": traj.case().tag.number(),
        "boundary": traj.case().flags_string(),
        "splice_time": traj.splice_time(),
        "limit_velocity": traj.limit_velocity(),
        "samples": samples,
    });
    serde_json::to_string_pretty(&doc).expect("trajectory serializes") + "\n"
}

fn write_trajectory(cfg: &RunConfig, name: &str, traj: &TrajectoryF64, grid: &[f64]) -> Result<(), CliError> {
    match cfg.format {
        Format::Csv => write_atomic(&cfg.output_dir, &format!("trajectory_{name}.csv"), &trajectory_csv(traj, grid))?,
        Format::Json => write_atomic(&cfg.output_dir, &format!("trajectory_{name}.json"), &trajectory_json(traj, name, grid))?,
    };
    Ok(())
}

fn particle_run(cfg: &RunConfig) -> Result<ParticleRun<f64>, CliError> {
    let half_width = cfg.particles.half_width.unwrap_or_else(|| default_half_width(&cfg.setup, cfg.t_end));
    log::info!("particles: n={} per side, L={half_width}", cfg.particles.n_per_side);
    let system = discretize(&cfg.setup, cfg.particles.n_per_side, half_width)?;
    Ok(run(system, cfg.t_end)?)
}

fn accretion_csv(out: &ParticleRun<f64>) -> String {
    let mut s = String::from("t,m1,m2\n");
    let a = &out.accretion;
    for i in 0..a.t.len() {
        let _ = writeln!(s, "{},{},{}", format_number(a.t[i]), format_number(a.m1[i]), format_number(a.m2[i]));
    }
    s
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<(), CliError> {
    println!("{}", classify(&cfg.setup)?);
    Ok(())
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let case = classify(&cfg.setup)?;
    log::info!("{case}: solving with backend {:?}", cfg.backend);
    let grid = uniform_grid(cfg.t_end, cfg.grid);
    let mut columns: Vec<(&str, TrajectoryF64)> = Vec::new();
    if wants(cfg, BackendChoice::Closed) {
        columns.push(("closed", solve(&cfg.setup)?));
    }
    if wants(cfg, BackendChoice::Ode) {
        let (traj, events) = integrate(&cfg.setup, &cfg.integrator)?;
        log::info!("ode: {} catch-up events", events.len());
        write_atomic(&cfg.output_dir, "events.json", &(events_json(&events) + "\n"))?;
        columns.push(("ode", traj));
    }
    if wants(cfg, BackendChoice::Particles) {
        let out = particle_run(cfg)?;
        log::info!("particles: {} events, momentum drift {:e}", out.events.len(), out.momentum_drift);
        write_atomic(&cfg.output_dir, "particle_events.csv", &event_log_csv(&out.events))?;
        columns.push(("particles", out.trajectory));
    }
    for (name, traj) in &columns {
        write_trajectory(cfg, name, traj, &grid)?;
    }
    if cfg.backend != BackendChoice::All {
        println!("{case} backend={}", columns[0].0);
        return Ok(());
    }
    let mut csv = String::from("t,x1_closed,x1_ode,x1_particles,max_abs_diff\n");
    let mut worst = 0.0_f64;
    for &t in &grid {
        let xs: Vec<f64> = columns.iter().map(|(_, tr)| tr.position(t)).collect();
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        worst = worst.max(hi - lo);
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            format_number(t),
            format_number(xs[0]),
            format_number(xs[1]),
            format_number(xs[2]),
            format_number(hi - lo)
        );
    }
    write_atomic(&cfg.output_dir, "compare.csv", &csv)?;
    println!("{case} backend=all max_abs_diff={}", format_number(worst));
    if worst > cfg.tolerance {
        return Err(CliError::Verification(format!("max_abs_diff {worst:e} exceeds tolerance {:e}", cfg.tolerance)));
    }
    Ok(())
}

pub fn cmd_particles(cfg: &RunConfig) -> Result<(), CliError> {
    let case = classify(&cfg.setup)?;
    let grid = uniform_grid(cfg.t_end, cfg.grid);
    let out = particle_run(cfg)?;
    write_trajectory(cfg, "particles", &out.trajectory, &grid)?;
    write_atomic(&cfg.output_dir, "particle_events.csv", &event_log_csv(&out.events))?;
    write_atomic(&cfg.output_dir, "accretion.csv", &accretion_csv(&out))?;
    println!(
        "{case} events={} momentum_drift={} x1_end={}",
        out.events.len(),
        format_number(out.momentum_drift),
        format_number(out.trajectory.position(cfg.t_end))
    );
    if !cfg.particles.convergence.is_empty() {
        let study = convergence_study(&cfg.setup, &cfg.particles.convergence, cfg.t_end)?;
        let mut csv = String::from("n,error\n");
        for row in &study.rows {
            let _ = writeln!(csv, "{},{}", row.n, format_number(row.error));
        }
        write_atomic(&cfg.output_dir, "convergence.csv", &csv)?;
        match study.order {
            Some(order) => println!("observed order {order:.3}"),
            None => println!("observed order n/a"),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    backend: &'static str,
    pass: bool,
    detail: String,
}

fn data_scale(cfg: &RunConfig) -> f64 {
    let s = &cfg.setup;
    let u = 1.0 + s.u_left.abs().max(s.u_right.abs()).max(s.u0.abs());
    (1.0 + s.rho_left.max(s.rho_right) + s.m0) * u * u
}

/// Bumps straddling the path, plus one on the initial point.
fn verification_bumps(traj: &TrajectoryF64, t_end: f64, count: usize) -> Vec<TestFunction<f64>> {
    let st = t_end / (2.0 * count as f64);
    let mut phis = vec![TestFunction::new(0.0, 0.0, 0.5, st)];
    for k in 0..count {
        let t0 = st * (2 * k + 1) as f64;
        let sx = 0.5 + st;
        let shift = 0.25 * sx * ((k % 3) as f64 - 1.0);
        phis.push(TestFunction::new(traj.position(t0) + shift, t0, sx, st));
    }
    phis
}

fn verify_trajectory(
    cfg: &RunConfig,
    backend: &'static str,
    traj: &TrajectoryF64,
    corrupt: bool,
) -> Result<(Vec<Check>, String), CliError> {
    let s = &cfg.setup;
    let grid = uniform_grid(cfg.t_end, cfg.grid);
    let scale = data_scale(cfg);
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(Check { name: name.to_string(), backend, pass, detail });
    };

    let entropy = entropy_check(traj, s, &grid);
    push(
        "entropy",
        entropy.pass,
        match entropy.worst_margin {
            Some(m) => format!("worst margin {} at t={}", format_number(m), format_number(entropy.worst_t.unwrap_or(0.0))),
            None => "vacuous: no gas touches the piston".into(),
        },
    );

    let weights = delta_weights(traj, s);
    let samples: Vec<_> = grid.iter().map(|&t| weights.sample(t)).collect();
    let min_force = samples.iter().map(|w| w.wp1.min(w.wp2)).fold(f64::INFINITY, f64::min);
    push("forces_nonnegative", min_force >= -1e-12 * scale, format!("min force {}", format_number(min_force)));

    if s.m0 > 0.0 {
        let defect = samples.iter().map(|w| ((w.wp1 - w.wp2) / s.m0 - w.a).abs() / (1.0 + w.a.abs())).fold(0.0, f64::max);
        push("newton_closure", defect <= 1e-9, format!("max relative defect {}", format_number(defect)));
    } else {
        push("newton_closure", true, "skipped: massless piston".into());
    }

    let hs = [1e-2, 1e-3, 1e-4];
    let noise = match backend {
        "ode" => cfg.integrator.rel_tol.max(cfg.integrator.abs_tol).max(f64::EPSILON),
        _ => f64::EPSILON,
    };
    let contact = traj.contact();
    let kinks: Vec<f64> = [contact.left, contact.right, traj.splice_time()].into_iter().flatten().collect();
    let mut worst_order = f64::INFINITY;
    let mut resolved = 0;
    for k in 1..=8 {
        let t = cfg.t_end * k as f64 / 9.0;
        if t <= 2.0 * hs[0] || kinks.iter().any(|&c| (t - c).abs() <= 0.05) {
            continue;
        }
        let d = weights.rh_defects(t, &hs);
        for (i, pair) in d.windows(2).enumerate() {
            let floor = 64.0 * noise * (1.0 + weights.alpha(t).abs()) / hs[i + 1];
            if pair[1] > floor {
                resolved += 1;
                worst_order = worst_order.min((pair[0] / pair[1]).log10());
            }
        }
    }
    push(
        "rankine_hugoniot",
        worst_order >= 1.8,
        if resolved == 0 {
            "all differences at rounding level".into()
        } else {
            format!("{resolved} step ratios above rounding, worst order {worst_order:.3}")
        },
    );

    let faults = Faults { alpha_scale: if corrupt { 2.0 } else { 1.0 }, zero_forces: false };
    let cauchy = MeasureField::new(traj, s, View::Riemann).with_faults(faults);
    let physical = MeasureField::new(traj, s, View::Piston).with_faults(faults);
    let phis = verification_bumps(traj, cfg.t_end, cfg.verify.bumps);
    let rows = residual_report(&cauchy, &phis, &[cfg.verify.order])?;
    let worst_cauchy = rows.iter().map(|r| r.r_mass.abs().max(r.r_momentum.abs())).fold(0.0, f64::max);
    let mut worst_ibvp = 0.0_f64;
    for phi in &phis {
        for side in [Side::Left, Side::Right] {
            let face = TestFunction { x0: phi.x0 + if side == Side::Right { s.l } else { 0.0 }, ..*phi };
            worst_ibvp = worst_ibvp.max(weak_residual_ibvp(side, &physical, &face, cfg.verify.order)?.max_abs());
        }
    }
    let tol = match backend {
        "ode" => cfg.verify.residual_tol.max(1e3 * cfg.integrator.rel_tol),
        _ => cfg.verify.residual_tol,
    } * scale;
    push(
        "weak_residual_cauchy",
        worst_cauchy <= tol,
        format!("{} bumps, max |r| {} (bound {tol:.1e})", phis.len(), format_number(worst_cauchy)),
    );
    push(
        "weak_residual_ibvp",
        worst_ibvp <= tol,
        format!("{} bumps x 2 sides, max |r| {} (bound {tol:.1e})", phis.len(), format_number(worst_ibvp)),
    );
    Ok((checks, residual_csv(&rows)))
}

pub fn cmd_verify(cfg: &RunConfig, corrupt: bool) -> Result<(), CliError> {
    let case = classify(&cfg.setup)?;
    let mut runs: Vec<(&'static str, TrajectoryF64)> = Vec::new();
    match cfg.backend {
        BackendChoice::Particles => {
            return Err(CliError::Config("verify supports the closed, ode and all backends".into()));
        }
        _ => {
            if wants(cfg, BackendChoice::Closed) {
                runs.push(("closed", solve(&cfg.setup)?));
            }
            if wants(cfg, BackendChoice::Ode) {
                runs.push(("ode", integrate(&cfg.setup, &cfg.integrator)?.0));
            }
        }
    }
    let mut checks = Vec::new();
    for (name, traj) in &runs {
        let (c, csv) = verify_trajectory(cfg, name, traj, corrupt)?;
        write_atomic(&cfg.output_dir, &format!("residuals_{name}.csv"), &csv)?;
        checks.extend(c);
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "case": case.tag.number(),
        "boundary": case.flags_string(),
        "corrupt_alpha": corrupt,
        "pass": pass,
        "checks": checks,
    });
    write_atomic(
        &cfg.output_dir,
        "verify_report.json",
        &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
    )?;
    for c in &checks {
        println!("{} {}[{}]: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.backend, c.detail);
    }
    if pass {
        Ok(())
    } else {
        let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| format!("{}[{}]", c.name, c.backend)).collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}

struct SweepPoint {
    value: f64,
    outcome: Result<(CaseId, Option<f64>, Option<f64>, f64), String>,
}

pub fn cmd_sweep(cfg: &RunConfig, parameter: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("sweep value {v} is not finite")));
    }
    with_parameter(&cfg.setup, parameter, values[0])?;
    let grid = uniform_grid(cfg.t_end, cfg.grid);
    let use_ode = cfg.backend == BackendChoice::Ode;
    let points: Vec<(SweepPoint, Option<String>)> = values
        .par_iter()
        .map(|&value| {
            let solved = with_parameter(&cfg.setup, parameter, value).map_err(|e| e.to_string()).and_then(|setup| {
                let case = classify(&setup).map_err(|e| e.to_string())?;
                let traj = if use_ode { integrate(&setup, &cfg.integrator).map(|(t, _)| t) } else { solve(&setup) }
                    .map_err(|e| e.to_string())?;
                Ok((case, traj))
            });
            match solved {
                Ok((case, traj)) => {
                    let csv = trajectory_csv(&traj, &grid);
                    let row = (case, traj.limit_velocity(), traj.splice_time(), traj.position(cfg.t_end));
                    (SweepPoint { value, outcome: Ok(row) }, Some(csv))
                }
                Err(e) => {
                    log::warn!("sweep {parameter}={value}: {e}");
                    (SweepPoint { value, outcome: Err(e) }, None)
                }
            }
        })
        .collect();

    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut csv = String::from("value,limit_velocity,t1,case,boundary,x1_end,error\n");
    for (i, (p, traj_csv)) in points.iter().enumerate() {
        match &p.outcome {
            Ok((case, limit, t1, x_end)) => {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},",
                    format_number(p.value),
                    opt(*limit),
                    opt(*t1),
                    case.tag.number(),
                    case.boundary_flags.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
                    format_number(*x_end)
                );
            }
            Err(e) => {
                let _ = writeln!(csv, "{},,,,,,\"{}\"", format_number(p.value), e.replace('"', "'"));
            }
        }
        if let Some(t) = traj_csv {
            write_atomic(&cfg.output_dir, &format!("sweep_point_{i}.csv"), t)?;
        }
    }
    write_atomic(&cfg.output_dir, "sweep.csv", &csv)?;
    write_atomic(&cfg.output_dir, "sweep.gp", &gnuplot_script(parameter, &points))?;
    let ok = points.iter().filter(|(p, _)| p.outcome.is_ok()).count();
    println!("sweep {parameter}: {ok}/{} points solved", points.len());
    if ok == 0 {
        return Err(CliError::Solver(format!("every sweep point failed for {parameter}")));
    }
    Ok(())
}

fn gnuplot_script(parameter: &str, points: &[(SweepPoint, Option<String>)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot sweep.gp  (run from the output directory)");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set xlabel '{parameter}'");
    let _ = writeln!(s, "set ylabel 'limit velocity'");
    let _ = writeln!(s, "plot 'sweep.csv' skip 1 using 1:2 with linespoints title 'limit_velocity'");
    let _ = writeln!(s, "pause -1 'next: trajectories'");
    let _ = writeln!(s, "set xlabel 't'");
    let _ = writeln!(s, "set ylabel 'x1'");
    let curves: Vec<String> = points
        .iter()
        .enumerate()
        .filter(|(_, (_, t))| t.is_some())
        .map(|(i, (p, _))| {
            format!("'sweep_point_{i}.csv' skip 1 using 1:2 with lines title '{parameter}={}'", format_number(p.value))
        })
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    let _ = writeln!(s, "pause -1");
    s
}
