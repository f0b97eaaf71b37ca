//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{random_setup, CASES};
use delta_piston::{
    default_half_width, delta_weights, discretize, entropy_check, galilean_shift, integrate, reflect, run, solve, uniform_grid,
    weak_residual_cauchy, zero_mass_velocity, CaseTag, Contact, Faults, IntegratorConfig, Law, MeasureField, Piece, RiemannSetup,
    TestFunction, Trajectory, View,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const T_END: f64 = 10.0;
const SEED: u64 = 0x5eed_2024;

type Outcome = Result<String, String>;

fn setups(per_case: usize) -> Vec<RiemannSetup<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3]
        .into_iter()
        .flat_map(|case| (0..per_case).map(|_| random_setup(&mut rng, case)).collect::<Vec<_>>())
        .collect()
}

fn scaled(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn three_way_equivalence() -> Outcome {
    let grid = uniform_grid(T_END, 2001);
    let rows: Vec<(f64, f64)> = setups(100)
        .par_iter()
        .map(|s| {
            let exact = solve(s).unwrap();
            let (ode, _) = integrate(s, &IntegratorConfig::default()).unwrap();
            let particles = run(discretize(s, 10_000, default_half_width(s, T_END)).unwrap(), T_END).unwrap();
            grid.iter().fold((0.0_f64, 0.0_f64), |(eo, ep), &t| {
                let x = exact.position(t);
                (eo.max(scaled(ode.position(t), x)), ep.max(scaled(particles.trajectory.position(t), x)))
            })
        })
        .collect();
    let ode = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let particles = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    check(ode <= 1e-7 && particles <= 1e-2, format!("300 setups, ode {ode:.2e} <= 1e-7, particles {particles:.2e} <= 1e-2"))
}

fn spot_values() -> Outcome {
    let c1 = solve(&RiemannSetup::<f64>::new(4.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
    let e1 = (c1.position(1.0) - (6.0 - 27f64.sqrt()) / 3.0).abs();
    let e1v = (c1.limit_velocity().unwrap() - 1.0 / 3.0).abs();
    let c2 = solve(&RiemannSetup::<f64>::new(1.0, 1.0, 1.0, 2.0, 1.0, 0.0, 0.0).unwrap()).unwrap();
    let e2 = (c2.position(4.0) - 2.0).abs();
    let s3 = RiemannSetup::<f64>::new(1.0, 3.0, 1.0, 1.0, 1.0, 0.0, 0.0).unwrap();
    let c3 = solve(&s3).unwrap();
    let t1 = c3.splice_time().unwrap();
    let p = c3.pieces().unwrap();
    let gap_x = (p[0].position(t1) - p[1].position(t1)).abs();
    let gap_v = (p[0].velocity(t1) - p[1].velocity(t1)).abs();
    let ok = e1 <= 1e-14 && e1v <= 1e-14 && e2 <= 1e-14 && (t1 - 0.5).abs() <= 1e-15 && gap_x <= 1e-12 && gap_v <= 1e-12;
    check(
        ok,
        format!("x1(1) err {e1:.1e}, v_inf err {e1v:.1e}, x1(4) err {e2:.1e}, t1={t1}, splice gaps {gap_x:.1e}/{gap_v:.1e}"),
    )
}

fn entropy() -> Outcome {
    let grid = uniform_grid(T_END, 1001);
    let mut failures = 0;
    let mut detected = 0;
    let all = setups(100);
    for s in &all {
        let exact = solve(s).unwrap();
        let (ode, _) = integrate(s, &IntegratorConfig::default()).unwrap();
        if !entropy_check(&exact, s, &grid).pass || !entropy_check(&ode, s, &grid).pass {
            failures += 1;
        }
        let fast = s.u_left + s.u_left.abs() + 1.0;
        let contact = Contact { left: Some(0.0), right: Some(0.0) };
        let bad = Trajectory::from_pieces(
            exact.case().clone(),
            0.0,
            contact,
            vec![Piece::new(0.0, 0.0, Law::Ballistic { velocity: fast })],
        );
        if !entropy_check(&bad, s, &grid).pass {
            detected += 1;
        }
    }
    check(
        failures == 0 && detected == all.len(),
        format!("{failures} admissible failures, {detected}/{} faults detected", all.len()),
    )
}

fn rankine_hugoniot() -> Outcome {
    let hs = [1e-2, 1e-3, 1e-4];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = f64::INFINITY;
    let mut floor_hits = 0;
    let mut n = 0;
    for s in setups(30) {
        let traj = solve(&s).unwrap();
        let w = delta_weights(&traj, &s);
        let t = loop {
            let t: f64 = rng.gen_range(0.2..3.0);
            if traj.splice_time().is_none_or(|t1| (t - t1).abs() > 0.05) {
                break t;
            }
        };
        let d = w.rh_defects(t, &hs);
        for (k, pair) in d.windows(2).enumerate() {
            n += 1;
            let rounding = 64.0 * f64::EPSILON * (1.0 + w.alpha(t).abs()) / hs[k + 1];
            if pair[1] <= rounding {
                floor_hits += 1;
                continue;
            }
            worst = worst.min((pair[0] / pair[1]).log10());
        }
    }
    check(
        worst >= 1.8 && floor_hits < n,
        format!("{n} step ratios, worst observed order {worst:.3} >= 1.8 ({floor_hits} at rounding floor)"),
    )
}

fn newton_closure() -> Outcome {
    let grid = uniform_grid(T_END, 201);
    let mut worst_closure = 0.0_f64;
    let mut worst_force = 0.0_f64;
    for s in setups(100) {
        let exact = solve(&s).unwrap();
        let (ode, _) = integrate(&s, &IntegratorConfig::default()).unwrap();
        let scale = (1.0 + s.rho_left.max(s.rho_right)) * s.u_left.abs().max(s.u_right.abs()).max(1.0).powi(2);
        for traj in [&exact, &ode] {
            let w = delta_weights(traj, &s);
            for &t in &grid {
                let sample = w.sample(t);
                if std::ptr::eq(traj, &exact) {
                    worst_closure = worst_closure.max(scaled((sample.wp1 - sample.wp2) / s.m0, sample.a));
                }
                worst_force = worst_force.min(sample.wp1.min(sample.wp2) / scale);
            }
        }
    }
    check(
        worst_closure <= 1e-9 && worst_force >= -1e-12,
        format!("closure defect {worst_closure:.2e} <= 1e-9, most negative scaled force {worst_force:.2e}"),
    )
}

fn weak_residuals() -> Outcome {
    let s = RiemannSetup::<f64>::new(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0).unwrap();
    let traj = solve(&s).unwrap();
    let field = MeasureField::new(&traj, &s, View::Riemann);
    let corrupt = field.with_faults(Faults { alpha_scale: 2.0, zero_forces: false });
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let orders = [4, 8, 16, 32];
    let mut worst = 0.0_f64;
    let mut monotone = true;
    let mut weakest_detection = f64::INFINITY;
    for _ in 0..20 {
        let t0 = rng.gen_range(0.6..6.0);
        let sx = rng.gen_range(0.3..1.0);
        let phi = TestFunction::new(rng.gen_range(-0.5 * sx..0.5 * sx), t0, sx, rng.gen_range(0.2..0.5));
        let r: Vec<f64> = orders.iter().map(|&o| weak_residual_cauchy(&field, &phi, o).unwrap().max_abs()).collect();
        monotone &= r.windows(2).all(|w| w[1] <= 1.1 * w[0] || w[1] <= 1e-13);
        worst = worst.max(r[3]);
        weakest_detection = weakest_detection.min(weak_residual_cauchy(&corrupt, &phi, 32).unwrap().mass.abs());
    }
    check(
        worst <= 1e-8 && monotone && weakest_detection > 1e-3,
        format!("20 bumps, max |r| {worst:.2e} at order 32, nonincreasing {monotone}, smallest corrupted |r_mass| {weakest_detection:.2e}"),
    )
}

fn particle_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let n = 10_000;
    let mut worst_drift = 0.0_f64;
    let mut worst_events = 0;
    for case in CASES {
        for _ in 0..5 {
            let s = random_setup(&mut rng, case);
            let out = run(discretize(&s, n, default_half_width(&s, T_END)).unwrap(), T_END).unwrap();
            worst_drift = worst_drift.max(out.momentum_drift);
            worst_events = worst_events.max(out.events.len());
        }
    }
    check(
        worst_drift <= 1e-12 && worst_events <= 2 * n + 1,
        format!("30 runs at n={n}, drift {worst_drift:.2e} <= 1e-12, events {worst_events} <= {}", 2 * n + 1),
    )
}

fn symmetry_and_covariance() -> Outcome {
    let sym = RiemannSetup::<f64>::new(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0).unwrap();
    let out = run(discretize(&sym, 10_000, default_half_width(&sym, T_END)).unwrap(), T_END).unwrap();
    let still = out.events.iter().all(|e| e.piston_x1 == 0.0)
        && uniform_grid(T_END, 101).iter().all(|&t| out.trajectory.position(t) == 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut worst = 0.0_f64;
    for case in CASES {
        for _ in 0..20 {
            let s = random_setup(&mut rng, case);
            let direct = solve(&s).unwrap();
            let mirrored = solve(&reflect(&s).0).unwrap();
            let (shifted, transform) = galilean_shift(&s, rng.gen_range(-3.0..3.0));
            let moved = solve(&shifted).unwrap();
            for t in uniform_grid(T_END, 201) {
                let x = direct.position(t);
                worst = worst.max(scaled(-mirrored.position(t), x)).max(scaled(transform.position_back(moved.position(t), t), x));
            }
        }
    }
    check(still && worst <= 1e-10, format!("symmetric piston still: {still}; reflection/shift defect {worst:.2e} <= 1e-10"))
}

fn thickness_independence() -> Outcome {
    let grid = uniform_grid(T_END, 501);
    let mut mismatches = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    for case in CASES {
        for _ in 0..5 {
            let s = random_setup(&mut rng, case);
            let base_closed = solve(&s).unwrap();
            let (base_ode, _) = integrate(&s, &IntegratorConfig::default()).unwrap();
            for l in [0.5, 1.0, 7.25] {
                let thick = RiemannSetup { l, ..s };
                let closed = solve(&thick).unwrap();
                let (ode, _) = integrate(&thick, &IntegratorConfig::default()).unwrap();
                for &t in &grid {
                    if closed.position(t).to_bits() != base_closed.position(t).to_bits()
                        || ode.position(t).to_bits() != base_ode.position(t).to_bits()
                    {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    check(mismatches == 0, format!("30 setups x 3 thicknesses, {mismatches} non-identical samples"))
}

fn massless_limit() -> Outcome {
    let (r1, u1, r2, u2) = (4.0, 1.0, 1.0, -1.0);
    let target = zero_mass_velocity(r1, u1, r2, u2).unwrap();
    let errors: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&m0| {
            let s = RiemannSetup::<f64>::new(r1, u1, r2, u2, m0, 0.0, 0.0).unwrap();
            (solve(&s).unwrap().velocity(1e-3) - target).abs()
        })
        .collect();
    let ok = errors.windows(2).all(|w| w[1] < w[0]) && errors[2] < 1e-3;
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.2e}")).collect();
    check(ok, format!("|v(1e-3) - {target:.6}| for m0 = 1e-2, 1e-4, 1e-6: {}", shown.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 three-way equivalence", three_way_equivalence),
        ("2 closed-form spot values", spot_values),
        ("3 entropy condition", entropy),
        ("4 Rankine-Hugoniot consistency", rankine_hugoniot),
        ("5 Newton closure and force signs", newton_closure),
        ("6 weak-form residuals", weak_residuals),
        ("7 particle conservation", particle_conservation),
        ("8 symmetry and covariance", symmetry_and_covariance),
        ("9 thickness independence", thickness_independence),
        ("10 massless limit", massless_limit),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
