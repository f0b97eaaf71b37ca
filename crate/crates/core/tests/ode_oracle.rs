mod common;

use common::{max_scaled_gap, separated, setup_for_case, CASES};
use delta_piston::ode::{integrate_problem, OdeForm, OdeProblem};
use delta_piston::{classify, integrate, solve, CaseTag, IntegratorConfig, Side};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (f64, f64, f64, [f64; 3])> {
    (0.1..=10.0_f64, 0.1..=10.0_f64, 0.1..=10.0_f64, [-5.0..=5.0_f64, -5.0..=5.0_f64, -5.0..=5.0_f64])
        .prop_filter("distinct velocities", |(_, _, _, u)| separated(*u, 1e-3))
}

fn check_case(case: CaseTag, rho1: f64, rho2: f64, m0: f64, u: [f64; 3]) -> Result<(), TestCaseError> {
    let setup = setup_for_case(case, rho1, rho2, m0, u);
    prop_assert_eq!(classify(&setup).unwrap().tag, case);
    let exact = solve(&setup).unwrap();
    let (numeric, events) = integrate(&setup, &IntegratorConfig::default()).unwrap();
    let gap = max_scaled_gap(|t| numeric.position(t), |t| exact.position(t), 10.0, 2000);
    prop_assert!(gap <= 1e-7, "scaled gap {gap:e} for {setup:?}");
    match case {
        CaseTag::Case3 | CaseTag::Case5 if exact.splice_time().unwrap() < 10.0 => {
            prop_assert_eq!(events.len(), 1);
            let t1 = exact.splice_time().unwrap();
            prop_assert!((events[0].time - t1).abs() <= 1e-8 * (1.0 + t1), "t1 {} vs {}", events[0].time, t1);
            let side = if case == CaseTag::Case3 { Side::Right } else { Side::Left };
            prop_assert_eq!(events[0].side, side);
        }
        _ => prop_assert!(events.is_empty()),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn ode_matches_closed_form_case1((r1, r2, m0, u) in params()) { check_case(CaseTag::Case1, r1, r2, m0, u)?; }

    #[test]
    fn ode_matches_closed_form_case2((r1, r2, m0, u) in params()) { check_case(CaseTag::Case2, r1, r2, m0, u)?; }

    #[test]
    fn ode_matches_closed_form_case3((r1, r2, m0, u) in params()) { check_case(CaseTag::Case3, r1, r2, m0, u)?; }

    #[test]
    fn ode_matches_closed_form_case4((r1, r2, m0, u) in params()) { check_case(CaseTag::Case4, r1, r2, m0, u)?; }

    #[test]
    fn ode_matches_closed_form_case5((r1, r2, m0, u) in params()) { check_case(CaseTag::Case5, r1, r2, m0, u)?; }

    #[test]
    fn ode_matches_closed_form_case6((r1, r2, m0, u) in params()) { check_case(CaseTag::Case6, r1, r2, m0, u)?; }

    #[test]
    fn first_and_second_order_forms_agree(case_idx in 0usize..6, (r1, r2, m0, u) in params()) {
        let setup = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let config = IntegratorConfig::default();
        let (first, _) = integrate_problem(OdeProblem::new(&setup, OdeForm::FirstOrderMomentum).unwrap(), &config).unwrap();
        let (second, _) = integrate_problem(OdeProblem::new(&setup, OdeForm::SecondOrderNewton).unwrap(), &config).unwrap();
        let gap = max_scaled_gap(|t| second.position(t), |t| first.position(t), 10.0, 1000);
        prop_assert!(gap <= 1e-7, "forms differ by {gap:e} for {setup:?}");
    }

    #[test]
    fn entropy_condition_along_numerical_path(case_idx in 0usize..6, (r1, r2, m0, u) in params()) {
        let setup = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let (traj, _) = integrate(&setup, &IntegratorConfig::default()).unwrap();
        for node in traj.dense_nodes().unwrap() {
            if traj.contact().active(Side::Left, node.t) && traj.contact().active(Side::Right, node.t) {
                let slack = 1e-9 * (1.0 + node.v.abs());
                prop_assert!(setup.u_right - slack <= node.v && node.v <= setup.u_left + slack);
            }
        }
    }

    #[test]
    fn first_order_form_keeps_momentum_identity(case_idx in 0usize..6, (r1, r2, m0, u) in params()) {
        let setup = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let (traj, _) = integrate(&setup, &IntegratorConfig::default()).unwrap();
        let c = traj.contact();
        for node in traj.dense_nodes().unwrap() {
            let (t, x) = (node.t, node.x);
            let left = if c.active(Side::Left, t) { setup.rho_left } else { 0.0 };
            let right = if c.active(Side::Right, t) { setup.rho_right } else { 0.0 };
            let alpha = setup.m0 + left * (setup.u_left * t - x) + right * (x - setup.u_right * t);
            let wm = setup.m0 * setup.u0 + left * setup.u_left * (setup.u_left * t - x)
                + right * setup.u_right * (x - setup.u_right * t);
            prop_assert!((alpha * node.v - wm).abs() <= 1e-9 * (1.0 + wm.abs()));
        }
    }
}

#[test]
fn integration_is_deterministic() {
    let setup = setup_for_case(CaseTag::Case3, 2.5, 0.7, 1.3, [-1.0, 0.4, 2.2]);
    let config = IntegratorConfig::default();
    let (a, ea) = integrate(&setup, &config).unwrap();
    let (b, eb) = integrate(&setup, &config).unwrap();
    assert_eq!(a.dense_nodes().unwrap(), b.dense_nodes().unwrap());
    assert_eq!(ea, eb);
}

#[test]
fn single_precision_build_tracks_closed_form() {
    let setup = delta_piston::RiemannSetup::<f32>::new(4.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0).unwrap();
    let config = IntegratorConfig { rel_tol: 1e-5, abs_tol: 1e-6, event_tol: 1e-5, ..IntegratorConfig::default() };
    let (numeric, _) = integrate(&setup, &config).unwrap();
    let exact = solve(&setup).unwrap();
    for i in 0..=20 {
        let t = i as f32 * 0.5;
        assert!((numeric.position(t) - exact.position(t)).abs() < 1e-4);
    }
}
