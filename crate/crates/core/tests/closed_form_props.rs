mod common;

use common::{separated, setup_for_case, CASES};
use delta_piston::closed_form::catch_up_time;
use delta_piston::{
    classify, galilean_shift, reflect, solve, solve_case1, solve_case2, zero_mass_velocity, CaseTag, RiemannSetup,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (f64, f64, f64, [f64; 3])> {
    (0.1..=10.0_f64, 0.1..=10.0_f64, 0.1..=10.0_f64, [-5.0..=5.0_f64, -5.0..=5.0_f64, -5.0..=5.0_f64])
        .prop_filter("distinct velocities", |(_, _, _, u)| separated(*u, 1e-3))
}

fn grid(t_end: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| t_end * i as f64 / n as f64)
}

fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-13 * (1.0 + w[0].abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn classification_is_total(
        rho1 in prop_oneof![Just(0.0), 0.0..10.0_f64],
        rho2 in prop_oneof![Just(0.0), 0.0..10.0_f64],
        m0 in prop_oneof![Just(0.0), 0.0..10.0_f64],
        u in [-2i32..=2, -2i32..=2, -2i32..=2],
    ) {
        // integer velocities hit every tie
        let s = RiemannSetup::new(rho1, u[0] as f64, rho2, u[1] as f64, m0, u[2] as f64, 0.0).unwrap();
        let case = classify(&s).unwrap();
        prop_assert!(solve(&s).is_ok(), "{s:?} -> {case}");
    }

    #[test]
    fn reflection_maps_cases(case_idx in 0usize..6, (r1, r2, m0, u) in params()) {
        let s = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let (m, _) = reflect(&s);
        let image = classify(&m).unwrap().tag;
        let expected = match CASES[case_idx] {
            CaseTag::Case1 => CaseTag::Case1,
            CaseTag::Case2 => CaseTag::Case4,
            CaseTag::Case3 => CaseTag::Case5,
            CaseTag::Case4 => CaseTag::Case2,
            CaseTag::Case5 => CaseTag::Case3,
            CaseTag::Case6 => CaseTag::Case6,
        };
        prop_assert_eq!(image, expected);
        prop_assert_eq!(reflect(&m).0, s);
    }

    #[test]
    fn reflected_solve_maps_back(case_idx in 0usize..6, (r1, r2, m0, u) in params()) {
        let s = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let direct = solve(&s).unwrap();
        let mirrored = solve(&reflect(&s).0).unwrap();
        for t in grid(10.0, 200) {
            let x = direct.position(t);
            prop_assert!((x + mirrored.position(t)).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn galilean_covariance(case_idx in 0usize..6, (r1, r2, m0, u) in params(), speed in -3.0..3.0_f64) {
        let s = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let direct = solve(&s).unwrap();
        let (shifted, transform) = galilean_shift(&s, speed);
        let moved = solve(&shifted).unwrap();
        for t in grid(10.0, 200) {
            let x = direct.position(t);
            let back = transform.position_back(moved.position(t), t);
            prop_assert!((back - x).abs() <= 1e-10 * (1.0 + x.abs()), "t={t}: {back} vs {x}");
        }
    }

    #[test]
    fn entropy_sandwich_case1((r1, r2, m0, u) in params()) {
        let s = setup_for_case(CaseTag::Case1, r1, r2, m0, u);
        let traj = solve(&s).unwrap();
        for t in grid(10.0, 500).skip(1) {
            let v = traj.velocity(t);
            prop_assert!(s.u_right < v && v < s.u_left, "t={t}: {v}");
        }
    }

    #[test]
    fn monotone_approach_cases_1_and_2(case_idx in 0usize..2, (r1, r2, m0, u) in params()) {
        let s = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let traj = solve(&s).unwrap();
        let limit = traj.limit_velocity().unwrap();
        let gaps: Vec<f64> = grid(10.0, 500).map(|t| (traj.velocity(t) - limit).abs()).collect();
        prop_assert!(nonincreasing(&gaps));
    }

    #[test]
    fn case3_monotone_on_each_piece((r1, r2, m0, u) in params()) {
        let s = setup_for_case(CaseTag::Case3, r1, r2, m0, u);
        let traj = solve(&s).unwrap();
        let t1 = traj.splice_time().unwrap();
        let before: Vec<f64> = grid(t1, 200).map(|t| s.u_left - traj.velocity(t)).collect();
        prop_assert!(nonincreasing(&before));
        let limit = traj.limit_velocity().unwrap();
        let after: Vec<f64> = grid(10.0, 500).map(|t| (traj.velocity(t1 + t) - limit).abs()).collect();
        prop_assert!(nonincreasing(&after));
    }

    #[test]
    fn thickness_independence(case_idx in 0usize..6, (r1, r2, m0, u) in params(), l in 0.0..5.0_f64) {
        let s = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let thick = RiemannSetup { l, ..s };
        let (a, b) = (solve(&s).unwrap(), solve(&thick).unwrap());
        for t in grid(10.0, 100) {
            prop_assert_eq!(a.position(t).to_bits(), b.position(t).to_bits());
            prop_assert_eq!(b.right_face(t), b.position(t) + l);
        }
    }

    #[test]
    fn case3_splice_is_c1((r1, r2, m0, u) in params()) {
        let s = setup_for_case(CaseTag::Case3, r1, r2, m0, u);
        let traj = solve(&s).unwrap();
        let pieces = traj.pieces().unwrap();
        let t1 = traj.splice_time().unwrap();
        prop_assert_eq!(t1, catch_up_time(&s));
        prop_assert_eq!(pieces[0].position(t1), pieces[1].position(t1));
        prop_assert!((pieces[0].velocity(t1) - pieces[1].velocity(t1)).abs() <= 1e-12);
    }

    #[test]
    fn initial_conditions(case_idx in 0usize..6, (r1, r2, m0, u) in params()) {
        let s = setup_for_case(CASES[case_idx], r1, r2, m0, u);
        let traj = solve(&s).unwrap();
        prop_assert_eq!(traj.position(0.0), 0.0);
        prop_assert!((traj.velocity(0.0) - s.u0).abs() <= 1e-13 * (1.0 + s.u0.abs()));
    }
}

#[test]
fn massless_limit_is_balance_velocity() {
    let (r1, u1, r2, u2) = (4.0_f64, 1.0, 1.0, -1.0);
    let target = zero_mass_velocity(r1, u1, r2, u2).unwrap();
    let errors: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&m0| {
            let s = RiemannSetup::new(r1, u1, r2, u2, m0, 0.0, 0.0).unwrap();
            (solve_case1(&s).unwrap().velocity(1e-3) - target).abs()
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 1e-3);
}

#[test]
fn vanishing_right_density_approaches_one_sided_motion() {
    let thin = RiemannSetup::new(1.0, 1.0, 1e-8, -1.0, 1.0, 0.0, 0.0).unwrap();
    let empty = RiemannSetup { rho_right: 0.0, ..thin };
    let a = solve_case1(&thin).unwrap();
    let (b, _) = solve_case2(&empty).unwrap();
    for t in grid(10.0, 1000) {
        assert!((a.position(t) - b.position(t)).abs() <= 1e-3, "t={t}");
    }
}
