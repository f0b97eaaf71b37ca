#![allow(dead_code)]

use delta_piston::{CaseTag, RiemannSetup};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const CASES: [CaseTag; 6] = [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3, CaseTag::Case4, CaseTag::Case5, CaseTag::Case6];

/// Places three sorted velocities `a < b < c` into the ordering of `case`.
pub fn setup_for_case(case: CaseTag, rho1: f64, rho2: f64, m0: f64, mut u: [f64; 3]) -> RiemannSetup<f64> {
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let [a, b, c] = u;
    let (u1, u0, u2) = match case {
        CaseTag::Case1 => (c, b, a),
        CaseTag::Case2 => (b, a, c),
        CaseTag::Case3 => (c, a, b),
        CaseTag::Case4 => (a, c, b),
        CaseTag::Case5 => (b, c, a),
        CaseTag::Case6 => (a, b, c),
    };
    RiemannSetup::new(rho1, u1, rho2, u2, m0, u0, 0.0).unwrap()
}

/// Three velocities in `[-5, 5]` separated by at least `gap`.
pub fn separated(u: [f64; 3], gap: f64) -> bool {
    let mut s = u;
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s[1] - s[0] >= gap && s[2] - s[1] >= gap
}

pub fn random_setup(rng: &mut ChaCha8Rng, case: CaseTag) -> RiemannSetup<f64> {
    loop {
        let u = [rng.gen_range(-5.0..=5.0), rng.gen_range(-5.0..=5.0), rng.gen_range(-5.0..=5.0)];
        if !separated(u, 1e-3) {
            continue;
        }
        let rho1 = rng.gen_range(0.1..=10.0);
        let rho2 = rng.gen_range(0.1..=10.0);
        let m0 = rng.gen_range(0.1..=10.0);
        return setup_for_case(case, rho1, rho2, m0, u);
    }
}

/// Largest scaled deviation `|a - b| / (1 + |b|)` over a grid on `[0, t_end]`.
pub fn max_scaled_gap(a: impl Fn(f64) -> f64, b: impl Fn(f64) -> f64, t_end: f64, n: usize) -> f64 {
    (0..=n).map(|i| t_end * i as f64 / n as f64).map(|t| (a(t) - b(t)).abs() / (1.0 + b(t).abs())).fold(0.0, f64::max)
}
