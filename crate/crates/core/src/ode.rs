//! Momentum-balance integration of the piston path.
//!
//! The first-order form integrates `x1' = N / D` where `D` is the total mass
//! carried by the piston and `N` its momentum; the second-order form
//! integrates Newton's law for the same system. Both use an adaptive
//! Dormand-Prince 5(4) pair. Faces that start behind a receding gas front are
//! watched with a catch-up event function and switch to accretion when the
//! front is reached.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{classify, RiemannSetup};
use crate::scalar::Real;
use crate::trajectory::{hermite, two_sided_limit, Contact, DenseNode, Side, Trajectory};

/// Gas state adjacent to one piston face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NearState<T> {
    Vacuum,
    Gas { rho: T, u: T },
}

impl<T: Real> NearState<T> {
    /// `(rho, u)` with `rho = 0` for vacuum.
    pub fn rho_u(&self) -> (T, T) {
        match *self {
            NearState::Vacuum => (T::zero(), T::zero()),
            NearState::Gas { rho, u } => (rho, u),
        }
    }

    pub fn is_vacuum(&self) -> bool {
        matches!(self, NearState::Vacuum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearStates<T> {
    pub left: NearState<T>,
    pub right: NearState<T>,
}

impl<T: Real> NearStates<T> {
    pub fn get(&self, side: Side) -> NearState<T> {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeForm {
    #[default]
    FirstOrderMomentum,
    SecondOrderNewton,
}

/// Setup plus the current accretion regime on each face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeProblem<T> {
    pub setup: RiemannSetup<T>,
    pub near: NearStates<T>,
    pub form: OdeForm,
}

impl<T: Real> OdeProblem<T> {
    /// Problem at `t = 0`: a face accretes from the start when its gas moves
    /// toward it, or keeps pace with it while the other side pushes back.
    pub fn new(setup: &RiemannSetup<T>, form: OdeForm) -> Result<Self> {
        setup.validate()?;
        let s = setup.normalized();
        let left_pushes = s.rho_left > T::zero() && s.u_left > s.u0;
        let right_pushes = s.rho_right > T::zero() && s.u_right < s.u0;
        let left = s.rho_left > T::zero() && (left_pushes || (s.u_left == s.u0 && right_pushes));
        let right = s.rho_right > T::zero() && (right_pushes || (s.u_right == s.u0 && left_pushes));
        let gas = |on: bool, rho, u| if on { NearState::Gas { rho, u } } else { NearState::Vacuum };
        Ok(Self {
            setup: s,
            near: NearStates { left: gas(left, s.rho_left, s.u_left), right: gas(right, s.rho_right, s.u_right) },
            form,
        })
    }

    /// Total mass `D(t, x1)` carried by the piston.
    pub fn denominator(&self, x1: T, t: T) -> T {
        let (r1, u1) = self.near.left.rho_u();
        let (r2, u2) = self.near.right.rho_u();
        r1 * u1 * t - r1 * x1 + self.setup.m0 - r2 * u2 * t + r2 * x1
    }

    /// Total momentum `N(t, x1)` carried by the piston.
    pub fn numerator(&self, x1: T, t: T) -> T {
        let (r1, u1) = self.near.left.rho_u();
        let (r2, u2) = self.near.right.rho_u();
        r1 * u1 * u1 * t - r1 * u1 * x1 - r2 * u2 * u2 * t + r2 * u2 * x1 + self.setup.m0 * self.setup.u0
    }

    fn checked_denominator(&self, x1: T, t: T) -> Result<T> {
        let d = self.denominator(x1, t);
        let m0 = self.setup.m0;
        let vanished = if m0 > T::zero() { d.abs() < T::lit(1e-12) * m0 } else { d <= T::zero() };
        if vanished || !d.is_finite() {
            return Err(Error::DenominatorVanished { t: t.as_f64(), value: d.as_f64() });
        }
        Ok(d)
    }

    fn front(&self, side: Side) -> Option<T> {
        match (side, self.near.get(side)) {
            (Side::Left, NearState::Vacuum) if self.setup.rho_left > T::zero() => Some(self.setup.u_left),
            (Side::Right, NearState::Vacuum) if self.setup.rho_right > T::zero() => Some(self.setup.u_right),
            _ => None,
        }
    }

    /// Catch-up event function; crosses zero upward when the face reaches the front.
    fn gap(&self, side: Side, x1: T, t: T) -> T {
        let u = self.front(side).unwrap_or_else(T::zero);
        match side {
            Side::Left => u * t - x1,
            Side::Right => x1 - u * t,
        }
    }

    fn switch_on(&mut self, side: Side) {
        let s = &self.setup;
        match side {
            Side::Left => self.near.left = NearState::Gas { rho: s.rho_left, u: s.u_left },
            Side::Right => self.near.right = NearState::Gas { rho: s.rho_right, u: s.u_right },
        }
    }
}

/// Piston velocity from momentum balance.
pub fn momentum_rhs<T: Real>(x1: T, t: T, problem: &OdeProblem<T>) -> Result<T> {
    let d = problem.checked_denominator(x1, t)?;
    Ok(problem.numerator(x1, t) / d)
}

/// Piston acceleration from Newton's law: net momentum flux over carried mass.
pub fn newton_rhs<T: Real>(x1: T, v: T, t: T, problem: &OdeProblem<T>) -> Result<T> {
    let d = problem.checked_denominator(x1, t)?;
    let (r1, u1) = problem.near.left.rho_u();
    let (r2, u2) = problem.near.right.rho_u();
    Ok((r1 * (u1 - v) * (u1 - v) - r2 * (u2 - v) * (u2 - v)) / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_step: T,
    pub event_tol: T,
    pub t_end: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-12),
            max_step: T::lit(0.1),
            event_tol: T::lit(1e-10),
            t_end: T::lit(10.0),
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("event_tol", self.event_tol),
            ("t_end", self.t_end),
        ] {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(Error::Config(format!("integrator.{name} must be positive and finite ({value})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatchUpEvent<T> {
    pub time: T,
    pub side: Side,
    pub pre_velocity: T,
    pub post_velocity: T,
}

/// Events as a JSON array of `{t, side}` objects.
pub fn events_json<T: Real>(events: &[CatchUpEvent<T>]) -> String {
    let list: Vec<_> = events.iter().map(|e| serde_json::json!({ "t": e.time.as_f64(), "side": e.side.as_str() })).collect();
    serde_json::to_string_pretty(&list).expect("plain JSON values serialize")
}

/// Integrates with the first-order momentum form.
pub fn integrate<T: Real>(
    setup: &RiemannSetup<T>,
    config: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, Vec<CatchUpEvent<T>>)> {
    integrate_problem(OdeProblem::new(setup, OdeForm::FirstOrderMomentum)?, config)
}

/// Integrates from the regime encoded in `problem`.
pub fn integrate_problem<T: Real>(
    problem: OdeProblem<T>,
    config: &IntegratorConfig<T>,
) -> Result<(Trajectory<T>, Vec<CatchUpEvent<T>>)> {
    config.validate()?;
    let case = classify(&problem.setup)?;
    let s = problem.setup;
    let run = match problem.form {
        OdeForm::FirstOrderMomentum => drive::<T, 1>(
            problem,
            config,
            |p, t, y| Ok([momentum_rhs(y[0], t, p)?]),
            |_, _, _, k| k[0],
            |x, v| [x, v][..1].try_into().expect("length 1"),
        )?,
        OdeForm::SecondOrderNewton => {
            drive::<T, 2>(problem, config, |p, t, y| Ok([y[1], newton_rhs(y[0], y[1], t, p)?]), |_, _, y, _| y[1], |x, v| [x, v])?
        }
    };

    let final_near = run.near;
    let limit = match (final_near.left, final_near.right) {
        (NearState::Gas { rho: r1, u: u1 }, NearState::Gas { rho: r2, u: u2 }) => two_sided_limit(r1, u1, r2, u2),
        (NearState::Gas { u, .. }, NearState::Vacuum) | (NearState::Vacuum, NearState::Gas { u, .. }) => u,
        (NearState::Vacuum, NearState::Vacuum) => s.u0,
    };
    let trajectory = Trajectory::from_dense(case, s.l, run.contact, run.nodes)
        .with_splice_time(run.events.first().map(|e| e.time))
        .with_limit_velocity(Some(limit));
    Ok((trajectory, run.events))
}

struct Run<T> {
    nodes: Vec<DenseNode<T>>,
    events: Vec<CatchUpEvent<T>>,
    contact: Contact<T>,
    near: NearStates<T>,
}

const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth- minus fourth-order weights
const E: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

struct Step<T, const N: usize> {
    y: [T; N],
    k_end: [T; N],
    err: [T; N],
}

fn dopri_step<T: Real, const N: usize, P, F>(p: &P, f: &F, t: T, y: &[T; N], k1: &[T; N], h: T) -> Result<Step<T, N>>
where
    F: Fn(&P, T, &[T; N]) -> Result<[T; N]>,
{
    let mut k = [[T::zero(); N]; 7];
    k[0] = *k1;
    let mut y_new = *y;
    for stage in 0..6 {
        let mut ys = *y;
        for (i, yi) in ys.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                acc += T::lit(A[stage][j]) * kj[i];
            }
            *yi += h * acc;
        }
        k[stage + 1] = f(p, t + T::lit(C[stage]) * h, &ys)?;
        if stage == 5 {
            y_new = ys;
        }
    }
    let mut err = [T::zero(); N];
    for (i, e) in err.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (j, kj) in k.iter().enumerate() {
            acc += T::lit(E[j]) * kj[i];
        }
        *e = h * acc;
    }
    Ok(Step { y: y_new, k_end: k[6], err })
}

fn error_norm<T: Real, const N: usize>(step: &Step<T, N>, y: &[T; N], config: &IntegratorConfig<T>) -> T {
    let mut worst = T::zero();
    for ((y0, y1), e) in y.iter().zip(&step.y).zip(&step.err) {
        let scale = config.abs_tol + config.rel_tol * y0.abs().max(y1.abs());
        worst = worst.max((*e / scale).abs());
    }
    worst
}

/// Adaptive loop shared by both forms.
///
/// `velocity(problem, t, y, k)` extracts `x1'` from the state and its
/// derivative; `state(x, v)` builds a state from position and velocity.
fn drive<T: Real, const N: usize>(
    mut problem: OdeProblem<T>,
    config: &IntegratorConfig<T>,
    rhs: impl Fn(&OdeProblem<T>, T, &[T; N]) -> Result<[T; N]>,
    velocity: impl Fn(&OdeProblem<T>, T, &[T; N], &[T; N]) -> T,
    state: impl Fn(T, T) -> [T; N],
) -> Result<Run<T>> {
    let s = problem.setup;
    let t_end = config.t_end;
    let mut contact =
        Contact { left: (!problem.near.left.is_vacuum()).then(T::zero), right: (!problem.near.right.is_vacuum()).then(T::zero) };
    let mut events = Vec::new();
    let accel = |p: &OdeProblem<T>, t: T, x: T, v: T| newton_rhs(x, v, t, p);

    if problem.near.left.is_vacuum() && problem.near.right.is_vacuum() {
        let fronts = [Side::Left, Side::Right].iter().any(|&side| {
            problem.front(side).is_some_and(|u| match side {
                Side::Left => u > s.u0,
                Side::Right => u < s.u0,
            })
        });
        if !fronts {
            let nodes = vec![
                DenseNode { t: T::zero(), x: T::zero(), v: s.u0, a: T::zero() },
                DenseNode { t: t_end, x: s.u0 * t_end, v: s.u0, a: T::zero() },
            ];
            return Ok(Run { nodes, events, contact, near: problem.near });
        }
    }

    let mut nodes = Vec::new();
    let mut t = T::zero();
    let mut y = state(T::zero(), s.u0);
    if s.m0 == T::zero() {
        nodes.push(DenseNode { t, x: T::zero(), v: s.u0, a: T::zero() });
        // D vanishes at t = 0; the massless piston moves uniformly, so start just after.
        t = config.event_tol.min(t_end * T::lit(1e-3));
        y = state(s.u0 * t, s.u0);
    }
    let mut k = rhs(&problem, t, &y)?;
    let v0 = velocity(&problem, t, &y, &k);
    nodes.push(DenseNode { t, x: y[0], v: v0, a: accel(&problem, t, y[0], v0)? });

    let mut h = {
        let scale = config.abs_tol + config.rel_tol * s.velocity_scale();
        let a0 = nodes.last().map_or(T::zero(), |n| n.a).abs();
        let guess = if a0 > T::zero() { (scale / a0).sqrt() } else { config.max_step };
        guess.min(config.max_step).min(t_end - t).max(T::lit(1e-12) * t_end)
    };
    let h_floor = |t: T| T::lit(1e-14) * t.abs().max(T::one());

    while t < t_end {
        for side in [Side::Left, Side::Right] {
            if problem.front(side).is_some() && problem.gap(side, y[0], t) > config.event_tol.max(h_floor(t)) {
                return Err(Error::EventNotBracketed { t: t.as_f64() });
            }
        }
        h = h.min(t_end - t).min(config.max_step);
        if h < h_floor(t) && t + h < t_end {
            return Err(Error::StepSizeUnderflow { t: t.as_f64(), h: h.as_f64() });
        }
        let step = dopri_step(&problem, &rhs, t, &y, &k, h)?;
        let err = error_norm(&step, &y, config);
        if !err.is_finite() || err > T::one() {
            let factor = if err.is_finite() { (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)) } else { T::lit(0.2) };
            h = h * factor;
            if h < h_floor(t) {
                return Err(Error::StepSizeUnderflow { t: t.as_f64(), h: h.as_f64() });
            }
            continue;
        }

        let t_new = if t_end - (t + h) <= h_floor(t_end) { t_end } else { t + h };
        let (x0, v0) = (y[0], velocity(&problem, t, &y, &k));
        let (x1, v1) = (step.y[0], velocity(&problem, t_new, &step.y, &step.k_end));

        let crossing = [Side::Left, Side::Right]
            .into_iter()
            .filter(|&side| problem.front(side).is_some())
            .filter(|&side| problem.gap(side, x0, t) < T::zero() && problem.gap(side, x1, t_new) >= T::zero())
            .map(|side| {
                let te = bracket(&problem, side, config.event_tol, (t, x0, v0), (t_new, x1, v1));
                (te, side)
            })
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite event times"));

        if let Some((mut te, side)) = crossing {
            let advance = |te: T| -> Result<([T; N], [T; N])> {
                if te > t {
                    let redo = dopri_step(&problem, &rhs, t, &y, &k, te - t)?;
                    Ok((redo.y, redo.k_end))
                } else {
                    Ok((y, k))
                }
            };
            let (mut y_e, mut k_e) = advance(te)?;
            for _ in 0..4 {
                let Some(next) = newton_polish(&problem, side, te, y_e[0]) else { break };
                let next = next.max(t).min(t_new);
                let moved = (next - te).abs();
                te = next;
                (y_e, k_e) = advance(te)?;
                if moved <= config.event_tol {
                    break;
                }
            }
            let pre_v = velocity(&problem, te, &y_e, &k_e);
            nodes.push(DenseNode { t: te, x: y_e[0], v: pre_v, a: accel(&problem, te, y_e[0], pre_v)? });
            problem.switch_on(side);
            match side {
                Side::Left => contact.left = Some(te),
                Side::Right => contact.right = Some(te),
            }
            y = state(y_e[0], pre_v);
            k = rhs(&problem, te, &y)?;
            let post_v = velocity(&problem, te, &y, &k);
            nodes.push(DenseNode { t: te, x: y[0], v: post_v, a: accel(&problem, te, y[0], post_v)? });
            events.push(CatchUpEvent { time: te, side, pre_velocity: pre_v, post_velocity: post_v });
            t = te;
            continue;
        }

        t = t_new;
        y = step.y;
        k = step.k_end;
        nodes.push(DenseNode { t, x: x1, v: v1, a: accel(&problem, t, x1, v1)? });
        let factor = if err > T::zero() { T::lit(0.9) * err.powf(T::lit(-0.2)) } else { T::lit(5.0) };
        h = h * factor.min(T::lit(5.0)).max(T::lit(0.2));
    }
    Ok(Run { nodes, events, contact, near: problem.near })
}

/// Bisection of the catch-up function on the step's Hermite interpolant.
fn bracket<T: Real>(problem: &OdeProblem<T>, side: Side, tol: T, a: (T, T, T), b: (T, T, T)) -> T {
    let (t0, x0, v0) = a;
    let (t1, x1, v1) = b;
    let h = t1 - t0;
    let x_at = |t: T| hermite(x0, v0, x1, v1, h, (t - t0) / h);
    let (mut lo, mut hi) = (t0, t1);
    while hi - lo > tol {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if problem.gap(side, x_at(mid), mid) >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Newton update of an event time from the integrated state at `te`.
fn newton_polish<T: Real>(problem: &OdeProblem<T>, side: Side, te: T, x: T) -> Option<T> {
    let g = problem.gap(side, x, te);
    let u = problem.front(side)?;
    let v = momentum_rhs(x, te, problem).ok()?;
    let slope = match side {
        Side::Left => u - v,
        Side::Right => v - u,
    };
    (slope > T::zero()).then(|| te - g / slope)
}
