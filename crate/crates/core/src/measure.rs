//! Measure-valued solution rebuilt from a piston trajectory.
//!
//! Away from the piston the density and momentum are piecewise constant (gas
//! or vacuum). The piston itself carries a Dirac atom whose mass `alpha`,
//! momentum `wm` and momentum flux `wn` follow from the trajectory by
//! integrating the generalized Rankine-Hugoniot relations. Besides the
//! weights and face forces, this module checks the entropy inequalities and
//! evaluates weak-form residuals for the Cauchy problem (piston collapsed to
//! a point) and for the one-sided boundary value problems.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::RiemannSetup;
use crate::ode::{newton_rhs, NearState, NearStates, OdeForm, OdeProblem};
use crate::quadrature::GaussLegendre;
use crate::scalar::{format_number, Real};
use crate::trajectory::{Side, Trajectory};

/// Coordinates used for region output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    /// Piston collapsed to the point `x1`; the right gas is shifted by `-l`.
    Riemann,
    /// Physical coordinates with the slab `[x1, x1 + l]`.
    #[default]
    Piston,
}

/// Deliberate corruptions used to check that the residuals detect errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Faults<T> {
    pub alpha_scale: T,
    pub zero_forces: bool,
}

impl<T: Real> Default for Faults<T> {
    fn default() -> Self {
        Self { alpha_scale: T::one(), zero_forces: false }
    }
}

/// All delta-shock weights at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSample<T> {
    pub t: T,
    pub x1: T,
    pub v: T,
    pub a: T,
    pub alpha: T,
    pub wm: T,
    pub wn: T,
    pub wp1: T,
    pub wp2: T,
    pub m1: T,
    pub m2: T,
}

/// Delta-shock weights of a trajectory, evaluated lazily in `t`.
#[derive(Debug, Clone, Copy)]
pub struct DeltaWeights<'a, T> {
    trajectory: &'a Trajectory<T>,
    setup: RiemannSetup<T>,
    faults: Faults<T>,
}

pub fn delta_weights<'a, T: Real>(trajectory: &'a Trajectory<T>, setup: &RiemannSetup<T>) -> DeltaWeights<'a, T> {
    DeltaWeights { trajectory, setup: setup.normalized(), faults: Faults::default() }
}

/// `(wp1, wp2)`: forces exerted by the gas on the left and right faces.
pub fn piston_forces<T: Real>(trajectory: &Trajectory<T>, setup: &RiemannSetup<T>, t: T) -> (T, T) {
    let w = delta_weights(trajectory, setup);
    (w.wp1(t), w.wp2(t))
}

impl<'a, T: Real> DeltaWeights<'a, T> {
    pub fn with_faults(mut self, faults: Faults<T>) -> Self {
        self.faults = faults;
        self
    }

    pub fn trajectory(&self) -> &'a Trajectory<T> {
        self.trajectory
    }

    /// Normalized setup (massless pistons carry their effective velocity).
    pub fn setup(&self) -> &RiemannSetup<T> {
        &self.setup
    }

    pub fn near(&self, t: T) -> NearStates<T> {
        self.trajectory.near_states(&self.setup, t)
    }

    fn effective(&self, t: T) -> (T, T, T, T) {
        let near = self.near(t);
        let (r1, u1) = near.left.rho_u();
        let (r2, u2) = near.right.rho_u();
        (r1, u1, r2, u2)
    }

    /// Mass accreted on the left face.
    pub fn m1(&self, t: T) -> T {
        let (r1, u1, _, _) = self.effective(t);
        r1 * (u1 * t - self.trajectory.position(t))
    }

    /// Mass accreted on the right face.
    pub fn m2(&self, t: T) -> T {
        let (_, _, r2, u2) = self.effective(t);
        r2 * (self.trajectory.position(t) - u2 * t)
    }

    pub fn alpha(&self, t: T) -> T {
        self.faults.alpha_scale * (self.setup.m0 + self.m1(t) + self.m2(t))
    }

    pub fn wm(&self, t: T) -> T {
        let (r1, u1, r2, u2) = self.effective(t);
        let x = self.trajectory.position(t);
        self.setup.m0 * self.setup.u0 + r1 * u1 * (u1 * t - x) + r2 * u2 * (x - u2 * t)
    }

    pub fn wn(&self, t: T) -> T {
        self.wm(t) * self.trajectory.velocity(t)
    }

    /// `x1''` from Newton's law on the trajectory state; zero where the
    /// carried mass vanishes.
    pub fn acceleration(&self, t: T) -> T {
        let problem = OdeProblem { setup: self.setup, near: self.near(t), form: OdeForm::SecondOrderNewton };
        let x = self.trajectory.position(t);
        let v = self.trajectory.velocity(t);
        newton_rhs(x, v, t, &problem).unwrap_or_else(|_| T::zero())
    }

    pub fn wp1(&self, t: T) -> T {
        if self.faults.zero_forces {
            return T::zero();
        }
        let (r1, u1, _, _) = self.effective(t);
        let (x, v, a) = (self.trajectory.position(t), self.trajectory.velocity(t), self.acceleration(t));
        a * (r1 * x - r1 * u1 * t) + v * (-T::two() * r1 * u1 + r1 * v) + r1 * u1 * u1
    }

    pub fn wp2(&self, t: T) -> T {
        if self.faults.zero_forces {
            return T::zero();
        }
        let (_, _, r2, u2) = self.effective(t);
        let (x, v, a) = (self.trajectory.position(t), self.trajectory.velocity(t), self.acceleration(t));
        a * (r2 * x - r2 * u2 * t) + v * (-T::two() * r2 * u2 + r2 * v) + r2 * u2 * u2
    }

    pub fn sample(&self, t: T) -> WeightSample<T> {
        WeightSample {
            t,
            x1: self.trajectory.position(t),
            v: self.trajectory.velocity(t),
            a: self.acceleration(t),
            alpha: self.alpha(t),
            wm: self.wm(t),
            wn: self.wn(t),
            wp1: self.wp1(t),
            wp2: self.wp2(t),
            m1: self.m1(t),
            m2: self.m2(t),
        }
    }

    /// Rate of change of `alpha` predicted by the Rankine-Hugoniot relation.
    pub fn alpha_rate(&self, t: T) -> T {
        let (r1, u1, r2, u2) = self.effective(t);
        let v = self.trajectory.velocity(t);
        self.faults.alpha_scale * (r1 * (u1 - v) + r2 * (v - u2))
    }

    /// `|central difference of alpha - alpha_rate|` for each step in `hs`.
    pub fn rh_defects(&self, t: T, hs: &[T]) -> Vec<T> {
        let rate = self.alpha_rate(t);
        hs.iter().map(|&h| ((self.alpha(t + h) - self.alpha(t - h)) / (T::two() * h) - rate).abs()).collect()
    }
}

/// Outcome of the over-compression check along a time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    pub pass: bool,
    /// Smallest margin seen; `None` if every sampled time was vacuous.
    pub worst_margin: Option<f64>,
    pub worst_t: Option<f64>,
    pub checked: usize,
}

/// Checks `u1 >= x1' >= u2` against the gas touching each face. A face
/// facing a vacuum gap only has to stay behind the receding gas front.
pub fn entropy_check<T: Real>(trajectory: &Trajectory<T>, setup: &RiemannSetup<T>, grid: &[T]) -> EntropyReport {
    let s = setup.normalized();
    let tol = T::lit(1e-12) * s.velocity_scale();
    let mut worst: Option<(T, T)> = None;
    let mut checked = 0;
    for &t in grid {
        let near = trajectory.near_states(&s, t);
        let x = trajectory.position(t);
        let v = trajectory.velocity(t);
        let mut margins = Vec::with_capacity(2);
        match near.left {
            NearState::Gas { u, .. } => margins.push(u - v),
            NearState::Vacuum if s.rho_left > T::zero() => margins.push(x - s.u_left * t),
            NearState::Vacuum => {}
        }
        match near.right {
            NearState::Gas { u, .. } => margins.push(v - u),
            NearState::Vacuum if s.rho_right > T::zero() => margins.push(s.u_right * t - x),
            NearState::Vacuum => {}
        }
        for m in margins {
            checked += 1;
            if worst.is_none_or(|(w, _)| m < w) {
                worst = Some((m, t));
            }
        }
    }
    EntropyReport {
        pass: worst.is_none_or(|(m, _)| m >= -tol),
        worst_margin: worst.map(|(m, _)| m.as_f64()),
        worst_t: worst.map(|(_, t)| t.as_f64()),
        checked,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RegionState<T> {
    Constant { rho: T, u: T },
    Vacuum,
}

/// Interval `(lo, hi)` of constant state; ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region<T> {
    pub lo: T,
    pub hi: T,
    pub state: RegionState<T>,
}

/// What the field looks like at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointSample<T> {
    Constant { rho: T, u: T },
    Vacuum,
    Atom { alpha: T, velocity: T },
}

/// Piecewise-constant gas plus one atom riding on the piston.
#[derive(Debug, Clone, Copy)]
pub struct MeasureField<'a, T> {
    weights: DeltaWeights<'a, T>,
    view: View,
    locate_tol: T,
}

impl<'a, T: Real> MeasureField<'a, T> {
    pub fn new(trajectory: &'a Trajectory<T>, setup: &RiemannSetup<T>, view: View) -> Self {
        Self { weights: delta_weights(trajectory, setup), view, locate_tol: T::lit(1e-9) }
    }

    pub fn with_faults(mut self, faults: Faults<T>) -> Self {
        self.weights = self.weights.with_faults(faults);
        self
    }

    /// Relative tolerance for hitting the atom: `|x - x1| <= tol (1 + |x|)`.
    pub fn with_locate_tol(mut self, tol: T) -> Self {
        self.locate_tol = tol;
        self
    }

    pub fn view(&self) -> View {
        self.view
    }

    pub fn weights(&self) -> &DeltaWeights<'a, T> {
        &self.weights
    }

    pub fn trajectory(&self) -> &'a Trajectory<T> {
        self.weights.trajectory
    }

    pub fn setup(&self) -> &RiemannSetup<T> {
        &self.weights.setup
    }

    fn slab(&self, view: View) -> T {
        match view {
            View::Riemann => T::zero(),
            View::Piston => self.weights.setup.l,
        }
    }

    /// Regions left and right of the piston, ordered, in the field's view.
    pub fn regions(&self, t: T) -> (Vec<Region<T>>, Vec<Region<T>>) {
        self.regions_in(self.view, t)
    }

    fn regions_in(&self, view: View, t: T) -> (Vec<Region<T>>, Vec<Region<T>>) {
        let s = &self.weights.setup;
        let near = self.weights.near(t);
        let x1 = self.trajectory().position(t);
        let x2 = x1 + self.slab(view);
        let (ninf, inf) = (T::neg_infinity(), T::infinity());
        let mut left = Vec::with_capacity(2);
        match near.left {
            NearState::Gas { rho, u } => left.push(Region { lo: ninf, hi: x1, state: RegionState::Constant { rho, u } }),
            NearState::Vacuum if s.rho_left > T::zero() => {
                let front = (s.u_left * t).min(x1);
                left.push(Region { lo: ninf, hi: front, state: RegionState::Constant { rho: s.rho_left, u: s.u_left } });
                left.push(Region { lo: front, hi: x1, state: RegionState::Vacuum });
            }
            NearState::Vacuum => left.push(Region { lo: ninf, hi: x1, state: RegionState::Vacuum }),
        }
        let mut right = Vec::with_capacity(2);
        match near.right {
            NearState::Gas { rho, u } => right.push(Region { lo: x2, hi: inf, state: RegionState::Constant { rho, u } }),
            NearState::Vacuum if s.rho_right > T::zero() => {
                let front = (s.u_right * t + self.slab(view)).max(x2);
                right.push(Region { lo: x2, hi: front, state: RegionState::Vacuum });
                right.push(Region { lo: front, hi: inf, state: RegionState::Constant { rho: s.rho_right, u: s.u_right } });
            }
            NearState::Vacuum => right.push(Region { lo: x2, hi: inf, state: RegionState::Vacuum }),
        }
        (left, right)
    }

    /// Classifies `(x, t)`. In the piston view the whole slab counts as the atom.
    pub fn sample(&self, x: T, t: T) -> PointSample<T> {
        let x1 = self.trajectory().position(t);
        let x2 = x1 + self.slab(self.view);
        let tol = self.locate_tol * (T::one() + x.abs());
        if x >= x1 - tol && x <= x2 + tol {
            return PointSample::Atom { alpha: self.weights.alpha(t), velocity: self.trajectory().velocity(t) };
        }
        let (left, right) = self.regions(t);
        let region = if x < x1 { left.iter().rev().find(|r| x >= r.lo) } else { right.iter().find(|r| x <= r.hi) };
        match region.map(|r| r.state) {
            Some(RegionState::Constant { rho, u }) => PointSample::Constant { rho, u },
            _ => PointSample::Vacuum,
        }
    }

    /// Snapshot `{t, regions, atom}`; unbounded ends are `null`.
    pub fn snapshot(&self, t: T) -> Value {
        let end = |v: T| if v.is_finite() { json!(v.as_f64()) } else { Value::Null };
        let (left, right) = self.regions(t);
        let regions: Vec<Value> = left
            .iter()
            .chain(&right)
            .map(|r| match r.state {
                RegionState::Constant { rho, u } => {
                    json!({"lo": end(r.lo), "hi": end(r.hi), "rho": rho.as_f64(), "u": u.as_f64()})
                }
                RegionState::Vacuum => json!({"lo": end(r.lo), "hi": end(r.hi), "vacuum": true}),
            })
            .collect();
        let w = &self.weights;
        json!({
            "t": t.as_f64(),
            "regions": regions,
            "atom": {
                "x": self.trajectory().position(t).as_f64(),
                "alpha": w.alpha(t).as_f64(),
                "wm": w.wm(t).as_f64(),
                "v": self.trajectory().velocity(t).as_f64(),
            }
        })
    }
}

/// Tensor-product bump `b((x - x0) / sx) b((t - t0) / st)` with
/// `b(s) = (1 - s^2)^3` on `|s| < 1`. It is C² and vanishes with its gradient
/// on the boundary of its support rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction<T> {
    pub x0: T,
    pub t0: T,
    pub sx: T,
    pub st: T,
}

fn bump<T: Real>(s: T) -> (T, T) {
    if s.abs() >= T::one() {
        return (T::zero(), T::zero());
    }
    let q = T::one() - s * s;
    (q * q * q, -T::lit(6.0) * s * q * q)
}

impl<T: Real> TestFunction<T> {
    pub fn new(x0: T, t0: T, sx: T, st: T) -> Self {
        assert!(sx > T::zero() && st > T::zero(), "test function widths must be positive");
        Self { x0, t0, sx, st }
    }

    /// `(x_lo, x_hi, t_lo, t_hi)`.
    pub fn support(&self) -> (T, T, T, T) {
        (self.x0 - self.sx, self.x0 + self.sx, self.t0 - self.st, self.t0 + self.st)
    }

    /// `(phi, phi_x, phi_t)`.
    pub fn eval(&self, x: T, t: T) -> (T, T, T) {
        let (bx, dbx) = bump((x - self.x0) / self.sx);
        let (bt, dbt) = bump((t - self.t0) / self.st);
        (bx * bt, dbx / self.sx * bt, bx * dbt / self.st)
    }

    pub fn value(&self, x: T, t: T) -> T {
        self.eval(x, t).0
    }
}

/// Mass and momentum residuals of a weak formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual<T> {
    pub mass: T,
    pub momentum: T,
}

impl<T: Real> Residual<T> {
    pub fn max_abs(&self) -> T {
        self.mass.abs().max(self.momentum.abs())
    }
}

/// Which part of the plane a residual integrates over.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Domain {
    Cauchy,
    Ibvp(Side),
}

/// Residuals of the Cauchy problem with the piston collapsed to a point.
pub fn weak_residual_cauchy<T: Real>(field: &MeasureField<'_, T>, phi: &TestFunction<T>, order: usize) -> Result<Residual<T>> {
    weak_residual(field, Domain::Cauchy, phi, order)
}

/// Residuals of the boundary value problem on one side of the piston,
/// including the face force as a boundary source.
pub fn weak_residual_ibvp<T: Real>(
    side: Side,
    field: &MeasureField<'_, T>,
    phi: &TestFunction<T>,
    order: usize,
) -> Result<Residual<T>> {
    weak_residual(field, Domain::Ibvp(side), phi, order)
}

fn weak_residual<T: Real>(
    field: &MeasureField<'_, T>,
    domain: Domain,
    phi: &TestFunction<T>,
    order: usize,
) -> Result<Residual<T>> {
    let traj = field.trajectory();
    let (x_lo, x_hi, t_lo, t_hi) = phi.support();
    if let Some(h) = traj.horizon() {
        if t_hi > h {
            return Err(Error::UnresolvedSupport { t_lo: t_lo.as_f64(), t_hi: t_hi.as_f64(), t_max: h.as_f64() });
        }
    }
    let rule = GaussLegendre::<T>::new(order);
    let s = field.weights.setup;
    let w = &field.weights;
    let view = match domain {
        Domain::Cauchy => View::Riemann,
        Domain::Ibvp(_) => View::Piston,
    };
    let mut mass = T::zero();
    let mut mom = T::zero();

    let ta = t_lo.max(T::zero());
    if t_hi > ta {
        for win in time_breaks(field, view, ta, t_hi, x_lo, x_hi).windows(2) {
            for (t, wt) in rule.mapped(win[0], win[1]) {
                let (left, right) = field.regions_in(view, t);
                let regions = match domain {
                    Domain::Cauchy => [left, right].concat(),
                    Domain::Ibvp(Side::Left) => left,
                    Domain::Ibvp(Side::Right) => right,
                };
                for r in &regions {
                    let RegionState::Constant { rho, u } = r.state else { continue };
                    let (lo, hi) = (r.lo.max(x_lo), r.hi.min(x_hi));
                    if hi <= lo {
                        continue;
                    }
                    for (x, wx) in rule.mapped(lo, hi) {
                        let (_, px, pt) = phi.eval(x, t);
                        let flux = pt + u * px;
                        mass += wt * wx * rho * flux;
                        mom += wt * wx * rho * u * flux;
                    }
                }
                let x1 = traj.position(t);
                let v = traj.velocity(t);
                match domain {
                    Domain::Cauchy => {
                        let (_, px, pt) = phi.eval(x1, t);
                        let wm = w.wm(t);
                        mass += wt * (w.alpha(t) * pt + wm * px);
                        mom += wt * (wm * pt + wm * v * px);
                    }
                    Domain::Ibvp(side) => {
                        let (face, m, force, sign) = match side {
                            Side::Left => (x1, w.m1(t), w.wp1(t), -T::one()),
                            Side::Right => (x1 + s.l, w.m2(t), w.wp2(t), T::one()),
                        };
                        let (p, px, pt) = phi.eval(face, t);
                        let a = w.faults.alpha_scale * m;
                        mass += wt * (a * pt + a * v * px);
                        mom += wt * (a * v * pt + a * v * v * px + sign * force * p);
                    }
                }
            }
        }
    }

    if t_lo < T::zero() && t_hi > T::zero() {
        let mut data = |lo: T, hi: T, rho: T, u: T| {
            let (lo, hi) = (lo.max(x_lo), hi.min(x_hi));
            if hi > lo && rho > T::zero() {
                let integral = rule.integrate(lo, hi, |x| phi.value(x, T::zero()));
                mass += rho * integral;
                mom += rho * u * integral;
            }
        };
        match domain {
            Domain::Cauchy => {
                data(T::neg_infinity(), T::zero(), s.rho_left, s.u_left);
                data(T::zero(), T::infinity(), s.rho_right, s.u_right);
                let p0 = phi.value(T::zero(), T::zero());
                mass += s.m0 * p0;
                mom += s.m0 * s.u0 * p0;
            }
            Domain::Ibvp(Side::Left) => data(T::neg_infinity(), T::zero(), s.rho_left, s.u_left),
            Domain::Ibvp(Side::Right) => data(s.l, T::infinity(), s.rho_right, s.u_right),
        }
    }
    Ok(Residual { mass, momentum: mom })
}

/// Subdivision of `[ta, tb]` at every time where the integrand loses
/// smoothness, including regime switches and path kinks. Times where a region
/// boundary crosses an edge of the x-support are added too.
fn time_breaks<T: Real>(field: &MeasureField<'_, T>, view: View, ta: T, tb: T, x_lo: T, x_hi: T) -> Vec<T> {
    let traj = field.trajectory();
    let s = &field.weights.setup;
    let offset = field.slab(view);
    let mut out = vec![ta, tb];
    let c = traj.contact();
    out.extend([c.left, c.right, traj.splice_time()].into_iter().flatten());
    out.extend(traj.breakpoints(ta, tb));
    for edge in [x_lo, x_hi] {
        for (u, off) in [(s.u_left, T::zero()), (s.u_right, offset)] {
            if u != T::zero() {
                out.push((edge - off) / u);
            }
        }
        for off in [T::zero(), offset] {
            out.extend(crossings(|t| traj.position(t) + off - edge, ta, tb));
        }
    }
    out.retain(|&t| t >= ta && t <= tb && t.is_finite());
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite break times"));
    out.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * T::lit(16.0) * (T::one() + b.abs()));
    out
}

/// Roots of `f` on `[a, b]` found by sampling and bisection.
fn crossings<T: Real>(f: impl Fn(T) -> T, a: T, b: T) -> Vec<T> {
    const SAMPLES: usize = 64;
    let mut roots = Vec::new();
    let step = (b - a) / T::lit(SAMPLES as f64);
    let mut t0 = a;
    let mut f0 = f(t0);
    for k in 1..=SAMPLES {
        let t1 = if k == SAMPLES { b } else { a + step * T::lit(k as f64) };
        let f1 = f(t1);
        if f0 == T::zero() {
            roots.push(t0);
        } else if f0 * f1 < T::zero() {
            let (mut lo, mut hi, mut flo) = (t0, t1, f0);
            for _ in 0..200 {
                let mid = (lo + hi) * T::half();
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = f(mid);
                if fm * flo > T::zero() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push((lo + hi) * T::half());
        }
        t0 = t1;
        f0 = f1;
    }
    roots
}

/// One line of a residual report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    pub phi_id: usize,
    pub x0: f64,
    pub t0: f64,
    pub order: usize,
    pub r_mass: f64,
    pub r_momentum: f64,
}

/// Cauchy residuals for every test function and quadrature order, in parallel.
pub fn residual_report<T: Real>(
    field: &MeasureField<'_, T>,
    phis: &[TestFunction<T>],
    orders: &[usize],
) -> Result<Vec<ResidualRow>> {
    let jobs: Vec<(usize, usize)> = (0..phis.len()).flat_map(|i| orders.iter().map(move |&o| (i, o))).collect();
    jobs.into_par_iter()
        .map(|(i, order)| {
            let phi = &phis[i];
            let r = weak_residual_cauchy(field, phi, order)?;
            Ok(ResidualRow {
                phi_id: i,
                x0: phi.x0.as_f64(),
                t0: phi.t0.as_f64(),
                order,
                r_mass: r.mass.as_f64(),
                r_momentum: r.momentum.as_f64(),
            })
        })
        .collect()
}

pub fn residual_csv(rows: &[ResidualRow]) -> String {
    let mut out = String::from("phi_id,x0,t0,order,r_mass,r_momentum\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.phi_id,
            format_number(r.x0),
            format_number(r.t0),
            r.order,
            format_number(r.r_mass),
            format_number(r.r_momentum)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::solve;
    use crate::trajectory::{Contact, Law, Piece};

    fn setup(r1: f64, u1: f64, r2: f64, u2: f64, m0: f64, u0: f64, l: f64) -> RiemannSetup<f64> {
        RiemannSetup::new(r1, u1, r2, u2, m0, u0, l).unwrap()
    }

    #[test]
    fn symmetric_case1_weights() {
        let s = setup(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0);
        let traj = solve(&s).unwrap();
        let w = delta_weights(&traj, &s);
        for t in [0.0, 0.5, 3.0, 10.0] {
            assert!((w.alpha(t) - (2.0 * t + 1.0)).abs() < 1e-12);
            assert!(w.wm(t).abs() < 1e-12);
            let (wp1, wp2) = piston_forces(&traj, &s, t);
            assert!((wp1 - 1.0).abs() < 1e-12 && (wp2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_weights() {
        let s = setup(1.0, 1.0, 1.0, 2.0, 1.0, 0.0, 0.0);
        let traj = solve(&s).unwrap();
        let w = delta_weights(&traj, &s);
        assert!((w.alpha(4.0) - 3.0).abs() < 1e-12);
        assert!((w.wm(4.0) - 2.0).abs() < 1e-12);
        for t in [0.0, 1.0, 7.5] {
            assert_eq!(w.wp2(t), 0.0);
            assert!(w.wp1(t) > 0.0);
        }
    }

    #[test]
    fn uniform_motion_has_no_forces() {
        let s = setup(1.0, -1.0, 2.0, 1.0, 1.0, 0.0, 0.0);
        let traj = solve(&s).unwrap();
        assert_eq!(piston_forces(&traj, &s, 2.0), (0.0, 0.0));
    }

    #[test]
    fn initial_weights_match_data() {
        let s = setup(0.7, 2.0, 1.3, -0.5, 0.4, 0.3, 0.2);
        let traj = solve(&s).unwrap();
        let w = delta_weights(&traj, &s);
        assert!((w.alpha(0.0) - 0.4).abs() < 1e-15);
        assert!((w.wm(0.0) - 0.12).abs() < 1e-15);
    }

    #[test]
    fn sample_examples() {
        let s = setup(1.0, 1.0, 1.0, 2.0, 1.0, 0.0, 0.1);
        let traj = solve(&s).unwrap();
        let field = MeasureField::new(&traj, &s, View::Piston);
        assert_eq!(field.sample(3.0, 1.0), PointSample::Constant { rho: 1.0, u: 2.0 });
        assert_eq!(field.sample(1.5, 1.0), PointSample::Vacuum);
        let x1 = traj.position(1.0);
        assert!((x1 - (2.0 - 3f64.sqrt())).abs() < 1e-14);
        match field.sample(x1, 1.0) {
            PointSample::Atom { alpha, .. } => assert!((alpha - 3f64.sqrt()).abs() < 1e-12),
            other => panic!("expected atom, got {other:?}"),
        }
        assert_eq!(field.sample(-5.0, 1.0), PointSample::Constant { rho: 1.0, u: 1.0 });
    }

    #[test]
    fn snapshot_shape() {
        let s = setup(1.0, 1.0, 1.0, 2.0, 1.0, 0.0, 0.1);
        let traj = solve(&s).unwrap();
        let snap = MeasureField::new(&traj, &s, View::Piston).snapshot(1.0);
        let regions = snap["regions"].as_array().unwrap();
        assert_eq!(regions.len(), 3);
        assert!(regions[0]["lo"].is_null());
        assert_eq!(regions[1]["vacuum"], true);
        assert!((regions[2]["lo"].as_f64().unwrap() - 2.1).abs() < 1e-14);
        assert!(regions[2]["hi"].is_null());
        assert!((snap["atom"]["alpha"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let phi = TestFunction::<f64>::new(0.3, 1.2, 0.7, 0.4);
        let (x, t, h) = (0.55, 1.05, 1e-6);
        let (_, px, pt) = phi.eval(x, t);
        assert!((px - (phi.value(x + h, t) - phi.value(x - h, t)) / (2.0 * h)).abs() < 1e-8);
        assert!((pt - (phi.value(x, t + h) - phi.value(x, t - h)) / (2.0 * h)).abs() < 1e-8);
        assert_eq!(phi.eval(1.0, 1.2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn entropy_flags_overshoot() {
        let s = setup(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0);
        let case = crate::model::classify(&s).unwrap();
        let contact = Contact { left: Some(0.0), right: Some(0.0) };
        let bad = Trajectory::from_pieces(case, 0.0, contact, vec![Piece::new(0.0, 0.0, Law::Ballistic { velocity: 2.0 })]);
        let grid = crate::trajectory::uniform_grid(5.0, 20);
        assert!(!entropy_check(&bad, &s, &grid).pass);
        assert!(entropy_check(&solve(&s).unwrap(), &s, &grid).pass);
    }

    #[test]
    fn residual_vanishes_inside_constant_region() {
        let s = setup(1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0);
        let traj = solve(&s).unwrap();
        let field = MeasureField::new(&traj, &s, View::Riemann);
        let r = weak_residual_cauchy(&field, &TestFunction::new(-3.0, 2.0, 0.5, 0.5), 16).unwrap();
        assert!(r.max_abs() < 1e-14);
    }

    #[test]
    fn residual_csv_header() {
        let rows = [ResidualRow { phi_id: 0, x0: 0.0, t0: 1.0, order: 32, r_mass: 1e-17, r_momentum: 0.0 }];
        let csv = residual_csv(&rows);
        assert_eq!(csv.lines().next(), Some("phi_id,x0,t0,order,r_mass,r_momentum"));
        assert_eq!(csv.lines().nth(1), Some("0,0,1,32,1e-17,0"));
    }
}
