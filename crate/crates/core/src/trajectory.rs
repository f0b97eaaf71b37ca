//! Piston paths produced by the three backends.
//!
//! A [`Trajectory`] is an immutable handle to `x1(t)` and `x1'(t)` plus the
//! bookkeeping every consumer needs: the case tag, when each face first
//! touched gas, the splice time and the limiting velocity when known.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CaseId, RiemannSetup};
use crate::ode::{NearState, NearStates};
use crate::scalar::{format_number, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Which solver produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Closed,
    Ode,
    Particles,
}

/// Analytic motion law in local time `tau` measured from the start of a piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law<T> {
    /// No gas in contact: uniform motion.
    Ballistic { velocity: T },
    /// Gas accreted on the left face only.
    OneSided { rho: T, u: T, mass: T, v0: T },
    /// Gas accreted on both faces.
    TwoSided { rho1: T, u1: T, rho2: T, u2: T, mass: T, v0: T },
}

impl<T: Real> Law<T> {
    /// Checks that every radicand stays nonnegative for `tau >= 0`.
    pub fn check_domain(&self) -> Result<()> {
        if let Law::TwoSided { rho1, u1, rho2, u2, mass, v0 } = *self {
            let a = rho1 * rho2 * (u1 - u2) * (u1 - u2);
            let k = rho1 * (u1 - v0) - rho2 * (u2 - v0);
            if k < T::zero() {
                if a <= T::zero() {
                    return Err(Error::Domain { formula: "two-sided radicand", value: (-k).as_f64() });
                }
                let min = mass * mass * (a - k * k) / a;
                let scale = mass * mass;
                if crate::scalar::guarded_sqrt(min, scale).is_none() {
                    return Err(Error::Domain { formula: "two-sided radicand", value: min.as_f64() });
                }
            }
        }
        Ok(())
    }

    fn two_sided_radicand(rho1: T, u1: T, rho2: T, u2: T, mass: T, v0: T, tau: T) -> T {
        let du = u1 - u2;
        let k = rho1 * (u1 - v0) - rho2 * (u2 - v0);
        let r = rho1 * rho2 * du * du * tau * tau + T::two() * mass * k * tau + mass * mass;
        r.max(T::zero())
    }

    /// Accumulated mass `alpha` on the piston at local time `tau`.
    pub fn mass(&self, tau: T) -> T {
        match *self {
            Law::Ballistic { .. } => T::nan(),
            Law::OneSided { rho, u, mass, v0 } => (T::two() * mass * rho * (u - v0) * tau + mass * mass).max(T::zero()).sqrt(),
            Law::TwoSided { rho1, u1, rho2, u2, mass, v0 } => Self::two_sided_radicand(rho1, u1, rho2, u2, mass, v0, tau).sqrt(),
        }
    }

    pub fn position(&self, tau: T) -> T {
        match *self {
            Law::Ballistic { velocity } => velocity * tau,
            Law::OneSided { u, mass, v0, .. } => {
                // u*tau - (S - m)/rho with S - m rationalized; exact as rho -> 0
                let denom = self.mass(tau) + mass;
                if denom == T::zero() {
                    u * tau
                } else {
                    u * tau - T::two() * mass * (u - v0) * tau / denom
                }
            }
            Law::TwoSided { rho1, u1, rho2, u2, mass, v0 } => {
                if rho1 == rho2 {
                    let du = u1 - u2;
                    let sum = u1 + u2;
                    if du == T::zero() {
                        return v0 * tau;
                    }
                    let base = rho1 * du * tau + mass;
                    let coef = mass * (sum - T::two() * v0) / (T::two() * rho1 * du);
                    if base == T::zero() {
                        return sum * T::half() * tau;
                    }
                    sum * T::half() * tau + mass * coef / base - coef
                } else {
                    let root = self.mass(tau);
                    let lead = (rho1 * u1 - rho2 * u2) * tau + mass;
                    if lead >= T::zero() {
                        let numer = (rho1 * u1 * u1 - rho2 * u2 * u2) * tau * tau + T::two() * mass * v0 * tau;
                        let denom = lead + root;
                        if denom == T::zero() {
                            T::zero()
                        } else {
                            numer / denom
                        }
                    } else {
                        (lead - root) / (rho1 - rho2)
                    }
                }
            }
        }
    }

    pub fn velocity(&self, tau: T) -> T {
        match *self {
            Law::Ballistic { velocity } => velocity,
            Law::OneSided { u, mass, v0, .. } => {
                let s = self.mass(tau);
                if s == T::zero() {
                    u
                } else {
                    u - mass * (u - v0) / s
                }
            }
            Law::TwoSided { rho1, u1, rho2, u2, mass, v0 } => {
                if rho1 == rho2 {
                    let du = u1 - u2;
                    let sum = u1 + u2;
                    let base = rho1 * du * tau + mass;
                    if base == T::zero() {
                        return sum * T::half();
                    }
                    sum * T::half() - mass * mass * (sum - T::two() * v0) / (T::two() * base * base)
                } else {
                    let alpha = self.mass(tau);
                    if alpha == T::zero() {
                        return self.limit_velocity();
                    }
                    let x = self.position(tau);
                    let momentum = mass * v0 + (rho1 * u1 * u1 - rho2 * u2 * u2) * tau - (rho1 * u1 - rho2 * u2) * x;
                    momentum / alpha
                }
            }
        }
    }

    pub fn limit_velocity(&self) -> T {
        match *self {
            Law::Ballistic { velocity } => velocity,
            Law::OneSided { u, .. } => u,
            Law::TwoSided { rho1, u1, rho2, u2, .. } => two_sided_limit(rho1, u1, rho2, u2),
        }
    }
}

/// Terminal velocity of a piston accreting on both faces.
pub fn two_sided_limit<T: Real>(rho1: T, u1: T, rho2: T, u2: T) -> T {
    if rho1 == rho2 {
        (u1 + u2) * T::half()
    } else {
        let (s1, s2) = (rho1.sqrt(), rho2.sqrt());
        (s1 * u1 + s2 * u2) / (s1 + s2)
    }
}

/// A law anchored at `(t_start, x_start)`, optionally mirrored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<T> {
    pub t_start: T,
    pub x_start: T,
    pub mirrored: bool,
    pub law: Law<T>,
}

impl<T: Real> Piece<T> {
    pub fn new(t_start: T, x_start: T, law: Law<T>) -> Self {
        Self { t_start, x_start, mirrored: false, law }
    }

    fn sign(&self) -> T {
        if self.mirrored {
            -T::one()
        } else {
            T::one()
        }
    }

    pub fn position(&self, t: T) -> T {
        self.x_start + self.sign() * self.law.position(t - self.t_start)
    }

    pub fn velocity(&self, t: T) -> T {
        self.sign() * self.law.velocity(t - self.t_start)
    }

    pub fn label(&self) -> &'static str {
        match self.law {
            Law::Ballistic { .. } => "ballistic",
            Law::OneSided { .. } => "one_sided",
            Law::TwoSided { .. } => "two_sided",
        }
    }
}

/// Dense-output node: state and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseNode<T> {
    pub t: T,
    pub x: T,
    pub v: T,
    pub a: T,
}

/// Piston state right after a particle event; motion is uniform until the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinkNode<T> {
    pub t: T,
    pub x: T,
    pub v: T,
}

#[derive(Debug, Clone, PartialEq)]
enum PathRepr<T> {
    Pieces(Vec<Piece<T>>),
    Dense(Vec<DenseNode<T>>),
    Polyline(Vec<KinkNode<T>>),
}

/// Time from which each face is in contact with gas (`None`: never).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Contact<T> {
    pub left: Option<T>,
    pub right: Option<T>,
}

impl<T: Real> Contact<T> {
    pub fn active(&self, side: Side, t: T) -> bool {
        let from = match side {
            Side::Left => self.left,
            Side::Right => self.right,
        };
        from.is_some_and(|t0| t >= t0)
    }

    pub fn swapped(&self) -> Self {
        Self { left: self.right, right: self.left }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    case: CaseId,
    backend: Backend,
    piston_length: T,
    splice_time: Option<T>,
    limit_velocity: Option<T>,
    contact: Contact<T>,
    horizon: Option<T>,
    path: PathRepr<T>,
}

impl<T: Real> Trajectory<T> {
    /// Closed-form trajectory made of analytic pieces sorted by start time.
    pub fn from_pieces(case: CaseId, piston_length: T, contact: Contact<T>, pieces: Vec<Piece<T>>) -> Self {
        assert!(!pieces.is_empty(), "trajectory needs at least one piece");
        Self {
            case,
            backend: Backend::Closed,
            piston_length,
            splice_time: None,
            limit_velocity: None,
            contact,
            horizon: None,
            path: PathRepr::Pieces(pieces),
        }
    }

    pub(crate) fn from_dense(case: CaseId, piston_length: T, contact: Contact<T>, nodes: Vec<DenseNode<T>>) -> Self {
        let horizon = nodes.last().map(|n| n.t);
        Self {
            case,
            backend: Backend::Ode,
            piston_length,
            splice_time: None,
            limit_velocity: None,
            contact,
            horizon,
            path: PathRepr::Dense(nodes),
        }
    }

    pub(crate) fn from_polyline(
        case: CaseId,
        piston_length: T,
        contact: Contact<T>,
        nodes: Vec<KinkNode<T>>,
        horizon: T,
    ) -> Self {
        Self {
            case,
            backend: Backend::Particles,
            piston_length,
            splice_time: None,
            limit_velocity: None,
            contact,
            horizon: Some(horizon),
            path: PathRepr::Polyline(nodes),
        }
    }

    pub fn with_splice_time(mut self, t1: Option<T>) -> Self {
        self.splice_time = t1;
        self
    }

    pub fn with_limit_velocity(mut self, v: Option<T>) -> Self {
        self.limit_velocity = v;
        self
    }

    pub fn with_case(mut self, case: CaseId) -> Self {
        self.case = case;
        self
    }

    pub fn with_contact(mut self, contact: Contact<T>) -> Self {
        self.contact = contact;
        self
    }

    pub fn case(&self) -> &CaseId {
        &self.case
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn piston_length(&self) -> T {
        self.piston_length
    }

    pub fn splice_time(&self) -> Option<T> {
        self.splice_time
    }

    pub fn limit_velocity(&self) -> Option<T> {
        self.limit_velocity
    }

    pub fn contact(&self) -> Contact<T> {
        self.contact
    }

    /// Last time covered by the computation; `None` for closed forms.
    pub fn horizon(&self) -> Option<T> {
        self.horizon
    }

    pub fn pieces(&self) -> Option<&[Piece<T>]> {
        match &self.path {
            PathRepr::Pieces(p) => Some(p),
            _ => None,
        }
    }

    pub fn dense_nodes(&self) -> Option<&[DenseNode<T>]> {
        match &self.path {
            PathRepr::Dense(n) => Some(n),
            _ => None,
        }
    }

    /// Left-face position `x1(t)`.
    pub fn position(&self, t: T) -> T {
        match &self.path {
            PathRepr::Pieces(pieces) => {
                if t < T::zero() {
                    return pieces[0].velocity(T::zero()) * t;
                }
                piece_at(pieces, t).position(t)
            }
            PathRepr::Dense(nodes) => dense_eval(nodes, t).0,
            PathRepr::Polyline(nodes) => {
                let n = kink_at(nodes, t);
                n.x + n.v * (t - n.t)
            }
        }
    }

    /// Right-face position `x2(t) = x1(t) + l`.
    pub fn right_face(&self, t: T) -> T {
        self.position(t) + self.piston_length
    }

    pub fn velocity(&self, t: T) -> T {
        match &self.path {
            PathRepr::Pieces(pieces) => piece_at(pieces, t.max(T::zero())).velocity(t.max(T::zero())),
            PathRepr::Dense(nodes) => dense_eval(nodes, t).1,
            PathRepr::Polyline(nodes) => kink_at(nodes, t).v,
        }
    }

    /// Label of the analytic branch active at `t`, for CSV export.
    pub fn branch(&self, t: T) -> &'static str {
        match &self.path {
            PathRepr::Pieces(pieces) => piece_at(pieces, t.max(T::zero())).label(),
            PathRepr::Dense(_) => "ode",
            PathRepr::Polyline(_) => "particles",
        }
    }

    /// Near-piston gas states at time `t`.
    pub fn near_states(&self, setup: &RiemannSetup<T>, t: T) -> NearStates<T> {
        let left = if self.contact.active(Side::Left, t) && setup.rho_left > T::zero() {
            NearState::Gas { rho: setup.rho_left, u: setup.u_left }
        } else {
            NearState::Vacuum
        };
        let right = if self.contact.active(Side::Right, t) && setup.rho_right > T::zero() {
            NearState::Gas { rho: setup.rho_right, u: setup.u_right }
        } else {
            NearState::Vacuum
        };
        NearStates { left, right }
    }

    /// Mirror image under `x -> -x` (see [`crate::model::reflect`]).
    pub fn reflected(&self) -> Self {
        let path = match &self.path {
            PathRepr::Pieces(pieces) => PathRepr::Pieces(
                pieces
                    .iter()
                    .map(|p| Piece { t_start: p.t_start, x_start: -p.x_start, mirrored: !p.mirrored, law: p.law })
                    .collect(),
            ),
            PathRepr::Dense(nodes) => {
                PathRepr::Dense(nodes.iter().map(|n| DenseNode { t: n.t, x: -n.x, v: -n.v, a: -n.a }).collect())
            }
            PathRepr::Polyline(nodes) => {
                PathRepr::Polyline(nodes.iter().map(|n| KinkNode { t: n.t, x: -n.x, v: -n.v }).collect())
            }
        };
        Self {
            case: self.case.clone(),
            backend: self.backend,
            piston_length: self.piston_length,
            splice_time: self.splice_time,
            limit_velocity: self.limit_velocity.map(|v| -v),
            contact: self.contact.swapped(),
            horizon: self.horizon,
            path,
        }
    }

    /// Times in `(a, b)` where the path is not smooth: piece starts, ODE
    /// events, particle kinks.
    pub fn breakpoints(&self, a: T, b: T) -> Vec<T> {
        let inside = |t: T| t > a && t < b;
        match &self.path {
            PathRepr::Pieces(pieces) => pieces.iter().map(|p| p.t_start).filter(|&t| inside(t)).collect(),
            PathRepr::Dense(nodes) => {
                nodes.windows(2).filter(|w| w[0].t == w[1].t).map(|w| w[0].t).filter(|&t| inside(t)).collect()
            }
            PathRepr::Polyline(nodes) => nodes.iter().map(|n| n.t).filter(|&t| inside(t)).collect(),
        }
    }

    /// Same motion with a different piston length.
    pub fn with_piston_length(mut self, l: T) -> Self {
        self.piston_length = l;
        self
    }
}

fn piece_at<T: Real>(pieces: &[Piece<T>], t: T) -> &Piece<T> {
    let idx = pieces.partition_point(|p| p.t_start <= t);
    &pieces[idx.saturating_sub(1)]
}

fn kink_at<T: Real>(nodes: &[KinkNode<T>], t: T) -> KinkNode<T> {
    let idx = nodes.partition_point(|n| n.t <= t);
    nodes[idx.saturating_sub(1)]
}

/// Position and velocity on the dense segment containing `t`; linear
/// extrapolation outside the covered range.
fn dense_eval<T: Real>(nodes: &[DenseNode<T>], t: T) -> (T, T) {
    let first = nodes[0];
    if t <= first.t {
        return (first.x + first.v * (t - first.t), first.v);
    }
    let last = nodes[nodes.len() - 1];
    if t >= last.t {
        return (last.x + last.v * (t - last.t), last.v);
    }
    let idx = nodes.partition_point(|n| n.t <= t);
    let (n0, n1) = (nodes[idx - 1], nodes[idx]);
    let h = n1.t - n0.t;
    if h <= T::zero() {
        return (n1.x, n1.v);
    }
    if n0.a == T::zero() && n1.a == T::zero() && n0.v == n1.v {
        return (n0.x + n0.v * (t - n0.t), n0.v);
    }
    quintic_hermite(n0, n1, (t - n0.t) / h)
}

/// Quintic Hermite interpolant through `(x, v, a)` at both nodes and its derivative.
fn quintic_hermite<T: Real>(n0: DenseNode<T>, n1: DenseNode<T>, s: T) -> (T, T) {
    let c = |v: f64| T::lit(v);
    let h = n1.t - n0.t;
    let (s2, s3) = (s * s, s * s * s);
    let (s4, s5) = (s3 * s, s3 * s2);
    let h0 = T::one() - c(10.0) * s3 + c(15.0) * s4 - c(6.0) * s5;
    let h1 = s - c(6.0) * s3 + c(8.0) * s4 - c(3.0) * s5;
    let h2 = (s2 - c(3.0) * s3 + c(3.0) * s4 - s5) * T::half();
    let h3 = c(10.0) * s3 - c(15.0) * s4 + c(6.0) * s5;
    let h4 = -c(4.0) * s3 + c(7.0) * s4 - c(3.0) * s5;
    let h5 = (s3 - T::two() * s4 + s5) * T::half();
    let x = h0 * n0.x + h3 * n1.x + h * (h1 * n0.v + h4 * n1.v) + h * h * (h2 * n0.a + h5 * n1.a);

    let d0 = -c(30.0) * s2 + c(60.0) * s3 - c(30.0) * s4;
    let d1 = T::one() - c(18.0) * s2 + c(32.0) * s3 - c(15.0) * s4;
    let d2 = (T::two() * s - c(9.0) * s2 + c(12.0) * s3 - c(5.0) * s4) * T::half();
    let d4 = -c(12.0) * s2 + c(28.0) * s3 - c(15.0) * s4;
    let d5 = (c(3.0) * s2 - c(8.0) * s3 + c(5.0) * s4) * T::half();
    let v = d0 * (n0.x - n1.x) / h + d1 * n0.v + d4 * n1.v + h * (d2 * n0.a + d5 * n1.a);
    (x, v)
}

pub(crate) fn hermite<T: Real>(y0: T, d0: T, y1: T, d1: T, h: T, s: T) -> T {
    let one = T::one();
    let two = T::two();
    let three = T::lit(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + one;
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// `n` equally spaced times from 0 to `t_end` inclusive.
pub fn uniform_grid<T: Real>(t_end: T, n: usize) -> Vec<T> {
    let n = n.max(2);
    let step = t_end / T::lit((n - 1) as f64);
    (0..n).map(|i| if i == n - 1 { t_end } else { step * T::lit(i as f64) }).collect()
}

/// Samples `t,x1,v,case,branch` on `grid`.
pub fn trajectory_csv<T: Real>(trajectory: &Trajectory<T>, grid: &[T]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("t,x1,v,case,branch\n");
    let case = trajectory.case().tag.number();
    for &t in grid {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_number(t.as_f64()),
            format_number(trajectory.position(t).as_f64()),
            format_number(trajectory.velocity(t).as_f64()),
            case,
            trajectory.branch(t)
        );
    }
    out
}
