//! Exact piston trajectories.
//!
//! Case 1 accretes on both faces, Case 2 on the left face only, Case 3 starts
//! like Case 2 and switches to a time- and space-shifted Case 1 once the
//! piston reaches the receding right gas, Case 6 is uniform motion. Cases 4
//! and 5 are solved through their mirror images. These formulas serve as the
//! oracle for the ODE and particle backends.

use crate::error::{Error, Result};
use crate::model::{classify, reflect, CaseId, CaseTag, RiemannSetup};
use crate::scalar::Real;
use crate::trajectory::{two_sided_limit, Contact, Law, Piece, Side, Trajectory};

/// Vacuum gap between a piston face and the gas front receding from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumRecord<T> {
    pub side: Side,
    /// Velocity of the gas front; `None` when that side holds no gas at all.
    pub front_velocity: Option<T>,
    /// Distance from the left face to the face bordering the gap (`0` or `l`).
    pub face_offset: T,
    /// Time the gap closes, `None` if it never does.
    pub active_until: Option<T>,
}

impl<T: Real> VacuumRecord<T> {
    /// Open interval `(lo, hi)` of the gap at time `t` given the left-face
    /// position `x1`. Unbounded ends are infinite.
    pub fn interval_at(&self, x1: T, t: T) -> (T, T) {
        let face = x1 + self.face_offset;
        match self.side {
            Side::Left => (self.front_velocity.map_or(T::neg_infinity(), |u| u * t), face),
            Side::Right => (face, self.front_velocity.map_or(T::infinity(), |u| u * t + self.face_offset)),
        }
    }

    pub fn is_active(&self, t: T) -> bool {
        self.active_until.is_none_or(|end| t < end)
    }
}

/// Piston velocity fixed by momentum balance when `m0 = 0`.
///
/// Of the two roots the one continuous with the equal-density limit
/// `(u1 + u2) / 2` is returned.
pub fn zero_mass_velocity<T: Real>(rho1: T, u1: T, rho2: T, u2: T) -> Result<T> {
    if rho1 < T::zero() || rho2 < T::zero() {
        return Err(Error::Precondition("densities must be nonnegative".into()));
    }
    if rho1 == T::zero() && rho2 == T::zero() {
        return Err(Error::Precondition("zero_mass_velocity needs gas on at least one side".into()));
    }
    if rho1 == rho2 {
        return Ok((u1 + u2) * T::half());
    }
    let (s1, s2) = (rho1.sqrt(), rho2.sqrt());
    Ok((s2 * u2 + s1 * u1) / (s2 + s1))
}

fn expect_case<T: Real>(setup: &RiemannSetup<T>, tag: CaseTag, name: &'static str) -> Result<CaseId> {
    let case = classify(setup)?;
    if case.tag != tag {
        return Err(Error::WrongCase { expected: name, actual: case.tag });
    }
    Ok(case)
}

/// Case 1: accretion on both faces for all `t > 0`.
pub fn solve_case1<T: Real>(setup: &RiemannSetup<T>) -> Result<Trajectory<T>> {
    let case = expect_case(setup, CaseTag::Case1, "Case1")?;
    if setup.rho_left <= T::zero() || setup.rho_right <= T::zero() {
        return Err(Error::Precondition("Case 1 needs gas on both sides".into()));
    }
    let law = Law::TwoSided {
        rho1: setup.rho_left,
        u1: setup.u_left,
        rho2: setup.rho_right,
        u2: setup.u_right,
        mass: setup.m0,
        v0: setup.effective_u0(),
    };
    law.check_domain()?;
    let contact = Contact { left: Some(T::zero()), right: Some(T::zero()) };
    Ok(Trajectory::from_pieces(case, setup.l, contact, vec![Piece::new(T::zero(), T::zero(), law)])
        .with_limit_velocity(Some(law.limit_velocity())))
}

/// Case 2: accretion on the left face only; the right face borders vacuum forever.
pub fn solve_case2<T: Real>(setup: &RiemannSetup<T>) -> Result<(Trajectory<T>, VacuumRecord<T>)> {
    let case = expect_case(setup, CaseTag::Case2, "Case2")?;
    if setup.rho_left <= T::zero() || setup.m0 <= T::zero() {
        return Err(Error::Precondition("Case 2 needs rho_left > 0 and m0 > 0".into()));
    }
    let law = Law::OneSided { rho: setup.rho_left, u: setup.u_left, mass: setup.m0, v0: setup.u0 };
    let contact = Contact { left: Some(T::zero()), right: None };
    let trajectory = Trajectory::from_pieces(case, setup.l, contact, vec![Piece::new(T::zero(), T::zero(), law)])
        .with_limit_velocity(Some(setup.u_left));
    let vacuum = VacuumRecord {
        side: Side::Right,
        front_velocity: (setup.rho_right > T::zero()).then_some(setup.u_right),
        face_offset: setup.l,
        active_until: None,
    };
    Ok((trajectory, vacuum))
}

/// Time at which a Case 3 piston reaches the receding right gas.
pub fn catch_up_time<T: Real>(setup: &RiemannSetup<T>) -> T {
    let (u0, u1, u2) = (setup.u0, setup.u_left, setup.u_right);
    T::two() * setup.m0 * (u2 - u0) / (setup.rho_left * (u1 - u2) * (u1 - u2))
}

/// Case 3: one-sided accretion up to the catch-up time `t1`, then Case 1
/// restarted at `(t1, x1(t1))` with mass `alpha(t1)`.
pub fn solve_case3<T: Real>(setup: &RiemannSetup<T>) -> Result<Trajectory<T>> {
    let case = expect_case(setup, CaseTag::Case3, "Case3")?;
    if setup.rho_left <= T::zero() || setup.rho_right <= T::zero() || setup.m0 <= T::zero() {
        return Err(Error::Precondition("Case 3 needs gas on both sides and m0 > 0".into()));
    }
    let (rho1, u1, rho2, u2, m0, u0) = (setup.rho_left, setup.u_left, setup.rho_right, setup.u_right, setup.m0, setup.u0);

    let first = Piece::new(T::zero(), T::zero(), Law::OneSided { rho: rho1, u: u1, mass: m0, v0: u0 });
    let t1 = catch_up_time(setup);
    // Analytically x1(t1) = u2 t1; anchoring at the computed value keeps x1 continuous bitwise.
    let x_t1 = first.position(t1);
    let alpha_t1 = rho1 * u1 * t1 - rho1 * x_t1 + m0;
    let v_t1 = (T::two() * u1 * u2 - u0 * u2 - u0 * u1) / (u1 + u2 - T::two() * u0);

    let law = Law::TwoSided { rho1, u1, rho2, u2, mass: alpha_t1, v0: v_t1 };
    law.check_domain()?;
    let second = Piece::new(t1, x_t1, law);
    let contact = Contact { left: Some(T::zero()), right: Some(t1) };
    Ok(Trajectory::from_pieces(case, setup.l, contact, vec![first, second])
        .with_splice_time(Some(t1))
        .with_limit_velocity(Some(two_sided_limit(rho1, u1, rho2, u2))))
}

/// Case 6: gas recedes from both faces, the piston keeps its velocity.
pub fn solve_case6<T: Real>(setup: &RiemannSetup<T>) -> Result<(Trajectory<T>, VacuumRecord<T>, VacuumRecord<T>)> {
    let case = expect_case(setup, CaseTag::Case6, "Case6")?;
    let u0 = setup.effective_u0();
    let trajectory = Trajectory::from_pieces(
        case,
        setup.l,
        Contact::default(),
        vec![Piece::new(T::zero(), T::zero(), Law::Ballistic { velocity: u0 })],
    )
    .with_limit_velocity(Some(u0));
    let left = VacuumRecord {
        side: Side::Left,
        front_velocity: (setup.rho_left > T::zero()).then_some(setup.u_left),
        face_offset: T::zero(),
        active_until: None,
    };
    let right = VacuumRecord {
        side: Side::Right,
        front_velocity: (setup.rho_right > T::zero()).then_some(setup.u_right),
        face_offset: setup.l,
        active_until: None,
    };
    Ok((trajectory, left, right))
}

/// Classifies and dispatches; Cases 4 and 5 go through [`reflect`].
pub fn solve<T: Real>(setup: &RiemannSetup<T>) -> Result<Trajectory<T>> {
    let case = classify(setup)?;
    match case.tag {
        CaseTag::Case1 => solve_case1(setup),
        CaseTag::Case2 => solve_case2(setup).map(|(t, _)| t),
        CaseTag::Case3 => solve_case3(setup),
        CaseTag::Case6 => solve_case6(setup).map(|(t, _, _)| t),
        CaseTag::Case4 | CaseTag::Case5 => {
            let (mirrored, _) = reflect(setup);
            let image = solve(&mirrored)?;
            Ok(image.reflected().with_case(case))
        }
    }
}

/// Vacuum gaps present at `t` for a closed-form trajectory.
pub fn vacuum_records<T: Real>(trajectory: &Trajectory<T>, setup: &RiemannSetup<T>) -> Vec<VacuumRecord<T>> {
    let contact = trajectory.contact();
    let mut out = Vec::new();
    for side in [Side::Left, Side::Right] {
        let (from, rho, u, offset) = match side {
            Side::Left => (contact.left, setup.rho_left, setup.u_left, T::zero()),
            Side::Right => (contact.right, setup.rho_right, setup.u_right, setup.l),
        };
        if from == Some(T::zero()) && rho > T::zero() {
            continue;
        }
        out.push(VacuumRecord {
            side,
            front_velocity: (rho > T::zero()).then_some(u),
            face_offset: offset,
            active_until: if rho > T::zero() { from } else { None },
        });
    }
    out
}
