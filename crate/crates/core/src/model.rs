//! Problem data, case classification and the symmetry reductions.
//!
//! A [`RiemannSetup`] holds two constant gas states separated by a rigid
//! piston (equivalently a Dirac mass at the origin). The relative order of
//! the three velocities selects one of six qualitative regimes; Cases 4-6
//! reduce to Cases 1-3 by reflection `x -> -x`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::closed_form::zero_mass_velocity;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Initial data of the free piston / singular Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannSetup<T> {
    pub rho_left: T,
    pub u_left: T,
    pub rho_right: T,
    pub u_right: T,
    pub m0: T,
    pub u0: T,
    pub l: T,
}

impl<T: Real> RiemannSetup<T> {
    pub fn new(rho_left: T, u_left: T, rho_right: T, u_right: T, m0: T, u0: T, l: T) -> Result<Self> {
        let setup = Self { rho_left, u_left, rho_right, u_right, m0, u0, l };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("rho_left", self.rho_left),
            ("u_left", self.u_left),
            ("rho_right", self.rho_right),
            ("u_right", self.u_right),
            ("m0", self.m0),
            ("u0", self.u0),
            ("l", self.l),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(Error::InvalidSetup(format!("{name} is not finite ({value})")));
            }
        }
        for (name, value) in [("rho_left", self.rho_left), ("rho_right", self.rho_right), ("m0", self.m0), ("l", self.l)] {
            if value < T::zero() {
                return Err(Error::InvalidSetup(format!("{name} must be nonnegative ({value})")));
            }
        }
        Ok(())
    }

    /// Piston velocity actually used by the dynamics.
    ///
    /// A massless piston cannot carry its own velocity; the momentum balance
    /// then fixes it to the root returned by [`zero_mass_velocity`].
    pub fn effective_u0(&self) -> T {
        if self.m0 == T::zero() {
            zero_mass_velocity(self.rho_left, self.u_left, self.rho_right, self.u_right).unwrap_or(self.u0)
        } else {
            self.u0
        }
    }

    /// Copy with `u0` replaced by [`Self::effective_u0`].
    pub fn normalized(&self) -> Self {
        Self { u0: self.effective_u0(), ..*self }
    }

    /// Total momentum per unit length scale, used to form relative errors.
    pub(crate) fn velocity_scale(&self) -> T {
        T::one() + self.u_left.abs().max(self.u_right.abs()).max(self.u0.abs())
    }
}

/// One of the six velocity orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseTag {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
}

impl CaseTag {
    pub fn number(self) -> u8 {
        match self {
            CaseTag::Case1 => 1,
            CaseTag::Case2 => 2,
            CaseTag::Case3 => 3,
            CaseTag::Case4 => 4,
            CaseTag::Case5 => 5,
            CaseTag::Case6 => 6,
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Marks an equality or vanishing density that sits on a case boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryFlag {
    U0EqU1,
    U0EqU2,
    U1EqU2,
    Rho1Zero,
    Rho2Zero,
}

impl fmt::Display for BoundaryFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryFlag::U0EqU1 => "u0=u1",
            BoundaryFlag::U0EqU2 => "u0=u2",
            BoundaryFlag::U1EqU2 => "u1=u2",
            BoundaryFlag::Rho1Zero => "rho1=0",
            BoundaryFlag::Rho2Zero => "rho2=0",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseId {
    pub tag: CaseTag,
    /// Sorted, without duplicates.
    pub boundary_flags: Vec<BoundaryFlag>,
}

impl CaseId {
    pub fn new(tag: CaseTag) -> Self {
        Self { tag, boundary_flags: Vec::new() }
    }

    pub fn has(&self, flag: BoundaryFlag) -> bool {
        self.boundary_flags.contains(&flag)
    }

    /// Comma separated flag list, empty when the ordering is strict.
    pub fn flags_string(&self) -> String {
        self.boundary_flags.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case={} boundary={}", self.tag, self.flags_string())
    }
}

/// Assigns the case tag.
///
/// Ties are resolved with the precedence Case 6, Case 2, Case 5, then the
/// closure of Case 1 to `u2 <= u0 <= u1` for the orderings no other case
/// claims. A side without gas is re-tagged to the regime that treats it as
/// permanent vacuum. For `m0 = 0` the velocity fixed by momentum balance
/// replaces `u0`.
pub fn classify<T: Real>(setup: &RiemannSetup<T>) -> Result<CaseId> {
    setup.validate()?;
    let u0 = setup.effective_u0();
    let (u1, u2) = (setup.u_left, setup.u_right);

    let mut flags = Vec::new();
    if u0 == u1 {
        flags.push(BoundaryFlag::U0EqU1);
    }
    if u0 == u2 {
        flags.push(BoundaryFlag::U0EqU2);
    }
    if u1 == u2 && u0 != u1 {
        flags.push(BoundaryFlag::U1EqU2);
    }

    let rho1_zero = setup.rho_left == T::zero();
    let rho2_zero = setup.rho_right == T::zero();
    if rho1_zero {
        flags.push(BoundaryFlag::Rho1Zero);
    }
    if rho2_zero {
        flags.push(BoundaryFlag::Rho2Zero);
    }

    let tag = if rho1_zero && rho2_zero {
        CaseTag::Case6
    } else if rho2_zero {
        if u0 < u1 {
            CaseTag::Case2
        } else {
            CaseTag::Case6
        }
    } else if rho1_zero {
        if u0 > u2 {
            CaseTag::Case4
        } else {
            CaseTag::Case6
        }
    } else {
        velocity_ordering(u1, u0, u2)
    };

    flags.sort();
    flags.dedup();
    Ok(CaseId { tag, boundary_flags: flags })
}

fn velocity_ordering<T: Real>(u1: T, u0: T, u2: T) -> CaseTag {
    if u1 <= u0 && u0 <= u2 {
        CaseTag::Case6
    } else if u0 < u1 && u1 <= u2 {
        CaseTag::Case2
    } else if u0 < u2 && u2 < u1 {
        CaseTag::Case3
    } else if u1 < u2 && u2 < u0 {
        CaseTag::Case4
    } else if u2 <= u1 && u1 < u0 {
        CaseTag::Case5
    } else {
        // u2 <= u0 <= u1 with u2 < u1: strict Case 1 plus the two tie orderings
        CaseTag::Case1
    }
}

/// Records how a setup was normalized so a solution can be mapped back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SetupTransform<T> {
    /// `x -> -x` about the piston, with the gas states swapped.
    Reflection,
    /// Change to a frame moving with `speed`.
    GalileanShift(T),
    /// Restart at time `origin` from position `offset`.
    TimeShift { origin: T, offset: T },
}

impl<T: Real> SetupTransform<T> {
    pub fn inverse(&self) -> Self {
        match *self {
            SetupTransform::Reflection => SetupTransform::Reflection,
            SetupTransform::GalileanShift(speed) => SetupTransform::GalileanShift(-speed),
            SetupTransform::TimeShift { origin, offset } => SetupTransform::TimeShift { origin: -origin, offset: -offset },
        }
    }

    /// Image of `setup` in the transformed frame.
    pub fn apply(&self, setup: &RiemannSetup<T>) -> RiemannSetup<T> {
        match *self {
            SetupTransform::Reflection => RiemannSetup {
                rho_left: setup.rho_right,
                u_left: -setup.u_right,
                rho_right: setup.rho_left,
                u_right: -setup.u_left,
                m0: setup.m0,
                u0: -setup.u0,
                l: setup.l,
            },
            SetupTransform::GalileanShift(speed) => {
                RiemannSetup { u_left: setup.u_left - speed, u_right: setup.u_right - speed, u0: setup.u0 - speed, ..*setup }
            }
            SetupTransform::TimeShift { .. } => *setup,
        }
    }

    /// Maps a left-face position computed in the transformed frame at
    /// transformed time `tau` back to the original frame.
    pub fn position_back(&self, x: T, tau: T) -> T {
        match *self {
            SetupTransform::Reflection => -x,
            SetupTransform::GalileanShift(speed) => x + speed * tau,
            SetupTransform::TimeShift { offset, .. } => x + offset,
        }
    }

    pub fn velocity_back(&self, v: T) -> T {
        match *self {
            SetupTransform::Reflection => -v,
            SetupTransform::GalileanShift(speed) => v + speed,
            SetupTransform::TimeShift { .. } => v,
        }
    }

    /// Transformed time corresponding to original time `t`.
    pub fn time_forward(&self, t: T) -> T {
        match *self {
            SetupTransform::TimeShift { origin, .. } => t - origin,
            _ => t,
        }
    }
}

/// Mirror image of `setup` under `x -> -x`.
///
/// The mirrored left face sits at `-x1(t)`: with `y = l - x` the old right
/// face `x1 + l` maps to `-x1`, so the mirrored problem again starts with
/// its left face at the origin and the original trajectory is the negated
/// mirrored one.
pub fn reflect<T: Real>(setup: &RiemannSetup<T>) -> (RiemannSetup<T>, SetupTransform<T>) {
    let transform = SetupTransform::Reflection;
    (transform.apply(setup), transform)
}

/// Setup seen from a frame moving with `speed`.
pub fn galilean_shift<T: Real>(setup: &RiemannSetup<T>, speed: T) -> (RiemannSetup<T>, SetupTransform<T>) {
    let transform = SetupTransform::GalileanShift(speed);
    (transform.apply(setup), transform)
}
