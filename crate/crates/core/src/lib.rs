//! Free piston and singular Riemann problem for one-dimensional pressureless
//! Euler flow.
//!
//! A rigid piston of mass `m0` sits between two constant gas states. Gas that
//! reaches a face sticks to it, so the piston carries a growing point mass
//! (a delta shock) and eventually drifts at a limiting velocity. Three
//! independent backends compute its path:
//!
//! * [`closed_form`]: exact formulas, used as the reference.
//! * [`ode`]: adaptive integration of the momentum balance.
//! * [`particles`]: event-driven sticky particles.
//!
//! [`measure`] rebuilds the full density/momentum field and evaluates the
//! weak-form residuals of a trajectory.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*F64` aliases
//! below name the double-precision instantiations.

pub mod closed_form;
pub mod error;
pub mod measure;
pub mod model;
pub mod ode;
pub mod particles;
pub mod quadrature;
pub mod scalar;
pub mod trajectory;

pub use closed_form::{solve, solve_case1, solve_case2, solve_case3, solve_case6, zero_mass_velocity, VacuumRecord};
pub use error::{Error, Result};
pub use measure::{
    delta_weights, entropy_check, piston_forces, residual_csv, residual_report, weak_residual_cauchy, weak_residual_ibvp,
    DeltaWeights, EntropyReport, Faults, MeasureField, PointSample, Region, RegionState, Residual, ResidualRow, TestFunction,
    View, WeightSample,
};
pub use model::{classify, galilean_shift, reflect, BoundaryFlag, CaseId, CaseTag, RiemannSetup, SetupTransform};
pub use ode::{integrate, integrate_problem, CatchUpEvent, IntegratorConfig, NearState, NearStates, OdeForm, OdeProblem};
pub use particles::{
    convergence_study, default_half_width, discretize, run, AccretionRecord, EventRecord, EventSide, ParticleRun, ParticleSystem,
};
pub use quadrature::GaussLegendre;
pub use scalar::{format_number, Real};
pub use trajectory::{trajectory_csv, uniform_grid, Backend, Contact, Law, Piece, Side, Trajectory};

pub type SetupF64 = RiemannSetup<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type IntegratorConfigF64 = IntegratorConfig<f64>;
