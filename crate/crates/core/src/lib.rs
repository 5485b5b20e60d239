//! Minimum-torque attitude maneuvers of a rigid body on SO(3).
//!
//! The dynamics are discretized with a Lie group variational integrator
//! (`R_{k+1} = R_k exp(hΩ_k)` plus an implicit momentum update), the discrete
//! necessary conditions are assembled into a square nonlinear system, and the
//! system is solved by Newton–Armijo with Jacobian columns obtained by
//! forward-mode or complex-step differentiation.

pub mod cli;
pub mod integrator;
pub mod liegroup;
pub mod optctrl;
pub mod scalar;
pub mod solver;
pub mod validate;

pub use integrator::{simulate, DiscreteTrajectory};
pub use liegroup::{exp_so3, log_so3, BodyVector, InertiaModel, Mat3, RotationMatrix, Vec3};
pub use optctrl::{ManeuverSpec, OptimalControlProblem};
pub use solver::{solve_maneuver, DerivativeMode, SolverOptions};
pub use validate::{run_checks, ValidationReport};
