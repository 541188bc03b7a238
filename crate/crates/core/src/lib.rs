//! Geometric feedforward + PD control of a rolling spherical robot.
//!
//! The sphere rolls without slipping on a plane and is actuated by three body
//! torques. The controller drives the contact point to the origin while the
//! body spins about the inertial vertical, i.e. towards
//! `E = {x = 0, y = 0, ω = Rᵀe3}`.
//!
//! - [`so3`]: hat/vee, bracket, adjoint, exponential, polar projection and the
//!   left-invariant connection.
//! - [`model`]: parameters, state, rolling kinematics, Euler-Poincaré dynamics.
//! - [`controller`]: error function, velocity error, feedforward and PD terms.
//! - [`sim`]: Lie-group RK4 integration, presets, open/closed-loop runs.
//! - [`analysis`]: Lyapunov function, its rate, convergence reports.
//! - [`sweep`]: parameter grids run in parallel with deterministic output.

pub mod analysis;
pub mod controller;
pub mod error;
pub mod model;
pub mod par;
pub mod sim;
pub mod so3;
pub mod sweep;

pub use analysis::{check_convergence, ConvergenceCriteria, ConvergenceReport, EnergyRecord};
pub use controller::{control_torque, ControlOutput, Gains};
pub use error::{Error, Result};
pub use model::{RobotParams, RobotState};
pub use par::Execution;
pub use sim::{simulate, simulate_open_loop, Mode, Sample, Scenario, SimConfig, Trajectory};
pub use so3::{Inertia, Mat3, Rotation, Vec3};
pub use sweep::{sweep, Grid, Param, RunStatus, SweepSummary};
