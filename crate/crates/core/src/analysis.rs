//! Lyapunov bookkeeping and convergence checks for the closed loop.
//!
//! `V = ½ e_ωᵀ J e_ω + ψ(x, y)` and, along the closed loop,
//! `V̇ = −k_v |e_ω|²`.

use serde::{Deserialize, Serialize};

use crate::controller::{error_function, velocity_error, Gains};
use crate::error::{Error, Result};
use crate::model::{RobotParams, RobotState};
use crate::sim::Trajectory;

/// Default position threshold for [`check_convergence`] (m).
pub const DEFAULT_POSITION_TOL: f64 = 0.05;
/// Default velocity-error threshold for [`check_convergence`] (rad/s).
pub const DEFAULT_VELOCITY_TOL: f64 = 0.01;
/// Both thresholds must hold for this long (s).
pub const DEFAULT_HOLD_TIME: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub lyapunov: f64,
    pub lyapunov_rate: f64,
    pub psi: f64,
    pub velocity_error_norm: f64,
    pub position_norm: f64,
}

impl EnergyRecord {
    pub fn evaluate(t: f64, s: &RobotState, gains: &Gains, params: &RobotParams) -> Self {
        Self {
            t,
            lyapunov: lyapunov_value(s, gains, params),
            lyapunov_rate: lyapunov_rate(s, gains),
            psi: error_function(s.x, s.y, gains),
            velocity_error_norm: velocity_error(s).norm(),
            position_norm: s.position_norm(),
        }
    }
}

pub fn lyapunov_value(s: &RobotState, gains: &Gains, params: &RobotParams) -> f64 {
    let e = velocity_error(s);
    0.5 * e.dot(&params.inertia().apply(&e)) + error_function(s.x, s.y, gains)
}

/// `−k_v |e_ω|²`
pub fn lyapunov_rate(s: &RobotState, gains: &Gains) -> f64 {
    -gains.kv() * velocity_error(s).norm_squared()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCriteria {
    pub position_tol: f64,
    pub velocity_tol: f64,
    pub hold_time: f64,
}

impl Default for ConvergenceCriteria {
    fn default() -> Self {
        Self {
            position_tol: DEFAULT_POSITION_TOL,
            velocity_tol: DEFAULT_VELOCITY_TOL,
            hold_time: DEFAULT_HOLD_TIME,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Start of the final run of samples inside both thresholds, if any.
    pub settling_time: Option<f64>,
    /// Sign of the final `ω·e3`: +1, −1, or 0 when exactly zero.
    pub spin_sign: i8,
    /// Final `ω·e3`.
    pub final_spin: f64,
    pub final_position_norm: f64,
    pub final_velocity_error_norm: f64,
    /// Largest increase of V between consecutive samples (0 if V never grew).
    pub max_lyapunov_increase: f64,
}

pub fn check_convergence(traj: &Trajectory, tol_pos: f64, tol_vel: f64) -> Result<ConvergenceReport> {
    check_convergence_with(
        traj,
        &ConvergenceCriteria {
            position_tol: tol_pos,
            velocity_tol: tol_vel,
            ..Default::default()
        },
    )
}

/// Converged iff the last sample lies inside both thresholds and has stayed
/// inside for at least `hold_time`.
pub fn check_convergence_with(traj: &Trajectory, criteria: &ConvergenceCriteria) -> Result<ConvergenceReport> {
    let samples = traj.samples();
    let last = samples.last().ok_or(Error::EmptyTrajectory)?;

    let inside = |e: &crate::analysis::EnergyRecord| {
        e.position_norm < criteria.position_tol && e.velocity_error_norm < criteria.velocity_tol
    };
    let settling_time = samples
        .iter()
        .rposition(|s| !inside(&s.energy))
        .map_or(Some(0), |i| (i + 1 < samples.len()).then_some(i + 1))
        .map(|i| samples[i].t);
    let converged = settling_time.is_some_and(|ts| last.t - ts >= criteria.hold_time - 1e-12);

    let max_lyapunov_increase = samples
        .windows(2)
        .map(|w| w[1].energy.lyapunov - w[0].energy.lyapunov)
        .fold(0.0_f64, f64::max);

    let final_spin = last.state.omega.z;
    let spin_sign = if final_spin > 0.0 {
        1
    } else if final_spin < 0.0 {
        -1
    } else {
        0
    };

    Ok(ConvergenceReport {
        converged,
        settling_time,
        spin_sign,
        final_spin,
        final_position_norm: last.energy.position_norm,
        final_velocity_error_norm: last.energy.velocity_error_norm,
        max_lyapunov_increase,
    })
}
