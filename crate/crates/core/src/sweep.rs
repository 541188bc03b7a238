//! Parameter sweeps over gains, step size and initial conditions.
//!
//! A grid is the Cartesian product of its axes, first axis outermost. Each grid
//! point is an independent simulation; points run in parallel when the
//! `parallel` feature is on, and summaries come back in grid order.

use serde::{Deserialize, Serialize};

use crate::analysis::{check_convergence_with, ConvergenceCriteria};
use crate::controller::Gains;
use crate::error::{Error, Result};
use crate::par::{map_ordered, Execution};
use crate::sim::{simulate, Scenario};
use crate::so3::Rotation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Kp,
    Kv,
    Dt,
    X,
    Y,
    /// Initial attitude: rotation about the inertial X axis by this angle (rad).
    Tilt,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::Kp => "kp",
            Param::Kv => "kv",
            Param::Dt => "dt",
            Param::X => "x",
            Param::Y => "y",
            Param::Tilt => "tilt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "kp" => Param::Kp,
            "kv" => Param::Kv,
            "dt" => Param::Dt,
            "x" => Param::X,
            "y" => Param::Y,
            "tilt" => Param::Tilt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn axis(mut self, param: Param, values: impl Into<Vec<f64>>) -> Self {
        self.axes.push(Axis {
            param,
            values: values.into(),
        });
        self
    }

    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            0
        } else {
            self.axes.iter().map(|a| a.values.len()).product()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All grid points, first axis varying slowest.
    pub fn points(&self) -> Vec<Vec<(Param, f64)>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((axis.param, v));
                        q
                    })
                })
                .collect();
        }
        if self.is_empty() {
            Vec::new()
        } else {
            points
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    NotConverged,
    Diverged,
    /// The grid point produced an invalid scenario (e.g. `dt ≤ 0`).
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub index: usize,
    pub point: Vec<(Param, f64)>,
    pub status: RunStatus,
    pub settling_time: Option<f64>,
    pub final_velocity_error_norm: f64,
    pub final_position_norm: f64,
    pub final_spin: f64,
    pub spin_sign: i8,
    pub max_lyapunov_increase: f64,
    pub message: Option<String>,
}

impl SweepSummary {
    fn failed(index: usize, point: Vec<(Param, f64)>, status: RunStatus, err: &Error) -> Self {
        Self {
            index,
            point,
            status,
            settling_time: None,
            final_velocity_error_norm: f64::NAN,
            final_position_norm: f64::NAN,
            final_spin: f64::NAN,
            spin_sign: 0,
            max_lyapunov_increase: f64::NAN,
            message: Some(err.to_string()),
        }
    }
}

/// Applies a grid point to a copy of `base`. `kv = 0` is accepted here so that
/// undamped loops can be probed.
pub fn apply_point(base: &Scenario, point: &[(Param, f64)]) -> Result<Scenario> {
    let mut sc = base.clone();
    let mut kp = sc.gains.kp();
    let mut kv = sc.gains.kv();
    for &(param, v) in point {
        match param {
            Param::Kp => kp = v,
            Param::Kv => kv = v,
            Param::Dt => sc.config.dt = v,
            Param::X => sc.initial.x = v,
            Param::Y => sc.initial.y = v,
            Param::Tilt => sc.initial.attitude = Rotation::about_x(v),
        }
    }
    sc.gains = Gains::allowing_zero_damping(kp, kv)?;
    sc.validate()?;
    Ok(sc)
}

pub fn run_point(base: &Scenario, index: usize, point: &[(Param, f64)], criteria: &ConvergenceCriteria) -> SweepSummary {
    let point_vec = point.to_vec();
    let sc = match apply_point(base, point) {
        Ok(sc) => sc,
        Err(e) => return SweepSummary::failed(index, point_vec, RunStatus::Invalid, &e),
    };
    let traj = match simulate(&sc) {
        Ok(t) => t,
        Err(e @ Error::Diverged { .. }) => {
            return SweepSummary::failed(index, point_vec, RunStatus::Diverged, &e)
        }
        Err(e) => return SweepSummary::failed(index, point_vec, RunStatus::Invalid, &e),
    };
    match check_convergence_with(&traj, criteria) {
        Ok(report) => SweepSummary {
            index,
            point: point_vec,
            status: if report.converged {
                RunStatus::Converged
            } else {
                RunStatus::NotConverged
            },
            settling_time: report.settling_time,
            final_velocity_error_norm: report.final_velocity_error_norm,
            final_position_norm: report.final_position_norm,
            final_spin: report.final_spin,
            spin_sign: report.spin_sign,
            max_lyapunov_increase: report.max_lyapunov_increase,
            message: None,
        },
        Err(e) => SweepSummary::failed(index, point_vec, RunStatus::Invalid, &e),
    }
}

pub fn sweep(base: &Scenario, grid: &Grid) -> Result<Vec<SweepSummary>> {
    sweep_with(base, grid, &ConvergenceCriteria::default(), Execution::default())
}

pub fn sweep_with(
    base: &Scenario,
    grid: &Grid,
    criteria: &ConvergenceCriteria,
    execution: Execution,
) -> Result<Vec<SweepSummary>> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let indexed: Vec<(usize, Vec<(Param, f64)>)> = points.into_iter().enumerate().collect();
    Ok(map_ordered(&indexed, execution, |(i, p)| run_point(base, *i, p, criteria)))
}
