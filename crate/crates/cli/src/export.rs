//! Trajectory, report and sweep exports.
//!
//! Numbers are written with `{:.16e}` (17 significant digits), which
//! round-trips every finite `f64` exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sphere_control::analysis::ConvergenceReport;
use sphere_control::sweep::{Param, RunStatus, SweepSummary};
use sphere_control::{Sample, Scenario, Trajectory};

pub const TRAJECTORY_COLUMNS: [&str; 21] = [
    "t", "x", "y", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "wx", "wy", "wz", "tau_x", "tau_y",
    "tau_z", "V", "Vdot", "e_w_norm",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_row(s: &Sample) -> [f64; 21] {
    let r = s.state.attitude.to_rows();
    let w = s.state.omega;
    let tau = s.torque;
    [
        s.t,
        s.state.x,
        s.state.y,
        r[0][0],
        r[0][1],
        r[0][2],
        r[1][0],
        r[1][1],
        r[1][2],
        r[2][0],
        r[2][1],
        r[2][2],
        w.x,
        w.y,
        w.z,
        tau.x,
        tau.y,
        tau.z,
        s.energy.lyapunov,
        s.energy.lyapunov_rate,
        s.energy.velocity_error_norm,
    ]
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = TRAJECTORY_COLUMNS.join(",");
    out.push('\n');
    for s in traj.samples() {
        let row = trajectory_row(s);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Column-oriented JSON twin of the CSV: `{"columns": [...], "rows": [[...], ...]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TrajectoryTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn trajectory_json(traj: &Trajectory) -> String {
    let table = TrajectoryTable {
        columns: TRAJECTORY_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: traj.samples().iter().map(|s| trajectory_row(s).to_vec()).collect(),
    };
    serde_json::to_string(&table).unwrap() + "\n"
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub source: String,
    pub mode: sphere_control::Mode,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub samples: usize,
    pub converged: bool,
    pub settling_time: Option<f64>,
    pub spin_sign: i8,
    pub final_spin: f64,
    pub final_x: f64,
    pub final_y: f64,
    pub final_position_norm: f64,
    pub final_velocity_error_norm: f64,
    /// Third row of the final attitude, `Rᵀe3`.
    pub final_body_vertical: [f64; 3],
    pub final_lyapunov: f64,
    pub max_lyapunov_increase: f64,
    pub max_orthogonality_error: f64,
    pub files: Vec<String>,
}

impl RunSummary {
    pub fn new(sc: &Scenario, source: &str, traj: &Trajectory, report: &ConvergenceReport, files: Vec<String>) -> Self {
        let last = traj.last().expect("simulate records at least one sample");
        Self {
            scenario: sc.name.clone(),
            source: source.to_owned(),
            mode: sc.config.mode,
            dt: sc.config.dt,
            t_final: last.t,
            steps: traj.steps(),
            samples: traj.samples().len(),
            converged: report.converged,
            settling_time: report.settling_time,
            spin_sign: report.spin_sign,
            final_spin: report.final_spin,
            final_x: last.state.x,
            final_y: last.state.y,
            final_position_norm: report.final_position_norm,
            final_velocity_error_norm: report.final_velocity_error_norm,
            final_body_vertical: last.state.attitude.body_vertical().into(),
            final_lyapunov: last.energy.lyapunov,
            max_lyapunov_increase: report.max_lyapunov_increase,
            max_orthogonality_error: traj.max_orthogonality_error(),
            files,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).unwrap() + "\n"
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::NotConverged => "not-converged",
        RunStatus::Diverged => "diverged",
        RunStatus::Invalid => "invalid",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// One row per grid point; the grid axes become the leading columns.
pub fn sweep_csv(axes: &[Param], rows: &[SweepSummary]) -> String {
    let mut header = vec!["index"];
    header.extend(axes.iter().map(|p| p.name()));
    header.extend([
        "status",
        "settling_time",
        "final_velocity_error_norm",
        "final_position_norm",
        "final_spin",
        "spin_sign",
        "max_lyapunov_increase",
        "message",
    ]);
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let mut cells = vec![r.index.to_string()];
        cells.extend(r.point.iter().map(|(_, v)| fmt_f64(*v)));
        cells.push(status_name(r.status).to_owned());
        cells.push(opt(r.settling_time));
        for v in [r.final_velocity_error_norm, r.final_position_norm, r.final_spin] {
            cells.push(opt(v.is_finite().then_some(v)));
        }
        cells.push(r.spin_sign.to_string());
        cells.push(opt(r.max_lyapunov_increase.is_finite().then_some(r.max_lyapunov_increase)));
        cells.push(r.message.as_deref().map(csv_quote).unwrap_or_default());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}
