//! Fixed-step Lie-group integration of the rolling sphere.
//!
//! The planar position and the body angular velocity are advanced with the
//! classical RK4 tableau. The attitude is advanced on SO(3): each stage uses
//! `R_i = R exp(u_i)` and the final update is `R exp(dt · ω̄)`, where `ω̄` is the
//! RK4-weighted average of the stage body velocities after the `dexp⁻¹`
//! correction `ω + ½ u×ω + (1/12) u×(u×ω)`. The scheme is fourth order and
//! keeps `R` on the group up to round-off; a polar reprojection every
//! `reproject_every` steps removes the accumulated round-off.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::analysis::EnergyRecord;
use crate::controller::{control_torque, ControlOutput, Gains};
use crate::error::{Error, Result};
use crate::model::{dynamics, kinematics, RobotParams, RobotState};
use crate::so3::{exp_so3, project_so3, Rotation, Vec3};

/// Runs abort once `|ω|` exceeds this (rad/s).
pub const OMEGA_LIMIT: f64 = 1e6;

/// Time offsets of the four RK4 stages, as fractions of `dt`.
pub const STAGE_OFFSETS: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

pub const PRESET_NAMES: [&str; 2] = ["fig2", "fig3"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    ClosedLoop,
    /// Torque comes from a [`TorqueSchedule`]; [`simulate`] uses zero torque.
    OpenLoop,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub reproject_every: usize,
    pub mode: Mode,
    /// Keep the torque applied at every RK stage (closed loop only), so the run
    /// can be replayed exactly in open loop.
    #[serde(default)]
    pub log_stage_torques: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 60.0,
            record_every: 10,
            reproject_every: 100,
            mode: Mode::ClosedLoop,
            log_stage_torques: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "must be positive",
            });
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::InvalidParameter {
                name: "t_final",
                value: self.t_final,
                reason: "must be at least dt",
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.reproject_every == 0 {
            return Err(Error::InvalidParameter {
                name: "reproject_every",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Number of steps, `round(t_final / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub params: RobotParams,
    pub gains: Gains,
    pub initial: RobotState,
    pub config: SimConfig,
}

impl Scenario {
    /// Sphere of radius 0.4 m with `J = diag(0.3, 0.4, 0.5)`, gains `k_p = 5`,
    /// `k_v = 1`, starting at rest at `(4, 3)` tilted 45° about the inertial X axis.
    pub fn fig2() -> Self {
        let c = FRAC_1_SQRT_2;
        let attitude = Rotation::from_rows([[1.0, 0.0, 0.0], [0.0, c, -c], [0.0, c, c]])
            .expect("preset attitude is a rotation");
        Self::preset_with_attitude("fig2", attitude)
    }

    /// As [`Scenario::fig2`], but starting upside down: `R(0) = diag(1, −1, −1)`.
    pub fn fig3() -> Self {
        let attitude = Rotation::from_rows([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
            .expect("preset attitude is a rotation");
        Self::preset_with_attitude("fig3", attitude)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "fig2" => Some(Self::fig2()),
            "fig3" => Some(Self::fig3()),
            _ => None,
        }
    }

    fn preset_with_attitude(name: &str, attitude: Rotation) -> Self {
        Self {
            name: name.to_owned(),
            params: RobotParams::new(0.4, 1.0, [0.3, 0.4, 0.5]).expect("preset params are valid"),
            gains: Gains::new(5.0, 1.0).expect("preset gains are valid"),
            initial: RobotState::new(4.0, 3.0, attitude, Vec3::zeros()).expect("finite"),
            config: SimConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !self.initial.is_finite() {
            return Err(Error::NonFinite("initial state"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: RobotState,
    /// Controller terms at this sample (closed loop only).
    pub control: Option<ControlOutput>,
    /// Torque applied at the start of the step leaving this sample.
    pub torque: Vec3,
    pub energy: EnergyRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<Sample>,
    dt: f64,
    steps: usize,
    stage_torques: Option<Vec<[Vec3; 4]>>,
}

impl Trajectory {
    /// Wraps externally produced samples (e.g. re-loaded from an export).
    pub fn from_samples(samples: Vec<Sample>, dt: f64) -> Self {
        let steps = samples.last().map_or(0, |s| (s.t / dt).round() as usize);
        Self {
            samples,
            dt,
            steps,
            stage_torques: None,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Per-step, per-stage torques of a closed-loop run with
    /// `log_stage_torques` set.
    pub fn stage_torques(&self) -> Option<&[[Vec3; 4]]> {
        self.stage_torques.as_deref()
    }

    /// The logged stage torques as a replayable schedule.
    pub fn torque_schedule(&self) -> Option<RecordedTorques> {
        self.stage_torques.clone().map(RecordedTorques::new)
    }

    /// Largest `|RᵀR − I|_F` over the recorded samples.
    pub fn max_orthogonality_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.state.attitude.orthogonality_error())
            .fold(0.0, f64::max)
    }
}

/// Torque source for open-loop runs, queried once per RK stage.
pub trait TorqueSchedule {
    /// `stage` is in `0..4`; `t` is the stage time (`step·dt + STAGE_OFFSETS[stage]·dt`).
    fn torque(&self, step: usize, stage: usize, t: f64) -> Vec3;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantTorque(pub Vec3);

impl TorqueSchedule for ConstantTorque {
    fn torque(&self, _step: usize, _stage: usize, _t: f64) -> Vec3 {
        self.0
    }
}

/// Torque as a function of time only.
pub struct TimeSchedule<F>(pub F);

impl<F: Fn(f64) -> Vec3> TorqueSchedule for TimeSchedule<F> {
    fn torque(&self, _step: usize, _stage: usize, t: f64) -> Vec3 {
        (self.0)(t)
    }
}

/// Replays the stage torques logged by a closed-loop run.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordedTorques {
    stages: Vec<[Vec3; 4]>,
}

impl RecordedTorques {
    pub fn new(stages: Vec<[Vec3; 4]>) -> Self {
        Self { stages }
    }
}

impl TorqueSchedule for RecordedTorques {
    /// Past the end of the log this returns the last logged stage (zero if empty).
    fn torque(&self, step: usize, stage: usize, _t: f64) -> Vec3 {
        match self.stages.get(step) {
            Some(s) => s[stage],
            None => self.stages.last().map_or_else(Vec3::zeros, |s| s[3]),
        }
    }
}

/// `dexp⁻¹` for the body-trivialized flow `R = R₀ exp(u)`, truncated after the
/// second bracket.
fn dexp_inv(u: &Vec3, w: &Vec3) -> Vec3 {
    let uw = u.cross(w);
    w + 0.5 * uw + u.cross(&uw) / 12.0
}

struct StageRate {
    x_dot: f64,
    y_dot: f64,
    omega_dot: Vec3,
    body_vel: Vec3,
}

fn stage_rate(s: &RobotState, u: &Vec3, torque: &Vec3, params: &RobotParams) -> StageRate {
    let k = kinematics(s, params);
    StageRate {
        x_dot: k.x_dot,
        y_dot: k.y_dot,
        omega_dot: dynamics(s, torque, params),
        body_vel: dexp_inv(u, &s.omega),
    }
}

fn offset(base: &RobotState, rate: &StageRate, h: f64) -> (RobotState, Vec3) {
    let u = h * rate.body_vel;
    let attitude = Rotation::from_matrix_unchecked(base.attitude.matrix() * exp_so3(&u).matrix());
    let s = RobotState {
        x: base.x + h * rate.x_dot,
        y: base.y + h * rate.y_dot,
        attitude,
        omega: base.omega + h * rate.omega_dot,
    };
    (s, u)
}

/// One step with the torque held at `torque` across all stages.
pub fn step(s: &RobotState, torque: &Vec3, params: &RobotParams, dt: f64) -> Result<RobotState> {
    step_with(s, params, dt, |_, _| *torque)
}

/// One step with the torque evaluated per stage by `torque(stage, stage_state)`.
///
/// Fails with [`Error::Diverged`] (time and step relative to the step start)
/// when the result is non-finite or `|ω|` exceeds [`OMEGA_LIMIT`].
pub fn step_with<F>(s: &RobotState, params: &RobotParams, dt: f64, mut torque: F) -> Result<RobotState>
where
    F: FnMut(usize, &RobotState) -> Vec3,
{
    let zero = Vec3::zeros();
    let k1 = stage_rate(s, &zero, &torque(0, s), params);
    let (s2, u2) = offset(s, &k1, 0.5 * dt);
    let k2 = stage_rate(&s2, &u2, &torque(1, &s2), params);
    let (s3, u3) = offset(s, &k2, 0.5 * dt);
    let k3 = stage_rate(&s3, &u3, &torque(2, &s3), params);
    let (s4, u4) = offset(s, &k3, dt);
    let k4 = stage_rate(&s4, &u4, &torque(3, &s4), params);

    let avg = |a: f64, b: f64, c: f64, d: f64| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let combined = StageRate {
        x_dot: avg(k1.x_dot, k2.x_dot, k3.x_dot, k4.x_dot),
        y_dot: avg(k1.y_dot, k2.y_dot, k3.y_dot, k4.y_dot),
        omega_dot: (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot) / 6.0,
        body_vel: (k1.body_vel + 2.0 * k2.body_vel + 2.0 * k3.body_vel + k4.body_vel) / 6.0,
    };
    let (next, _) = offset(s, &combined, dt);

    let omega_norm = next.omega.norm();
    if !next.is_finite() || omega_norm > OMEGA_LIMIT {
        return Err(Error::Diverged {
            t: dt,
            step: 1,
            omega_norm,
        });
    }
    Ok(next)
}

/// Runs the scenario. Closed-loop mode applies the controller at every RK
/// stage; open-loop mode applies zero torque (see [`simulate_open_loop`] for a
/// caller-supplied schedule).
pub fn simulate(sc: &Scenario) -> Result<Trajectory> {
    match sc.config.mode {
        Mode::ClosedLoop => run(sc, Driver::Controller),
        Mode::OpenLoop => run(sc, Driver::Schedule(&ConstantTorque(Vec3::zeros()))),
    }
}

/// Runs the scenario driven by `schedule`, ignoring `sc.config.mode`.
pub fn simulate_open_loop(sc: &Scenario, schedule: &dyn TorqueSchedule) -> Result<Trajectory> {
    run(sc, Driver::Schedule(schedule))
}

enum Driver<'a> {
    Controller,
    Schedule(&'a dyn TorqueSchedule),
}

fn run(sc: &Scenario, driver: Driver<'_>) -> Result<Trajectory> {
    sc.validate()?;
    let cfg = &sc.config;
    let steps = cfg.steps();
    let dt = cfg.dt;
    let params = &sc.params;
    let gains = &sc.gains;
    let closed = matches!(driver, Driver::Controller);
    let log_stages = closed && cfg.log_stage_torques;

    let mut samples = Vec::with_capacity(steps / cfg.record_every + 2);
    let mut stage_log = log_stages.then(|| Vec::with_capacity(steps));

    let sample = |k: usize, s: &RobotState| -> Sample {
        let t = k as f64 * dt;
        let (control, torque) = match &driver {
            Driver::Controller => {
                let c = control_torque(s, gains, params);
                (Some(c), c.torque)
            }
            Driver::Schedule(schedule) => (None, schedule.torque(k, 0, t)),
        };
        Sample {
            t,
            state: *s,
            control,
            torque,
            energy: EnergyRecord::evaluate(t, s, gains, params),
        }
    };

    let mut state = sc.initial;
    samples.push(sample(0, &state));

    for k in 0..steps {
        let t0 = k as f64 * dt;
        let mut applied = [Vec3::zeros(); 4];
        let result = step_with(&state, params, dt, |stage, s| {
            let tau = match &driver {
                Driver::Controller => control_torque(s, gains, params).torque,
                Driver::Schedule(schedule) => schedule.torque(k, stage, t0 + STAGE_OFFSETS[stage] * dt),
            };
            applied[stage] = tau;
            tau
        });
        state = match result {
            Ok(next) => next,
            Err(Error::Diverged { omega_norm, .. }) => {
                return Err(Error::Diverged {
                    t: (k + 1) as f64 * dt,
                    step: k + 1,
                    omega_norm,
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(log) = stage_log.as_mut() {
            log.push(applied);
        }
        let done = k + 1;
        if done % cfg.reproject_every == 0 {
            state.attitude = project_so3(state.attitude.matrix())?;
        }
        if done % cfg.record_every == 0 || done == steps {
            samples.push(sample(done, &state));
        }
    }

    Ok(Trajectory {
        samples,
        dt,
        steps,
        stage_torques: stage_log,
    })
}
