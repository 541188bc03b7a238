//! TOML scenario files.
//!
//! ```toml
//! name = "tilted"
//!
//! [params]
//! r = 0.4
//! m = 1.0
//! J = [0.3, 0.4, 0.5]
//!
//! [gains]
//! kp = 5.0
//! kv = 1.0
//!
//! [initial]
//! x = 4.0
//! y = 3.0
//! omega = [0.0, 0.0, 0.0]
//! axis_angle = { axis = [1.0, 0.0, 0.0], angle = 0.7853981633974483 }
//! # or: attitude = [1, 0, 0, 0, 0.7071, -0.7071, 0, 0.7071, 0.7071]
//!
//! [sim]            # optional, defaults shown
//! dt = 1e-3
//! t_final = 60.0
//! record_every = 10
//! reproject_every = 100
//! mode = "closed-loop"   # or "open-loop"
//! torque = [0.0, 0.0, 0.0]   # open loop only
//! ```
//!
//! A row-major `attitude` that is not a rotation to 1e-9 is projected onto
//! SO(3) when `|RᵀR − I|_F ≤ 1e-6` and rejected otherwise.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sphere_control::so3::project_so3;
use sphere_control::{Gains, Mat3, Mode, RobotParams, RobotState, Rotation, Scenario, SimConfig, Vec3};

use crate::error::CliError;

/// Largest `|RᵀR − I|_F` accepted for a configured attitude before projection.
pub const ATTITUDE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub params: ParamsSection,
    pub gains: GainsSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub r: f64,
    pub m: f64,
    #[serde(rename = "J")]
    pub j: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub kp: f64,
    pub kv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x: f64,
    pub y: f64,
    pub omega: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attitude: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_angle: Option<AxisAngle>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub reproject_every: usize,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torque: Option<[f64; 3]>,
}

impl Default for SimSection {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            dt: d.dt,
            t_final: d.t_final,
            record_every: d.record_every,
            reproject_every: d.reproject_every,
            mode: d.mode,
            torque: None,
        }
    }
}

/// A scenario plus the constant torque used in open-loop mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Loaded {
    pub scenario: Scenario,
    pub torque: Vec3,
}

impl ConfigFile {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let c = &sc.config;
        Self {
            name: Some(sc.name.clone()),
            params: ParamsSection {
                r: sc.params.radius(),
                m: sc.params.mass(),
                j: sc.params.inertia().diagonal().into(),
            },
            gains: GainsSection {
                kp: sc.gains.kp(),
                kv: sc.gains.kv(),
            },
            initial: InitialSection {
                x: sc.initial.x,
                y: sc.initial.y,
                omega: sc.initial.omega.into(),
                attitude: Some(sc.initial.attitude.to_rows().concat()),
                axis_angle: None,
            },
            sim: SimSection {
                dt: c.dt,
                t_final: c.t_final,
                record_every: c.record_every,
                reproject_every: c.reproject_every,
                mode: c.mode,
                torque: None,
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config sections serialize")
    }

    /// Builds a validated scenario; `default_name` is used when `name` is absent.
    pub fn into_loaded(self, default_name: &str) -> Result<Loaded, String> {
        let params = RobotParams::new(self.params.r, self.params.m, self.params.j).map_err(|e| format!("[params] {e}"))?;
        let gains = Gains::new(self.gains.kp, self.gains.kv).map_err(|e| format!("[gains] {e}"))?;
        let attitude = parse_attitude(&self.initial)?;
        let omega = Vec3::from(self.initial.omega);
        let initial =
            RobotState::new(self.initial.x, self.initial.y, attitude, omega).map_err(|e| format!("[initial] {e}"))?;
        let s = self.sim;
        let torque = match (s.mode, s.torque) {
            (Mode::ClosedLoop, Some(_)) => return Err("[sim] torque is only allowed with mode = \"open-loop\"".into()),
            (_, t) => Vec3::from(t.unwrap_or_default()),
        };
        if torque.iter().any(|v| !v.is_finite()) {
            return Err("[sim] torque must be finite".into());
        }
        let scenario = Scenario {
            name: self.name.unwrap_or_else(|| default_name.to_owned()),
            params,
            gains,
            initial,
            config: SimConfig {
                dt: s.dt,
                t_final: s.t_final,
                record_every: s.record_every,
                reproject_every: s.reproject_every,
                mode: s.mode,
                log_stage_torques: false,
            },
        };
        scenario.validate().map_err(|e| format!("[sim] {e}"))?;
        Ok(Loaded { scenario, torque })
    }
}

fn parse_attitude(init: &InitialSection) -> Result<Rotation, String> {
    match (&init.attitude, &init.axis_angle) {
        (Some(_), Some(_)) => Err("[initial] give either attitude or axis_angle, not both".into()),
        (None, None) => Err("[initial] missing attitude (or axis_angle)".into()),
        (Some(entries), None) => {
            if entries.len() != 9 {
                return Err(format!("[initial] attitude needs 9 row-major entries, got {}", entries.len()));
            }
            let m = Mat3::from_row_slice(entries);
            if m.iter().any(|v| !v.is_finite()) {
                return Err("[initial] attitude must be finite".into());
            }
            let orth = (m.transpose() * m - Mat3::identity()).norm();
            if orth > ATTITUDE_TOL {
                return Err(format!(
                    "[initial] attitude is not a rotation (|R^T R - I|_F = {orth:e} > {ATTITUDE_TOL:e})"
                ));
            }
            Rotation::from_matrix(m)
                .or_else(|_| project_so3(&m))
                .map_err(|e| format!("[initial] {e}"))
        }
        (None, Some(aa)) => {
            let axis = Vec3::from(aa.axis);
            let n = axis.norm();
            if !(n.is_finite() && n > 0.0) || !aa.angle.is_finite() {
                return Err("[initial] axis_angle needs a finite non-zero axis and a finite angle".into());
            }
            Ok(Rotation::from_axis_angle(&axis, aa.angle))
        }
    }
}

pub fn parse(text: &str, path: &Path) -> Result<Loaded, CliError> {
    let err = |message: String| CliError::Config {
        path: path.to_owned(),
        message,
    };
    let file: ConfigFile = toml::from_str(text).map_err(|e| err(e.to_string()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
    file.into_loaded(stem).map_err(err)
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_owned(),
        source,
    })?;
    parse(&text, path)
}
