//! Rolling spherical robot: parameters, state, no-slip kinematics and
//! Euler-Poincaré attitude dynamics.
//!
//! Convention: `r_i` denotes row `i` of the attitude matrix `R`, computed as
//! `Rᵀ e_i`. The planar kinematics read `ẋ = r (ω·r₂)`, `ẏ = −r (ω·r₁)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{e3, hat, Inertia, Mat3, Rotation, Vec3};

/// Physical parameters of the sphere.
///
/// `mass` is carried for completeness; it does not enter the attitude dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    radius: f64,
    mass: f64,
    inertia: Inertia,
}

impl RobotParams {
    /// Requires `radius > 0`, `mass > 0` and `0 < J1 < J2 < J3`.
    pub fn new(radius: f64, mass: f64, inertia: [f64; 3]) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius",
                value: radius,
                reason: "must be positive",
            });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mass",
                value: mass,
                reason: "must be positive",
            });
        }
        let inertia = Inertia::try_from(inertia)?;
        if !inertia.is_strictly_ordered() {
            return Err(Error::InertiaOrdering(inertia.into()));
        }
        Ok(Self {
            radius,
            mass,
            inertia,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Inertia {
        &self.inertia
    }
}

/// `(x, y, R, ω)`: planar position (m), attitude, body angular velocity (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub attitude: Rotation,
    pub omega: Vec3,
}

impl RobotState {
    pub fn new(x: f64, y: f64, attitude: Rotation, omega: Vec3) -> Result<Self> {
        let s = Self {
            x,
            y,
            attitude,
            omega,
        };
        if !s.is_finite() {
            return Err(Error::NonFinite("robot state"));
        }
        Ok(s)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.omega.iter().all(|w| w.is_finite())
            && self.attitude.matrix().iter().all(|r| r.is_finite())
    }

    pub fn position_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Planar velocity and attitude rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub x_dot: f64,
    pub y_dot: f64,
    pub attitude_dot: Mat3,
}

/// Full time derivative of a [`RobotState`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateRate {
    pub x_dot: f64,
    pub y_dot: f64,
    pub attitude_dot: Mat3,
    pub omega_dot: Vec3,
}

pub fn kinematics(s: &RobotState, params: &RobotParams) -> Kinematics {
    let r = params.radius;
    let r1 = s.attitude.row(0);
    let r2 = s.attitude.row(1);
    Kinematics {
        x_dot: r * s.omega.dot(&r2),
        y_dot: -r * s.omega.dot(&r1),
        attitude_dot: s.attitude.matrix() * hat(&s.omega),
    }
}

/// Velocity of the sphere's centre from the no-slip condition, `r (Rω × e3)`.
/// The third component is identically zero.
pub fn contact_velocity(s: &RobotState, params: &RobotParams) -> Vec3 {
    let spatial = &s.attitude * s.omega;
    params.radius * spatial.cross(&e3())
}

/// Euler-Poincaré equations: `ω̇ = −J⁻¹(ω × Jω) + J⁻¹τ`.
pub fn dynamics(s: &RobotState, torque: &Vec3, params: &RobotParams) -> Vec3 {
    let j = &params.inertia;
    j.solve(&(torque - s.omega.cross(&j.apply(&s.omega))))
}

pub fn state_rate(s: &RobotState, torque: &Vec3, params: &RobotParams) -> StateRate {
    let k = kinematics(s, params);
    StateRate {
        x_dot: k.x_dot,
        y_dot: k.y_dot,
        attitude_dot: k.attitude_dot,
        omega_dot: dynamics(s, torque, params),
    }
}

/// `½ ωᵀ J ω`
pub fn kinetic_energy(s: &RobotState, params: &RobotParams) -> f64 {
    0.5 * s.omega.dot(&params.inertia.apply(&s.omega))
}
