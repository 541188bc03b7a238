//! Feedforward + PD law for position and line-of-sight stabilization.
//!
//! The target set is `E = {x = 0, y = 0, ω = Rᵀe3}`: the sphere rests over the
//! origin and spins about the inertial vertical (`Ω = Rω = e3`). The control is
//! `τ = J (f_ff + f_pd)`, where `f_ff` cancels the covariant derivative of the
//! transported desired velocity and `f_pd` feeds back the position gradient and
//! the velocity error `e_ω = ω − Rᵀe3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RobotParams, RobotState};
use crate::so3::{e1, e2, e3, hat, vee, Mat3, Rotation, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    kp: f64,
    kv: f64,
}

impl Gains {
    /// Both gains strictly positive.
    pub fn new(kp: f64, kv: f64) -> Result<Self> {
        if !(kv.is_finite() && kv > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kv",
                value: kv,
                reason: "must be positive",
            });
        }
        Self::allowing_zero_damping(kp, kv)
    }

    /// Like [`Gains::new`] but accepts `kv = 0` (an undamped closed loop, where
    /// the Lyapunov function is conserved instead of decreasing). Used by sweeps
    /// that probe the boundary of the stable gain region.
    pub fn allowing_zero_damping(kp: f64, kv: f64) -> Result<Self> {
        if !(kp.is_finite() && kp > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kp",
                value: kp,
                reason: "must be positive",
            });
        }
        if !(kv.is_finite() && kv >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kv",
                value: kv,
                reason: "must be non-negative",
            });
        }
        Ok(Self { kp, kv })
    }

    pub fn kp(&self) -> f64 {
        self.kp
    }

    pub fn kv(&self) -> f64 {
        self.kv
    }
}

/// Feedforward term, PD term and the resulting body torque.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlOutput {
    pub feedforward: Vec3,
    pub pd: Vec3,
    pub torque: Vec3,
}

/// Spatial desired angular velocity `Ω_d`.
pub fn desired_spatial_velocity() -> Vec3 {
    e3()
}

/// A desired attitude `R_d` that fixes the vertical, `R_d e3 = e3`, spinning
/// with `Ṙ_d = Ω̂_d R_d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesiredMotion {
    attitude: Rotation,
}

impl DesiredMotion {
    pub fn new(attitude: Rotation) -> Result<Self> {
        let residual = (&attitude * e3() - e3()).norm();
        if residual > 1e-9 {
            return Err(Error::DesiredAttitude(residual));
        }
        Ok(Self { attitude })
    }

    pub fn attitude(&self) -> &Rotation {
        &self.attitude
    }

    /// `Ṙ_d = Ω̂_d R_d`
    pub fn velocity(&self) -> Mat3 {
        hat(&desired_spatial_velocity()) * self.attitude.matrix()
    }

    /// Right transport of `Ṙ_d` to the tangent space at `R`: `Ṙ_d R_dᵀ R`.
    pub fn transport(&self, r: &Rotation) -> Mat3 {
        self.velocity() * self.attitude.matrix().transpose() * r.matrix()
    }
}

/// `ψ = ½ k_p (x² + y²)`.
///
/// The ½ makes `dψ/dt = k_p (x ẋ + y ẏ)`, which is what the PD term and the
/// Lyapunov rate are built on.
pub fn error_function(x: f64, y: f64, gains: &Gains) -> f64 {
    0.5 * gains.kp * (x * x + y * y)
}

/// Differential of ψ pulled back to body velocities: `k_p r Rᵀ(x e2 − y e1)`,
/// so that `dψ/dt = d_psi · ω` along the rolling kinematics.
pub fn d_psi(s: &RobotState, gains: &Gains, params: &RobotParams) -> Vec3 {
    let spatial = s.x * e2() - s.y * e1();
    gains.kp * params.radius() * (s.attitude.matrix().transpose() * spatial)
}

/// Body-frame transported desired velocity `Ad_{Rᵀ} e3 = Rᵀ e3`.
///
/// Equivalent to `(Rᵀ T(Ṙ_d))^∨` for any admissible `R_d`; see
/// [`DesiredMotion::transport`].
pub fn transport_desired_velocity(r: &Rotation) -> Vec3 {
    r.body_vertical()
}

/// `e_ω = ω − Rᵀ e3`
pub fn velocity_error(s: &RobotState) -> Vec3 {
    s.omega - transport_desired_velocity(&s.attitude)
}

/// `f_ff = b × ω + ½(ω × b + J⁻¹(ω × Jb − Jω × b))` with `b = Rᵀ e3`.
pub fn feedforward(s: &RobotState, params: &RobotParams) -> Vec3 {
    let j = params.inertia();
    let b = transport_desired_velocity(&s.attitude);
    let w = &s.omega;
    let skew_part = w.cross(&j.apply(&b)) - j.apply(w).cross(&b);
    b.cross(w) + 0.5 * (w.cross(&b) + j.solve(&skew_part))
}

/// `f_pd = −J⁻¹(d_psi + k_v e_ω)`
pub fn pd_term(s: &RobotState, gains: &Gains, params: &RobotParams) -> Vec3 {
    let j = params.inertia();
    -j.solve(&(d_psi(s, gains, params) + gains.kv * velocity_error(s)))
}

pub fn control_torque(s: &RobotState, gains: &Gains, params: &RobotParams) -> ControlOutput {
    let feedforward = feedforward(s, params);
    let pd = pd_term(s, gains, params);
    ControlOutput {
        feedforward,
        pd,
        torque: params.inertia().apply(&(feedforward + pd)),
    }
}

/// Body-frame velocity carried by the right transport map, computed through
/// the matrix route: `(Rᵀ Ṙ_d R_dᵀ R)^∨`.
pub fn transported_velocity_via_map(r: &Rotation, desired: &DesiredMotion) -> Vec3 {
    let body = r.matrix().transpose() * desired.transport(r);
    // strip round-off asymmetry before vee
    vee(&((body - body.transpose()) * 0.5)).expect("skew part is skew")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dynamics;
    use crate::so3::exp_so3;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

    fn params() -> RobotParams {
        RobotParams::new(0.4, 1.0, [0.3, 0.4, 0.5]).unwrap()
    }

    fn gains() -> Gains {
        Gains::new(5.0, 1.0).unwrap()
    }

    fn tilted() -> Rotation {
        let c = FRAC_1_SQRT_2;
        Rotation::from_rows([[1.0, 0.0, 0.0], [0.0, c, -c], [0.0, c, c]]).unwrap()
    }

    fn flipped() -> Rotation {
        Rotation::from_rows([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]).unwrap()
    }

    fn at(x: f64, y: f64, r: Rotation, w: Vec3) -> RobotState {
        RobotState::new(x, y, r, w).unwrap()
    }

    #[test]
    fn gains_validation() {
        assert!(Gains::new(0.0, 1.0).is_err());
        assert!(Gains::new(1.0, 0.0).is_err());
        assert!(Gains::new(1.0, f64::NAN).is_err());
        assert!(Gains::allowing_zero_damping(1.0, 0.0).is_ok());
        assert!(Gains::allowing_zero_damping(1.0, -0.1).is_err());
    }

    #[test]
    fn error_function_values() {
        assert_eq!(error_function(0.0, 0.0, &gains()), 0.0);
        assert_eq!(error_function(4.0, 3.0, &gains()), 62.5);
        assert!(error_function(-1e-3, 0.0, &gains()) > 0.0);
    }

    #[test]
    fn d_psi_values() {
        let p = params();
        let s = at(0.0, 0.0, tilted(), Vec3::new(0.3, 0.1, 0.2));
        assert_eq!(d_psi(&s, &gains(), &p), Vec3::zeros());
        let s = at(4.0, 3.0, Rotation::identity(), Vec3::zeros());
        assert!((d_psi(&s, &gains(), &p) - Vec3::new(-6.0, 8.0, 0.0)).amax() < 1e-14);
    }

    #[test]
    fn velocity_error_values() {
        let s = at(0.0, 0.0, Rotation::identity(), e3());
        assert_eq!(velocity_error(&s), Vec3::zeros());
        let s = at(0.0, 0.0, tilted(), Vec3::zeros());
        let expected = Vec3::new(0.0, -FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
        assert!((velocity_error(&s) - expected).amax() < 1e-15);
        let s = at(0.0, 0.0, flipped(), Vec3::zeros());
        assert_eq!(velocity_error(&s), e3());
    }

    #[test]
    fn transport_values_and_rd_invariance() {
        assert_eq!(transport_desired_velocity(&Rotation::identity()), e3());
        assert_eq!(transport_desired_velocity(&flipped()), -e3());
        let r = exp_so3(&Vec3::new(0.4, -1.1, 0.7));
        let direct = transport_desired_velocity(&r);
        for angle in [0.0, 0.3, -2.0, 3.1] {
            let desired = DesiredMotion::new(Rotation::about_z(angle)).unwrap();
            let via_map = transported_velocity_via_map(&r, &desired);
            assert!((via_map - direct).amax() < 1e-14);
        }
        assert!(DesiredMotion::new(Rotation::about_x(0.1)).is_err());
    }

    #[test]
    fn feedforward_values() {
        let p = params();
        let s = at(0.0, 0.0, Rotation::identity(), e3());
        assert_eq!(feedforward(&s, &p), Vec3::zeros());
        let s = at(1.0, 2.0, tilted(), Vec3::zeros());
        assert_eq!(feedforward(&s, &p), Vec3::zeros());
    }

    #[test]
    fn feedforward_cancels_gyroscopic_term_on_target_set() {
        // Pick R with Rᵀe3 = (1,1,1)/√3 and spin along it.
        let p = params();
        let b = Vec3::new(1.0, 1.0, 1.0).normalize();
        let axis = b.cross(&e3());
        let angle = b.dot(&e3()).acos();
        let r = Rotation::from_axis_angle(&axis, angle);
        assert!((r.body_vertical() - b).amax() < 1e-15);
        let s = at(0.0, 0.0, r, b);
        // J⁻¹(b × Jb) with b = (1,1,1)/√3 is (1/3, -1/2, 1/5)/3
        let expected = Vec3::new(1.0 / 9.0, -1.0 / 6.0, 1.0 / 15.0);
        assert!((feedforward(&s, &p) - expected).amax() < 1e-15);
        let out = control_torque(&s, &gains(), &p);
        let closed = dynamics(&s, &out.torque, &p);
        assert!(closed.amax() < 1e-15);
    }

    #[test]
    fn feedforward_ignores_position_and_gains() {
        let p = params();
        let r = exp_so3(&Vec3::new(0.2, 0.3, -0.4));
        let w = Vec3::new(0.5, -0.2, 1.3);
        let a = feedforward(&at(0.0, 0.0, r, w), &p);
        let b = feedforward(&at(10.0, -3.0, r, w), &p);
        assert_eq!(a, b);
    }

    #[test]
    fn pd_term_values() {
        let p = params();
        let on_target = at(0.0, 0.0, tilted(), tilted().body_vertical());
        assert_eq!(pd_term(&on_target, &gains(), &p), Vec3::zeros());
        let s = at(4.0, 3.0, Rotation::identity(), Vec3::zeros());
        let f = pd_term(&s, &gains(), &p);
        assert!((f - Vec3::new(20.0, -20.0, 2.0)).amax() < 1e-13);
    }

    #[test]
    fn pd_term_linear_in_kv() {
        let p = params();
        let s = at(1.5, -0.5, tilted(), Vec3::new(0.1, 0.2, 0.3));
        let g1 = Gains::new(5.0, 1.0).unwrap();
        let g2 = Gains::new(5.0, 2.0).unwrap();
        let diff = pd_term(&s, &g2, &p) - pd_term(&s, &g1, &p);
        let expected = -p.inertia().solve(&velocity_error(&s));
        assert!((diff - expected).amax() < 1e-14);
    }

    #[test]
    fn control_torque_at_preset_initial_state() {
        let p = params();
        let s = at(4.0, 3.0, tilted(), Vec3::zeros());
        let out = control_torque(&s, &gains(), &p);
        assert_eq!(out.feedforward, Vec3::zeros());
        let c = FRAC_1_SQRT_2;
        let dpsi = Vec3::new(-6.0, 8.0 * c, -8.0 * c);
        let e = Vec3::new(0.0, -c, -c);
        assert!((d_psi(&s, &gains(), &p) - dpsi).amax() < 1e-14);
        let tau = -(dpsi + e);
        assert!((out.torque - tau).amax() < 1e-14);
        assert!((out.torque - Vec3::new(6.0, -4.949_747_468_305_833, 6.363_961_030_678_928)).amax() < 1e-12);
    }

    #[test]
    fn torque_on_principal_spin_is_zero() {
        let s = at(0.0, 0.0, Rotation::identity(), e3());
        assert_eq!(control_torque(&s, &gains(), &params()).torque, Vec3::zeros());
    }

    #[test]
    fn psi_rate_identity_uses_row_orthogonality() {
        // (x r2 - y r1)·r3 = 0, so d_psi·ω = d_psi·e_ω
        let p = params();
        let r = exp_so3(&Vec3::new(FRAC_PI_4, 0.3, -0.2));
        let s = at(2.0, -1.0, r, Vec3::new(0.4, 0.1, -0.9));
        let g = d_psi(&s, &gains(), &p);
        assert!(g.dot(&r.body_vertical()).abs() < 1e-14);
        assert!((g.dot(&s.omega) - g.dot(&velocity_error(&s))).abs() < 1e-14);
    }
}
