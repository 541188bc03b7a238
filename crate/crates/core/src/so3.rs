//! Small-matrix Lie group / Lie algebra operations on SO(3).
//!
//! Vectors in R^3 are identified with so(3) through [`hat`] and [`vee`]. The
//! bracket on so(3) becomes the cross product and the adjoint action becomes a
//! plain rotation of the vector. [`connection`] is the Levi-Civita connection of
//! the left-invariant metric induced by a diagonal inertia, restricted to
//! constant (pseudo-velocity) fields.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `|R^T R - I|_F` and `|det R - 1|` accepted by [`Rotation::from_matrix`].
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
/// Tolerance on `|M + M^T|_F` accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;

/// Below this angle the Rodrigues coefficients switch to their Taylor expansions.
const SMALL_ANGLE: f64 = 1e-6;
const POLAR_TOL: f64 = 1e-14;
const POLAR_MAX_ITERS: usize = 100;

pub fn e1() -> Vec3 {
    Vec3::x()
}

pub fn e2() -> Vec3 {
    Vec3::y()
}

pub fn e3() -> Vec3 {
    Vec3::z()
}

/// Wedge map R^3 -> so(3).
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds [`SKEW_TOL`].
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let residual = (m + m.transpose()).norm();
    if !residual.is_finite() || residual > SKEW_TOL {
        return Err(Error::NotSkew { residual });
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// Lie bracket on R^3 ≅ so(3), i.e. the cross product.
pub fn bracket(v: &Vec3, w: &Vec3) -> Vec3 {
    v.cross(w)
}

/// `Ad_R(w) = (R hat(w) R^T)^vee = R w`.
pub fn adjoint(r: &Rotation, w: &Vec3) -> Vec3 {
    r.0 * w
}

/// `<A, B>_Tr = ½ Tr(AᵀB)`.
pub fn trace_inner(a: &Mat3, b: &Mat3) -> f64 {
    0.5 * (a.transpose() * b).trace()
}

/// Exponential map so(3) -> SO(3) by Rodrigues' formula.
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta_sq = v.norm_squared();
    let theta = theta_sq.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
    };
    let k = hat(v);
    Rotation(Mat3::identity() + k * a + k * k * b)
}

/// Frobenius-nearest rotation to `m` (the orthogonal polar factor).
///
/// Uses the Newton iteration `R <- ½(R + R^{-T})`, which converges quadratically
/// for any `m` with positive determinant.
pub fn project_so3(m: &Mat3) -> Result<Rotation> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix to project"));
    }
    let det = m.determinant();
    if det <= 0.0 {
        return Err(Error::Reflection { det });
    }
    let mut r = *m;
    for _ in 0..POLAR_MAX_ITERS {
        let inv_t = match r.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return Err(Error::Reflection { det: r.determinant() }),
        };
        let next = (r + inv_t) * 0.5;
        let delta = (next - r).norm();
        r = next;
        if delta < POLAR_TOL {
            break;
        }
    }
    Ok(Rotation(r))
}

/// Diagonal principal inertia `J = diag(J1, J2, J3)` with strictly positive entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Inertia(Vec3);

impl Inertia {
    pub fn new(j1: f64, j2: f64, j3: f64) -> Result<Self> {
        let j = [j1, j2, j3];
        if j.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(Error::NonPositiveInertia(j));
        }
        Ok(Self(Vec3::new(j1, j2, j3)))
    }

    pub fn diagonal(&self) -> Vec3 {
        self.0
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&self.0)
    }

    /// `J v`
    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0.component_mul(v)
    }

    /// `J⁻¹ v`
    pub fn solve(&self, v: &Vec3) -> Vec3 {
        v.component_div(&self.0)
    }

    /// Whether `0 < J1 < J2 < J3` holds strictly.
    pub fn is_strictly_ordered(&self) -> bool {
        self.0.x < self.0.y && self.0.y < self.0.z
    }
}

impl TryFrom<[f64; 3]> for Inertia {
    type Error = Error;

    fn try_from(j: [f64; 3]) -> Result<Self> {
        Self::new(j[0], j[1], j[2])
    }
}

impl From<Inertia> for [f64; 3] {
    fn from(j: Inertia) -> Self {
        [j.0.x, j.0.y, j.0.z]
    }
}

/// Left-invariant Levi-Civita connection on so(3) ≅ R^3:
/// `(∇_v w) = ½ v×w + ½ J⁻¹(v×Jw − Jv×w)`.
///
/// Only the bilinear part is returned; for constant fields the Jacobian term of
/// the general connection vanishes.
pub fn connection(inertia: &Inertia, v: &Vec3, w: &Vec3) -> Vec3 {
    let jv = inertia.apply(v);
    let jw = inertia.apply(w);
    0.5 * v.cross(w) + 0.5 * inertia.solve(&(v.cross(&jw) - jv.cross(w)))
}

/// An element of SO(3), stored as a 3×3 matrix mapping body to inertial coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Checks `|RᵀR − I|_F ≤ 1e-9` and `|det R − 1| ≤ 1e-9`.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("rotation matrix"));
        }
        let orthogonality = orthogonality_error(&m);
        let det = m.determinant();
        if orthogonality > ORTHOGONALITY_TOL || (det - 1.0).abs() > ORTHOGONALITY_TOL {
            return Err(Error::NotRotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    /// Row-major construction, checked like [`Rotation::from_matrix`].
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Mat3::from_fn(|i, j| rows[i][j]))
    }

    /// Rotation by `angle` radians about a unit `axis`.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        exp_so3(&(axis.normalize() * angle))
    }

    pub fn about_x(angle: f64) -> Self {
        Self::from_axis_angle(&e1(), angle)
    }

    pub fn about_z(angle: f64) -> Self {
        Self::from_axis_angle(&e3(), angle)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Row `i` of R, i.e. `Rᵀ e_i` (the inertial axis `e_i` seen in body coordinates).
    pub fn row(&self, i: usize) -> Vec3 {
        self.0.row(i).transpose()
    }

    /// `Rᵀ e3`: the inertial vertical in body coordinates.
    pub fn body_vertical(&self) -> Vec3 {
        self.row(2)
    }

    /// `|RᵀR − I|_F`
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// Wraps a matrix produced by group operations without re-checking it.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }
}

fn orthogonality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for &Rotation {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl TryFrom<[[f64; 3]; 3]> for Rotation {
    type Error = Error;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<Rotation> for [[f64; 3]; 3] {
    fn from(r: Rotation) -> Self {
        r.to_rows()
    }
}
