use thiserror::Error;

/// Errors raised by the library.
///
/// Construction errors signal invalid inputs (a caller bug or a bad config);
/// `Diverged` is the only error a well-formed simulation can produce.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not skew-symmetric (|M + M^T|_F = {residual:e})")]
    NotSkew { residual: f64 },

    #[error("matrix is not a rotation (|R^T R - I|_F = {orthogonality:e}, det = {det})")]
    NotRotation { orthogonality: f64, det: f64 },

    #[error("matrix has non-positive determinant {det}; cannot project onto SO(3)")]
    Reflection { det: f64 },

    #[error("inertia components must be strictly positive, got {0:?}")]
    NonPositiveInertia([f64; 3]),

    #[error("principal inertias must satisfy 0 < J1 < J2 < J3, got {0:?}")]
    InertiaOrdering([f64; 3]),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("simulation diverged at t = {t} (step {step}, |omega| = {omega_norm:e})")]
    Diverged {
        t: f64,
        step: usize,
        omega_norm: f64,
    },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("sweep grid is empty")]
    EmptyGrid,

    #[error("desired attitude must fix the vertical axis (|R_d e3 - e3| = {0:e})")]
    DesiredAttitude(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
