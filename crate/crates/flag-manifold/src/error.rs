use thiserror::Error;

/// Errors produced by flag-manifold operations.
#[derive(Debug, Error)]
pub enum FlagError {
    #[error("invalid flag signature: {0}")]
    InvalidSignature(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error(
        "matrix is not orthonormal: residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    NotOrthonormal { residual: f64, tolerance: f64 },

    #[error("projector tuple violates its invariants: {0}")]
    InvalidProjector(String),

    #[error("matrix is not tangent at the base point: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotTangent { residual: f64, tolerance: f64 },

    #[error("operands have different flag signatures")]
    SignatureMismatch,

    #[error("tangent vectors are attached to different base points")]
    BaseMismatch,

    #[error("negative parameter where a nonnegative one is required: {0}")]
    NegativeParameter(f64),

    #[error("relative rotation has an eigenvalue at -1; the principal logarithm is ambiguous")]
    DegenerateRotation,

    #[error("transport series did not converge within {max_terms} terms (|tB| = {norm:.3e}); subdivide the step")]
    TransportSeriesDiverged { max_terms: usize, norm: f64 },

    #[error(
        "objective provides no second derivatives and the finite-difference fallback is disabled"
    )]
    MissingHessian,

    #[error("Hessian system is singular beyond the regularization threshold")]
    SingularHessian,

    #[error("not a descent direction: initial slope {slope:.3e} is nonnegative")]
    NotDescentDirection { slope: f64 },

    #[error("line search found no sufficient decrease after {attempts} attempts")]
    LineSearchStall { attempts: usize },

    #[error("inconsistent projection-coordinate velocity: {0}")]
    InconsistentVelocity(String),
}

pub type Result<T> = std::result::Result<T, FlagError>;
