use thiserror::Error;

pub type Result<T, E = RimflowError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RimflowError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is not even in zeta (relative asymmetry {asymmetry:.3e})")]
    NonEven { asymmetry: f64 },

    #[error("reality violated: conjugate-symmetry defect {defect:.3e}")]
    RealityViolation { defect: f64 },

    #[error("film rupture: minimum height {min_h:.6e} below threshold")]
    Rupture { min_h: f64 },

    #[error("blow-up: H^4 norm {h4_norm:.6e} exceeds cap")]
    BlowUp { h4_norm: f64 },

    #[error("step rejected: error estimate {error:.3e} exceeds tolerance {tolerance:.3e}")]
    StepRejected { error: f64, tolerance: f64 },

    #[error("time step underflow at t = {t}: dt = {dt:.3e}")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (smallest singular value estimate {sigma_min:.3e})")]
    SingularJacobian { sigma_min: f64 },

    #[error("continuation failed at delta = {delta} (min h = {min_h:.4e}): {source}")]
    ContinuationFailed {
        delta: f64,
        min_h: f64,
        #[source]
        source: Box<RimflowError>,
    },

    #[error("height field not positive (minimum {min_h:.6e})")]
    Positivity { min_h: f64 },

    #[error("state left the positivity region: 2|a1| + |b| = {extent:.6} >= {limit:.6}")]
    ValidityExit { extent: f64, limit: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RimflowError {
    /// True for failures of the numerics (rupture, blow-up, non-convergence)
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            RimflowError::Rupture { .. }
                | RimflowError::BlowUp { .. }
                | RimflowError::StepUnderflow { .. }
                | RimflowError::NoConvergence { .. }
                | RimflowError::SingularJacobian { .. }
                | RimflowError::ContinuationFailed { .. }
                | RimflowError::ValidityExit { .. }
                | RimflowError::Solver(_)
                | RimflowError::Eigen(_)
                | RimflowError::Positivity { .. }
        )
    }
}
