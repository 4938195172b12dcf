use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HoroError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("height must be positive, got {0}")]
    NonpositiveHeight(f64),
    #[error("adaptive step control failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },
    #[error("quadrature did not reach tolerance (estimate {estimate:e}, requested {requested:e})")]
    QuadratureFailure { estimate: f64, requested: f64 },
    #[error("no sign change found: {0}")]
    BracketFailure(String),
    #[error("collar parameter search exhausted at k = {k:e}")]
    SearchExhausted { k: f64 },
    #[error("grid too small: {0}")]
    DegenerateGrid(String),
    #[error("stencil does not fit the grid: {0}")]
    DegenerateStencil(String),
    #[error("series start and integrator disagree by {mismatch:e} at the patch boundary")]
    SeriesRadiusTooLarge { mismatch: f64 },
    #[error("branch structure contradicts the expected sign pattern: {0}")]
    BranchMisclassified(String),
    #[error("not enough samples: {0}")]
    InsufficientSamples(String),
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("linear system is singular at pivot {pivot}")]
    SingularMatrix { pivot: usize },
    #[error("iterate crossed the positivity floor {floor:e}")]
    FloorViolation { floor: f64 },
    #[error("i/o failure: {0}")]
    Io(String),
}

impl HoroError {
    /// Stable identifier used on diagnostic streams.
    pub fn name(&self) -> &'static str {
        match self {
            HoroError::InvalidInput(_) => "InvalidInput",
            HoroError::NonpositiveHeight(_) => "NonpositiveHeight",
            HoroError::StepFailure { .. } => "StepFailure",
            HoroError::QuadratureFailure { .. } => "QuadratureFailure",
            HoroError::BracketFailure(_) => "BracketFailure",
            HoroError::SearchExhausted { .. } => "SearchExhausted",
            HoroError::DegenerateGrid(_) => "DegenerateGrid",
            HoroError::DegenerateStencil(_) => "DegenerateStencil",
            HoroError::SeriesRadiusTooLarge { .. } => "SeriesRadiusTooLarge",
            HoroError::BranchMisclassified(_) => "BranchMisclassified",
            HoroError::InsufficientSamples(_) => "InsufficientSamples",
            HoroError::NewtonDiverged { .. } => "NewtonDiverged",
            HoroError::SingularMatrix { .. } => "SingularMatrix",
            HoroError::FloorViolation { .. } => "FloorViolation",
            HoroError::Io(_) => "Io",
        }
    }

    /// Input-validation errors, as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HoroError::InvalidInput(_)
                | HoroError::NonpositiveHeight(_)
                | HoroError::DegenerateGrid(_)
                | HoroError::Io(_)
        )
    }
}

impl From<std::io::Error> for HoroError {
    fn from(e: std::io::Error) -> Self {
        HoroError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HoroError>;

pub(crate) fn invalid(msg: impl Into<String>) -> HoroError {
    HoroError::InvalidInput(msg.into())
}
