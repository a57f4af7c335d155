use thiserror::Error;

/// Errors raised by the library. `name()` gives the stable identifier the CLI prints on stderr.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("shift matrix is not normal (commutator norm {0:.3e})")]
    NonNormalShift(f64),
    #[error("shift matrix is not symmetric; use the complex spectrum")]
    NotSymmetric,
    #[error("source set is empty")]
    EmptySources,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("invalid vertex subset: {0}")]
    InvalidSubset(String),
    #[error("degree {degree} exceeds |V| - 1 = {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("operation requires a Laplacian shift")]
    RequiresLaplacian,
    #[error("expected {expected} parameters, got {got}")]
    BadParamCount { expected: usize, got: usize },
    #[error("interior block is singular (condition number {0:.3e})")]
    SingularInterior(f64),
    #[error("every eigenvector projects to zero on the subset")]
    EmptyProjection,
    #[error("fixed coefficient (set {set}, power {power}) does not exist")]
    InfeasibleConstraint { set: usize, power: usize },
    #[error("filter is not a single-set filter on the observed subset")]
    NotSingleSet,
    #[error("signal has zero norm")]
    ZeroSignal,
    #[error("reference anomaly score {0:.3e} is degenerate")]
    DegenerateReference(f64),
    #[error("noisy signal equals the clean signal")]
    ZeroNoise,
    #[error("invalid bandwidth {bandwidth} for {n} vertices")]
    InvalidBandwidth { bandwidth: usize, n: usize },
    #[error("vertices {0} and {1} lie in different components")]
    DisconnectedPair(usize, usize),
    #[error("operator family {0} is not supported here")]
    FamilyUnsupported(String),
    #[error("enumeration over 2^{0} patterns is too large")]
    TooLarge(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::NonNormalShift(_) => "NonNormalShift",
            Error::NotSymmetric => "NotSymmetric",
            Error::EmptySources => "EmptySources",
            Error::InvalidParams(_) => "InvalidParams",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::DisconnectedGraph => "DisconnectedGraph",
            Error::InvalidSubset(_) => "InvalidSubset",
            Error::DegreeOverflow { .. } => "DegreeOverflow",
            Error::RequiresLaplacian => "RequiresLaplacian",
            Error::BadParamCount { .. } => "BadParamCount",
            Error::SingularInterior(_) => "SingularInterior",
            Error::EmptyProjection => "EmptyProjection",
            Error::InfeasibleConstraint { .. } => "InfeasibleConstraint",
            Error::NotSingleSet => "NotSingleSet",
            Error::ZeroSignal => "ZeroSignal",
            Error::DegenerateReference(_) => "DegenerateReference",
            Error::ZeroNoise => "ZeroNoise",
            Error::InvalidBandwidth { .. } => "InvalidBandwidth",
            Error::DisconnectedPair(..) => "DisconnectedPair",
            Error::FamilyUnsupported(_) => "FamilyUnsupported",
            Error::TooLarge(_) => "TooLarge",
            Error::Config(_) => "Config",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    /// True for errors caused by bad input files or parameters rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGraph(_)
                | Error::InvalidParams(_)
                | Error::InvalidSubset(_)
                | Error::BadParamCount { .. }
                | Error::InfeasibleConstraint { .. }
                | Error::InvalidBandwidth { .. }
                | Error::DegreeOverflow { .. }
                | Error::Config(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::TooLarge(_)
                | Error::FamilyUnsupported(_)
                | Error::EmptySources
                | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
