use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid must be finite, strictly increasing and hold at least 3 points: {0}")]
    InvalidGrid(String),
    #[error("no observations supplied")]
    EmptyData,
    #[error("bandwidth must be positive and finite, got {0}")]
    NonpositiveBandwidth(f64),
    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid data-generating specification: {0}")]
    InvalidSpec(String),
    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("rank condition fails at every grid point (instrument irrelevant or regression flat)")]
    NoValidPoints,
    #[error("instrument needs at least two distinct values, found {0}")]
    InsufficientInstrument(usize),
    #[error("instrument label `{0}` not found")]
    LabelNotFound(String),
    #[error("curves are defined on different grids")]
    GridMismatch,
    #[error("CME anchor {0} is masked or outside the grid")]
    AnchorMasked(f64),
    #[error("valid skedastic sub-range covers only {0:.3} of the grid mass (< 0.5)")]
    SkedasticRangeTooSmall(f64),
    #[error("value {0} out of range")]
    OutOfRange(f64),
    #[error("target point {0} falls on a masked region of the corrected curve")]
    MaskedTarget(f64),
    #[error("invalid external marginal: {0}")]
    InvalidMarginal(String),
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("every replication masked every evaluation point")]
    AllRepsFailed,
}
