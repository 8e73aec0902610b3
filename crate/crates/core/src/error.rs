use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("non-integer frequency {freq} on angular coordinate `{coord}`")]
    NonIntegerFrequency { coord: String, freq: f64 },
    #[error("substitution leaves closed class: {0}")]
    LeavesClass(String),
    #[error("chart mismatch: {0} vs {1}")]
    ChartMismatch(String, String),
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("point outside chart domain: {0}")]
    OutsideDomain(String),
    #[error("affine map is not invertible over the integers (det {0})")]
    NotInvertible(i64),
    #[error("wrong arity: {0}")]
    WrongArity(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("singular pullback at {0}")]
    SingularPullback(String),
    #[error("non-linear foliation: {0}")]
    NonLinear(String),
    #[error("degenerate singularity at ({0}, {1})")]
    Degenerate(f64, f64),
    #[error("zeros not isolated near ({0}, {1})")]
    NotIsolated(f64, f64),
    #[error("resolution failure: {0}")]
    Resolution(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("field leaves the plane spanned by the frame at {0}")]
    LeavesPlane(String),
    #[error("zero vector at {0}")]
    ZeroVector(String),
    #[error("winding did not converge (residual {0})")]
    NoConvergence(f64),
    #[error("model file error at line {line}: {msg}")]
    ModelFile { line: usize, msg: String },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code used by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "E_PARSE",
            Error::UnknownCoordinate(_) => "E_UNKNOWN_COORD",
            Error::NonIntegerFrequency { .. } => "E_FREQ",
            Error::LeavesClass(_) => "E_CLASS",
            Error::ChartMismatch(..) => "E_CHART",
            Error::Dimension(_) => "E_DIM",
            Error::OutsideDomain(_) => "E_DOMAIN",
            Error::NotInvertible(_) => "E_MAP",
            Error::WrongArity(_) => "E_ARITY",
            Error::Precondition(_) => "E_PRECONDITION",
            Error::SingularPullback(_) => "E_SINGULAR",
            Error::NonLinear(_) => "E_NONLINEAR",
            Error::Degenerate(..) => "E_DEGENERATE",
            Error::NotIsolated(..) => "E_NOT_ISOLATED",
            Error::Resolution(_) => "E_RESOLUTION",
            Error::Construction(_) => "E_CONSTRUCTION",
            Error::LeavesPlane(_) => "E_PLANE",
            Error::ZeroVector(_) => "E_ZERO",
            Error::NoConvergence(_) => "E_CONVERGENCE",
            Error::ModelFile { .. } => "E_MODEL_FILE",
            Error::UnknownModel(_) => "E_UNKNOWN_MODEL",
            Error::Io(_) => "E_IO",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
