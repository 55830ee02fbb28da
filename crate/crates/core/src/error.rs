use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("point {index} is not on the unit sphere (norm {norm})")]
    NonUnitPoint { index: usize, norm: f64 },
    #[error("sites {first} and {second} coincide")]
    DuplicateSite { first: usize, second: usize },
    #[error("grid has no antipodal structure: {0}")]
    NoAntipodalStructure(String),
    #[error("Coulomb relaxation did not converge (gradient norm {grad_norm:e})")]
    NonConvergence { grad_norm: f64 },
    #[error("jump angle {theta} is not resolvable on this grid (allowed [{min}, {max}])")]
    JumpUnresolvable { theta: f64, min: f64, max: f64 },
    #[error("lawn needs an even number of sites, got {0}")]
    OddSiteCount(usize),
    #[error("state and interaction table were built on different grids")]
    GridMismatch,
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("symmetry incompatible: {0}")]
    SymmetryIncompatible(String),
    #[error("spectra have different cutoffs ({0} vs {1})")]
    CutoffMismatch(usize, usize),
    #[error("boundary is degenerate: {0}")]
    DegenerateBoundary(String),
    #[error("no stripe structure: {0}")]
    NoStripeStructure(String),
    #[error("invalid cog geometry: {0}")]
    InvalidGeometry(String),
    #[error("jump circle tangency could not be resolved")]
    TangencyUnresolved,
    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureNotConverged { estimate: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedFile(_) => "MalformedFile",
            Error::NonUnitPoint { .. } => "NonUnitPoint",
            Error::DuplicateSite { .. } => "DuplicateSite",
            Error::NoAntipodalStructure(_) => "NoAntipodalStructure",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::JumpUnresolvable { .. } => "JumpUnresolvable",
            Error::OddSiteCount(_) => "OddSiteCount",
            Error::GridMismatch => "GridMismatch",
            Error::InvalidMove(_) => "InvalidMove",
            Error::SymmetryIncompatible(_) => "SymmetryIncompatible",
            Error::CutoffMismatch(..) => "CutoffMismatch",
            Error::DegenerateBoundary(_) => "DegenerateBoundary",
            Error::NoStripeStructure(_) => "NoStripeStructure",
            Error::InvalidGeometry(_) => "InvalidGeometry",
            Error::TangencyUnresolved => "TangencyUnresolved",
            Error::QuadratureNotConverged { .. } => "QuadratureNotConverged",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
