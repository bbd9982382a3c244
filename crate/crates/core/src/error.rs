use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    Distribution(String),
    #[error("invalid site profile: {0}")]
    Profile(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("potential out of range: {0}")]
    Potential(String),
    #[error("configuration region does not match the box: {0}")]
    RegionMismatch(String),
    #[error("solver failed to converge: {what} (iterations {iterations}, residual {residual:e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },
    #[error("singular factorization at pivot {0}")]
    Singular(usize),
    #[error("scale error: {0}")]
    Scale(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Distribution(_) => "distribution",
            Error::Profile(_) => "profile",
            Error::Geometry(_) => "geometry",
            Error::Grid(_) => "grid",
            Error::Potential(_) => "potential",
            Error::RegionMismatch(_) => "region_mismatch",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Singular(_) => "singular",
            Error::Scale(_) => "scale",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
