use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("mixing angle undefined: both envelopes vanish")]
    UndefinedAngle,

    /// The gain/loss rate cannot be formed at `time`.
    #[error("gain/loss rate diverges at t = {time}: {reason}")]
    Divergence { time: f64, reason: String },

    #[error("state became non-finite at t = {time}")]
    Overflow { time: f64 },

    #[error("waveguide geometry: {0}")]
    Geometry(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("coupling calibration: {0}")]
    Calibration(String),

    #[error("mode solver: {0}")]
    Solver(String),

    #[error("pulse table: {0}")]
    Table(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in CSV error columns and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ParameterDomain(_) => "parameter_domain",
            Error::UndefinedAngle => "undefined_angle",
            Error::Divergence { .. } => "divergence",
            Error::Overflow { .. } => "overflow",
            Error::Geometry(_) => "geometry",
            Error::Grid(_) => "grid",
            Error::Calibration(_) => "calibration",
            Error::Solver(_) => "solver",
            Error::Table(_) => "table",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }
}
