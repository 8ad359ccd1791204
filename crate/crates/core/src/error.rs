use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain where the function is defined.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    /// The explicit scheme blew up. `dt` and `bound` are reported so the caller
    /// can see how far the step was from the stability limit.
    #[error(
        "instability at t = {time}: {detail} (dt = {dt:e}, stability bound = {bound:e})"
    )]
    Instability {
        time: f64,
        dt: f64,
        bound: f64,
        detail: String,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("unnormalized mass {mass:e} underflowed at t = {time}; normalize more frequently")]
    DegenerateMass { time: f64, mass: f64 },

    #[error("observation data: {0}")]
    Observation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            function,
            detail: detail.into(),
        }
    }

    /// Short stable identifier, used by the CLI for machine-readable failures.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Config(_) => "config-validation",
            Error::Instability { .. } => "instability",
            Error::NonFinite(_) => "non-finite",
            Error::DegenerateMass { .. } => "degenerate-mass",
            Error::Observation(_) => "observation",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
