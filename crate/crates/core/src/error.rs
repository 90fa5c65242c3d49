use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller-side precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The configuration produces a degenerate (all-zero) quantity.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation leakage {leakage:.3e} exceeds bound {bound:.3e} (n_max = {n_max})")]
    Truncation {
        leakage: f64,
        bound: f64,
        n_max: usize,
    },

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("least-squares fit failed: {0}")]
    Fit(String),

    #[error("no counts recorded for setting (phi_s = {phi_s:.6}, phi_i = {phi_i:.6})")]
    EmptySetting { phi_s: f64, phi_i: f64 },

    #[error("correlation undefined: all four coincidence counts are zero")]
    UndefinedCorrelation,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown parameter path `{0}`")]
    UnknownParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownParameter(_) | Error::UnknownMode(_) => 2,
            Error::Io(_) | Error::Csv(_) => 2,
            _ => 3,
        }
    }
}
