use thiserror::Error;

use crate::fit::FitCandidate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite {term} at n={n:e}, d={d:e}")]
    Eval { term: &'static str, n: f64, d: f64 },

    #[error("unsupported law: {0}")]
    UnsupportedLaw(String),

    #[error("limit is path-dependent: {0}")]
    PathDependentLimit(String),

    #[error("no start converged; best candidate objective {:e} after {} iterations", .0.objective, .0.iterations)]
    FitFailure(Box<FitCandidate>),

    #[error("sweep plan is empty after pruning to D/N in [{min}, {max}]")]
    EmptyPlan { min: f64, max: f64 },

    #[error("target {target:e} outside supported range [{min:e}, {max:e}]")]
    OutOfRange { target: f64, min: f64, max: f64 },

    #[error("no exact factorization of gbz={gbz}; nearest feasible gbz: {below:?} below, {above:?} above")]
    Infeasible {
        gbz: u64,
        below: Option<u64>,
        above: Option<u64>,
    },

    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("law file: {0}")]
    LawFile(String),

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Process exit status classes shared with the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Usage = 1,
    Data = 2,
    Numeric = 3,
}

impl Error {
    pub fn exit_class(&self) -> ExitClass {
        match self {
            Error::InvalidArgument(_)
            | Error::OutOfRange { .. }
            | Error::EmptyPlan { .. }
            | Error::Infeasible { .. }
            | Error::Parse { .. }
            | Error::LawFile(_)
            | Error::File { .. }
            | Error::Io(_) => ExitClass::Data,
            Error::Eval { .. } | Error::UnsupportedLaw(_) | Error::PathDependentLimit(_) | Error::FitFailure(_) => {
                ExitClass::Numeric
            }
        }
    }
}

pub(crate) fn file_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
