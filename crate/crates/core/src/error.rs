use thiserror::Error;

use crate::dyadic::Point;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input: unknown names, inconsistent parameters, cubes outside the box.
    #[error("usage error: {0}")]
    Usage(String),
    /// Refinement produced nothing usable at the requested depth.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A structural invariant was violated (disconnected graph and the like).
    #[error("internal error: {0}")]
    Internal(String),
    #[error("evaluation error at ({:.6}, {:.6}): {msg}", at[0], at[1])]
    Evaluation { at: Point, msg: String },
    #[error("quadrature failed on cube {cube}: {source}")]
    Quadrature {
        cube: String,
        #[source]
        source: std::boxed::Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for validation problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
