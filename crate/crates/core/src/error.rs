use thiserror::Error;

use crate::embio::EmbioError;
use crate::eval::EvalError;
use crate::manifold::ManifoldError;
use crate::meta::MetaError;
use crate::optimizer::SolverError;
use crate::params::ParamsError;

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Embio(#[from] EmbioError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
