use thiserror::Error;

use crate::markdown::SolverError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("policy posted {price} outside [0, {p_max}] in round {t}")]
    PriceOutOfRange { t: usize, price: f64, p_max: f64 },
    #[error("horizon of {0} rounds exhausted")]
    Exhausted(usize),
    #[error("reference {target} cannot be reached from {current}")]
    Unreachable { current: f64, target: f64 },
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
