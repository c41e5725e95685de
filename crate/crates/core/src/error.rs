//! Error type shared by all solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("flat strip (omega = 0): {0}")]
    FlatStrip(String),

    #[error("dimensional units required: {0}")]
    DimensionalUnitsRequired(String),

    #[error("inverse iteration failed to converge for state {state} (residual {residual:.3e} after {iterations} iterations)")]
    Convergence {
        state: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("numerov integration produced non-finite values at trial energy {energy}")]
    NumerovOverflow { energy: f64 },

    #[error("level budget exhausted: {0}; increase the level budget caps or lower the electron count")]
    LevelBudget(String),

    #[error("too few usable nodes for residual evaluation: {found} in-window interior nodes, need at least {needed}")]
    InsufficientNodes { found: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
