use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a {point} point does not belong to a {system} system")]
    VariantMismatch {
        point: &'static str,
        system: &'static str,
    },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("weights sum to {0}, expected 1")]
    WeightSum(String),

    #[error("cost matrix is {rows}x{cols}, expected a square matrix")]
    NonSquare { rows: usize, cols: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("{what} cap exceeded: {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("exact arithmetic unavailable: {0}")]
    NotExact(String),

    #[error("covering property violated: {0}")]
    CoveringViolated(String),

    #[error("not periodic: {0}")]
    NotPeriodic(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn cap_check(what: &'static str, value: usize, cap: usize) -> Result<()> {
    if value > cap {
        Err(Error::CapExceeded {
            what,
            value: value as u128,
            cap: cap as u128,
        })
    } else {
        Ok(())
    }
}
