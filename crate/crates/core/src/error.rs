use thiserror::Error;

use crate::bits::BitString;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("inconsistent functional: axioms ({0}, {1}) and ({2}, {3}) disagree")]
    InconsistentFunctional(BitString, BitString, BitString, BitString),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("oracle too short: need {needed} bits, got {got}")]
    OracleTooShort { needed: usize, got: usize },

    #[error("tree too shallow above {0}: fewer than two survivors within depth {1}")]
    TreeTooShallow(BitString, usize),

    #[error("no survivors above {0}")]
    NoSurvivors(BitString),

    #[error("g is infinite for family {family} above {sigma}")]
    InfiniteG { family: u64, sigma: BitString },

    #[error("measure bound violated at level {level}: {detail}")]
    MeasureBound { level: usize, detail: String },

    #[error("density violated: no extension into the shifted set above {0}")]
    NotDense(BitString),

    #[error("not a tree: {0} is present but its parent is not")]
    NotATree(BitString),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
