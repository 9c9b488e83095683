use thiserror::Error;

use crate::ode::IntegrationError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    /// A machine document parsed but violates a structural invariant.
    #[error("invalid machine: {0}")]
    InvalidMachine(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("digit {digit} outside the alphabet 0..={max}")]
    DigitOutOfRange { digit: u32, max: u32 },

    #[error("expansion does not terminate within {0} digits")]
    NonTerminating(usize),

    #[error("digit {0} is reserved (k-1) and cannot appear in a valid encoding")]
    ReservedDigit(u32),

    #[error("ambiguous decode: {0}")]
    Ambiguous(String),

    #[error("interpolation grid: {0}")]
    Grid(String),

    #[error("no proved bound for this region: {0}")]
    BoundRegion(String),

    #[error("unknown elementary function `{0}`")]
    UnknownElementary(String),

    #[error("incompatible systems: {0}")]
    Incompatible(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("constant overflows f64: {name} = {exact}")]
    Overflow { name: String, exact: String },

    #[error("compiled document: {0}")]
    Document(String),

    #[error(transparent)]
    Integration(#[from] IntegrationError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
