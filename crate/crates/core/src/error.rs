use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidGrid { width: usize, height: usize, cell_size: f64 },
    InvalidComponent { index: usize, reason: &'static str },
    EmptyMixture,
    /// The mixture puts no (representable) density on any cell center.
    ZeroDensity,
    InvalidComponentCount(usize),
    InvalidMass { x: usize, y: usize, value: f64 },
    DimensionMismatch { expected: usize, found: usize },
    OutOfBounds { x: i64, y: i64 },
    IllegalAction { x: usize, y: usize, action: &'static str },
    EmptyActionSet,
    InvalidConfig(&'static str),
    DesignMismatch { expected: usize, found: usize },
    EmptyBatch,
    NonFinite { iteration: usize },
    EnumerationBudget { branches: u128, budget: u128 },
    NonAdjacentPath { index: usize },
    InsufficientBatches { required: usize, found: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid { width, height, cell_size } => write!(
                f,
                "invalid grid {width}x{height} with cell size {cell_size}: need width, height >= 1 and cell size > 0"
            ),
            Error::InvalidComponent { index, reason } => {
                write!(f, "mixture component {index}: {reason}")
            }
            Error::EmptyMixture => f.write_str("mixture has no components"),
            Error::ZeroDensity => {
                f.write_str("mixture density is zero on every cell center (mass lies outside the grid)")
            }
            Error::InvalidComponentCount(n) => write!(f, "need at least one component, got {n}"),
            Error::InvalidMass { x, y, value } => {
                write!(f, "cell ({x}, {y}) has invalid mass {value}: must be finite and >= 0")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "expected {expected} values, found {found}")
            }
            Error::OutOfBounds { x, y } => write!(f, "cell ({x}, {y}) lies outside the grid"),
            Error::IllegalAction { x, y, action } => {
                write!(f, "action {action} leaves the grid from ({x}, {y})")
            }
            Error::EmptyActionSet => f.write_str("no legal actions"),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::DesignMismatch { expected, found } => write!(
                f,
                "feature design mismatch: expected feature dimension {expected}, found {found}"
            ),
            Error::EmptyBatch => f.write_str("need at least one trajectory"),
            Error::NonFinite { iteration } => {
                write!(f, "non-finite policy gradient at iteration {iteration}")
            }
            Error::EnumerationBudget { branches, budget } => write!(
                f,
                "trajectory tree has {branches} branches, over the enumeration budget of {budget}"
            ),
            Error::NonAdjacentPath { index } => {
                write!(f, "path cells {} and {index} are not 4-adjacent or leave the grid", index - 1)
            }
            Error::InsufficientBatches { required, found } => {
                write!(f, "need at least {required} batches, got {found}")
            }
        }
    }
}

impl core::error::Error for Error {}
