use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A bit width is zero or larger than the supported maximum.
    Width { bits: u32, max: u32 },
    /// A truth table does not have `2^bits` entries.
    TableLength { expected: usize, found: usize },
    /// A table entry does not fit in the declared output width.
    EntryOutOfRange { index: usize, value: u32, bits: u32 },
    /// Two operands that must agree in width do not.
    WidthMismatch { left: u32, right: u32 },
    /// A table was required to be a bijection and is not.
    NotPermutation,
    /// A set is too large to enumerate under the given cap.
    TooLarge { dimension: u32, cap: u64 },
    /// A counting attack was asked to run on zero plaintext pairs.
    InsufficientData,
    /// A statistical check was requested with too few trials.
    InsufficientTrials { requested: u64, minimum: u64 },
    /// A parameter is outside the domain of the operation.
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Width { bits, max } => write!(f, "bit width {bits} outside 1..={max}"),
            Error::TableLength { expected, found } => {
                write!(f, "table has {found} entries, expected {expected}")
            }
            Error::EntryOutOfRange { index, value, bits } => {
                write!(f, "entry {index} = {value:#x} does not fit in {bits} bits")
            }
            Error::WidthMismatch { left, right } => write!(f, "width mismatch: {left} vs {right}"),
            Error::NotPermutation => f.write_str("table is not a permutation"),
            Error::TooLarge { dimension, cap } => {
                write!(f, "set of size 2^{dimension} exceeds enumeration cap {cap}")
            }
            Error::InsufficientData => f.write_str("insufficient data: no plaintext pairs requested"),
            Error::InsufficientTrials { requested, minimum } => {
                write!(f, "insufficient trials: {requested} requested, at least {minimum} required")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for Error {}
