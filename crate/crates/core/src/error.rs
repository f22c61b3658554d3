use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("input coordinate {index} is negative or not finite ({value})")]
    NegativeInput { index: usize, value: f64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error("batch entries have inconsistent shapes")]
    ShapeMismatch,

    #[error("cannot build a perfect matching on an odd number of units ({0})")]
    OddSize(usize),

    #[error("{samples} samples cannot be split into {subsets} non-empty subsets")]
    TooFewSamples { samples: usize, subsets: usize },

    #[error("operation requires a structured network")]
    WrongMode,

    #[error("partition does not match the network pairings")]
    InconsistentPartition,

    #[error("inadmissible coefficient index: {0}")]
    InadmissibleIndex(String),

    #[error("dimension {0} is too small")]
    TooSmall(usize),

    #[error("reconstruction is ambiguous: the signal takes only two values on a cycle of the pairing graph")]
    AmbiguousReconstruction,

    #[error("transforms are inconsistent: no signal produces both outputs")]
    InconsistentInputs,

    #[error("invalid ring model: {0}")]
    InvalidModel(String),

    #[error("correlation gap is zero")]
    ZeroGap,

    #[error("all remaining dictionary features have zero norm")]
    DegenerateDictionary,

    #[error("kernel system is singular")]
    SingularSystem,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },

    #[error("truncated file: {0}")]
    TruncatedFile(String),

    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
