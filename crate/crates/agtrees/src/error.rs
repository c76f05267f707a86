//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by tree operations, samplers, the verifier and the harness.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A parameter pair or urn weight vector is outside its admissible domain.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// Two inputs that must have equal lengths do not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch {
        /// Required length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
    /// A count, size or index is outside its allowed range.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// A leaf label is already present in the tree.
    #[error("duplicate label {0}")]
    DuplicateLabel(usize),
    /// A leaf label is not present in the tree.
    #[error("missing label {0}")]
    MissingLabel(usize),
    /// A part address does not resolve in the tree it is applied to.
    #[error("dangling address {0}")]
    DanglingAddress(String),
    /// Deleting the only leaf of a tree.
    #[error("cannot delete the last leaf of a tree")]
    LastLeaf,
    /// A label swap that the semi-planar chain never performs.
    #[error("inadmissible swap of labels {0} and {1}")]
    InadmissibleSwap(usize, usize),
    /// An operation produced a planar tree that is not semi-planar.
    #[error("not a semi-planar tree: {0}")]
    NotSemiPlanar(String),
    /// The text or JSON representation of a tree could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// A weight table has zero total weight.
    #[error("zero total weight")]
    ZeroWeight,
    /// Masses of a decorated or collapsed tree violate their invariants.
    #[error("invalid masses: {0}")]
    InvalidMasses(String),
    /// The state or parts do not match the requested model variant.
    #[error("variant mismatch: {0}")]
    VariantMismatch(String),
    /// An enumeration would exceed its configured size cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    /// Two objects that must share dimensions or state spaces do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// Input/output failure in the harness.
    #[error("i/o error: {0}")]
    Io(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
