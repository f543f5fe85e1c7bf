/// Errors raised by point-cloud construction, rigid transforms and PLY I/O.
#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("{what} has {actual} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },

    #[error("rotation is not orthonormal with determinant +1")]
    NotARotation,

    #[error("transform has a non-finite entry")]
    NonFiniteTransform,

    #[error("output cloud does not match the input: {0}")]
    SizeMismatch(String),

    #[error("malformed PLY header: {0}")]
    MalformedHeader(String),

    #[error("unsupported PLY format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed PLY body: {0}")]
    MalformedBody(String),

    #[error("PLY body ended after {read} of {expected} vertices")]
    TruncatedBody { expected: usize, read: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
