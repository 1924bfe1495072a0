use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("label index {0} out of range (expected 0..20)")]
    LabelOutOfRange(u8),
    #[error("joint index {0} out of range (expected 0..16)")]
    JointOutOfRange(u8),
    #[error("buffer of length {len} does not match {height}x{width}x{channels}")]
    BadBuffer {
        len: usize,
        height: usize,
        width: usize,
        channels: usize,
    },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}
