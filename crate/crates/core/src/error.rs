use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("message is empty")]
    EmptyMessage,

    #[error("signal has no nonzero samples")]
    SilentSignal,

    #[error("sample rate must be positive")]
    InvalidSampleRate,

    #[error("signal rate {actual} Hz does not match the scheme rate {expected} Hz")]
    RateMismatch { expected: u32, actual: u32 },

    #[error("signal has {actual} samples, at least {needed} are required")]
    SignalTooShort { needed: usize, actual: usize },

    #[error("acquisition matrix has {rows} rows, normalization lag is {lag}")]
    TooFewRows { rows: usize, lag: usize },

    #[error("code index {index} is beyond the interpolated code length {len}")]
    CodeIndexOutOfRange { index: usize, len: usize },

    #[error("calibration baseline of tone {tone} is zero")]
    DegenerateCalibration { tone: usize },

    #[error("coded length {0} is not a multiple of the block length")]
    CodedLength(usize),

    #[error("block {block} has more errors than the code can correct")]
    Uncorrectable { block: usize },

    #[error("checksum mismatch")]
    ChecksumMismatch,

    #[error("no synchronization peak found: {0}")]
    SyncNotFound(String),

    #[error("tilt gain {gain_db} dB exceeds the +20 dB limit")]
    TiltGainTooHigh { gain_db: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
