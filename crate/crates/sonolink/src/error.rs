use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}: WAV has {1} channels, only mono is supported")]
    MultiChannel(PathBuf, u16),

    #[error("{0}: sample rate {1} Hz is below 44100 Hz")]
    RateTooLow(PathBuf, u32),

    #[error("{0}: unsupported encoding ({1})")]
    UnsupportedEncoding(PathBuf, String),

    #[error("{0}: truncated WAV container")]
    Truncated(PathBuf),

    #[error("{0}: malformed WAV: {1}")]
    MalformedWav(PathBuf, String),

    #[error("sample {index} = {value} is outside [-1, 1]")]
    SampleOutOfRange { index: usize, value: f64 },

    #[error("cannot write WAV at {0} Hz, use 44100 or 48000")]
    UnsupportedOutputRate(u32),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] sonolink_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
