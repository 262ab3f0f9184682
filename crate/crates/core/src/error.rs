use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // audio
    #[error("malformed RIFF/WAVE container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("audio contains no frames")]
    EmptyAudio,
    #[error("sample count {len} is not divisible by {channels} channels")]
    LengthMismatch { len: usize, channels: usize },

    // features
    #[error("audio too short: {len} samples, need at least {needed}")]
    AudioTooShort { len: usize, needed: usize },
    #[error("invalid frame spec: {0}")]
    BadFrameSpec(String),

    // binary formats
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("payload size mismatch: header declares {declared} bytes, found {actual}")]
    TruncatedPayload { declared: u64, actual: u64 },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("invalid stats: {0}")]
    InvalidStats(String),
    #[error("invalid embeddings: {0}")]
    InvalidEmbeddings(String),

    // statistics
    #[error("need at least {needed} w samples, got {got}")]
    TooFewSamples { got: usize, needed: usize },

    // mapping
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("need at least {needed} frames, got {got}")]
    TooFewFrames { got: usize, needed: usize },
    #[error("invalid chroma frame {frame}: {reason}")]
    BadChroma { frame: usize, reason: String },
    #[error("rate mismatch: {a} Hz vs {b} Hz")]
    RateMismatch { a: f64, b: f64 },
    #[error("frame count mismatch: {a} vs {b}")]
    FrameCountMismatch { a: usize, b: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),

    // trajectory
    #[error("layer count {0} too small; need at least 3")]
    BadLayerCount(usize),
    #[error("invalid layer groups: {0}")]
    BadGroups(String),
    #[error("invalid smoothing windows: {0}")]
    BadWindows(String),
    #[error("window {window} too large for {frames} frames")]
    WindowTooLarge { window: usize, frames: usize },
}
