//! Deterministic audio-to-style-latent engine.
//!
//! The pipeline turns canonical mono audio and a sequence of codec embeddings
//! into per-layer style vectors for a style-based image generator:
//!
//! 1. [`audio`]: WAV decode, mono mix, polyphase resampling to 24 kHz.
//! 2. [`features`]: STFT, median-filter HPSS, percussive onset envelope and
//!    12-bin chroma, all at 50 Hz.
//! 3. [`latent`]: embedding sequences, target-space statistics and their
//!    binary file formats, plus a log-mel stand-in encoder.
//! 4. [`mapping`]: seeded random projections, per-clip standardization,
//!    leaky tanh, affine normalization with chroma-modulated mean and
//!    onset-weighted blending of two projection paths.
//! 5. [`trajectory`]: fps resampling, per-layer expansion, coarse/middle/fine
//!    smoothing and the trajectory file format.
//!
//! [`pipeline::run`] chains all of the above.
//!
//! Every stage is a pure function. Identical inputs give bitwise-identical
//! outputs.

pub mod audio;
mod error;
pub mod features;
mod format;
pub mod latent;
pub mod mapping;
mod matrix;
pub mod pipeline;
pub mod prng;
pub mod trajectory;

pub use audio::AudioBuffer;
pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureTrack, FrameSpec, Spectrogram};
pub use latent::{EmbeddingSequence, LatentStats};
pub use mapping::{LatentTrack, MapParams, ProjectionMatrix};
pub use matrix::Matrix;
pub use pipeline::{PipelineConfig, PipelineOutput};
pub use prng::Xoshiro256StarStar;
pub use trajectory::{LayerGroups, SmoothingWindows, StyleTrajectory};

/// Canonical processing rate in Hz.
pub const CANONICAL_RATE: u32 = 24_000;
/// STFT size used for all feature extraction.
pub const CANONICAL_FFT: usize = 2048;
/// Hop in samples; 24000 / 480 = 50 Hz, the embedding rate.
pub const CANONICAL_HOP: usize = 480;
/// Dimension of codec embeddings.
pub const EMBEDDING_DIM: usize = 128;
/// Frame rate of codec embeddings in Hz.
pub const EMBEDDING_RATE: f64 = 50.0;
/// Number of pitch classes.
pub const PITCH_CLASSES: usize = 12;
