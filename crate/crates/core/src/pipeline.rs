//! End-to-end composition: canonical audio (+ optional embeddings) and
//! target statistics in, smoothed per-layer trajectory out.

use log::{debug, info};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{self, FeatureTrack};
use crate::latent::{mock_encode, EmbeddingSequence, LatentStats};
use crate::mapping::{map_pipeline, LatentTrack, MapParams};
use crate::trajectory::{
    default_groups, expand_to_layers, resample_track, smooth_hierarchical, SmoothingWindows,
    StyleTrajectory,
};
use crate::CANONICAL_RATE;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub params: MapParams,
    pub fps: f64,
    pub windows: SmoothingWindows,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            params: MapParams::default(),
            fps: 30.0,
            windows: SmoothingWindows::default(),
        }
    }
}

/// Everything a run produced, for reporting and inspection.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub trajectory: StyleTrajectory,
    /// Onset-blended style track at the embedding rate, before fps resampling.
    pub latent: LatentTrack,
    pub chroma: FeatureTrack,
    pub onset: FeatureTrack,
    pub embeddings: EmbeddingSequence,
    /// True when the embeddings came from the built-in mock encoder.
    pub mock_encoded: bool,
}

/// Brings feature tracks onto the embedding grid and trims all three to a
/// common length.
pub fn align_features(
    emb: &mut EmbeddingSequence,
    chroma: &mut FeatureTrack,
    onset: &mut FeatureTrack,
) -> Result<()> {
    if emb.rate.is_nan() || emb.rate <= 0.0 {
        return Err(Error::BadParameter(format!(
            "embedding rate {} must be positive",
            emb.rate
        )));
    }
    if chroma.rate != emb.rate {
        debug!("resampling features {} Hz -> {} Hz", chroma.rate, emb.rate);
        *chroma = resample_track(chroma, emb.rate)?;
        chroma.renormalize_chroma();
        *onset = resample_track(onset, emb.rate)?;
    }
    let len = emb.len().min(chroma.len()).min(onset.len());
    if len != emb.len() || len != chroma.len() {
        info!(
            "trimming to {len} frames (embeddings {}, features {})",
            emb.len(),
            chroma.len()
        );
    }
    emb.frames.truncate_rows(len);
    chroma.frames.truncate_rows(len);
    onset.frames.truncate_rows(len);
    Ok(())
}

/// Runs the full chain on canonical mono audio.
///
/// When `embeddings` is `None` the mock encoder stands in for the codec.
pub fn run(
    audio: &AudioBuffer,
    embeddings: Option<EmbeddingSequence>,
    stats: &LatentStats,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    if audio.sample_rate != CANONICAL_RATE || audio.channels != 1 {
        return Err(Error::BadParameter(format!(
            "pipeline expects {CANONICAL_RATE} Hz mono, got {} Hz x{}",
            audio.sample_rate, audio.channels
        )));
    }
    config.params.validate()?;
    config.windows.validate()?;
    if !(config.fps.is_finite() && config.fps > 0.0) {
        return Err(Error::BadParameter(format!(
            "fps {} must be positive",
            config.fps
        )));
    }
    let layers = stats.num_layers as usize;
    let groups = default_groups(layers)?;

    let (mut chroma, mut onset) = features::extract(audio)?;
    let mock_encoded = embeddings.is_none();
    let mut emb = match embeddings {
        Some(e) => e,
        None => mock_encode(audio)?,
    };
    align_features(&mut emb, &mut chroma, &mut onset)?;
    debug!("mapping {} frames at {} Hz", emb.len(), emb.rate);

    let latent = map_pipeline(&emb, stats, &chroma, &onset, &config.params)?;
    let at_fps = resample_track(&latent, config.fps)?;
    let expanded = expand_to_layers(&at_fps, layers)?;
    let trajectory = smooth_hierarchical(&expanded, &groups, &config.windows)?;
    Ok(PipelineOutput {
        trajectory,
        latent,
        chroma,
        onset,
        embeddings: emb,
        mock_encoded,
    })
}
