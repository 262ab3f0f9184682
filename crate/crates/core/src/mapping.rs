//! Embedding-to-style-space mapping.
//!
//! Each of two paths runs project → standardize → leaky tanh → affine map to
//! the target statistics (with a chroma-modulated mean). The two resulting
//! tracks are blended frame by frame with the percussive onset strength.

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureTrack};
use crate::latent::{EmbeddingSequence, LatentStats};
use crate::matrix::{standardize_columns, Matrix};
use crate::prng::{Xoshiro256StarStar, GOLDEN_GAMMA};
use crate::PITCH_CLASSES;

/// Tolerance on the L1 norm of a non-silent chroma frame.
pub const CHROMA_SUM_TOL: f64 = 1e-6;
/// Relative tolerance when comparing track rates.
const RATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    /// Scale applied to the target std in the affine map.
    pub y: f64,
    /// Slope of the linear tail of the leaky tanh.
    pub c: f64,
    /// Weight of the chroma anchor mix in the mean term.
    pub lambda_chroma: f64,
    pub seed: u64,
}

impl Default for MapParams {
    fn default() -> Self {
        Self {
            y: 1.0,
            c: 0.02,
            lambda_chroma: 0.5,
            seed: 42,
        }
    }
}

impl MapParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.y.is_finite() && self.y > 0.0) {
            return Err(Error::BadParameter(format!("y = {} must be > 0", self.y)));
        }
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(Error::BadParameter(format!("c = {} must be >= 0", self.c)));
        }
        if !(0.0..=1.0).contains(&self.lambda_chroma) {
            return Err(Error::BadParameter(format!(
                "lambda_chroma = {} must lie in [0, 1]",
                self.lambda_chroma
            )));
        }
        Ok(())
    }

    /// Seeds of the two projection paths.
    pub fn path_seeds(&self) -> [u64; 2] {
        [self.seed, self.seed ^ GOLDEN_GAMMA]
    }
}

/// Per-frame style latents, `T x latent_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTrack {
    pub frames: Matrix,
    pub rate: f64,
}

impl LatentTrack {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// `out_dim x in_dim` random linear map.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    pub weights: Matrix,
    pub seed: u64,
}

impl ProjectionMatrix {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

pub fn prng_stream(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::from_seed(seed)
}

/// Gaussian weights with variance `1 / in_dim`, drawn row-major.
pub fn init_projection(seed: u64, in_dim: usize, out_dim: usize) -> Result<ProjectionMatrix> {
    if in_dim == 0 || out_dim == 0 {
        return Err(Error::BadParameter(format!(
            "projection dims must be positive, got {out_dim}x{in_dim}"
        )));
    }
    let mut rng = prng_stream(seed);
    let scale = 1.0 / (in_dim as f64).sqrt();
    let data = (0..in_dim * out_dim)
        .map(|_| rng.next_gaussian() * scale)
        .collect();
    Ok(ProjectionMatrix {
        weights: Matrix::from_vec(out_dim, in_dim, data),
        seed,
    })
}

pub fn project(p: &ProjectionMatrix, emb: &EmbeddingSequence) -> Result<LatentTrack> {
    if emb.dim() != p.in_dim() {
        return Err(Error::DimMismatch {
            expected: p.in_dim(),
            got: emb.dim(),
        });
    }
    let mut out = Matrix::zeros(emb.len(), p.out_dim());
    for (t, e) in emb.frames.iter_rows().enumerate() {
        let dst = out.row_mut(t);
        for (o, w) in dst.iter_mut().zip(p.weights.iter_rows()) {
            *o = w.iter().zip(e).map(|(a, b)| a * b).sum();
        }
    }
    Ok(LatentTrack {
        frames: out,
        rate: emb.rate,
    })
}

/// Per-dimension standardization over the clip.
pub fn standardize_track(track: &LatentTrack) -> Result<LatentTrack> {
    if track.len() < 2 {
        return Err(Error::TooFewFrames {
            got: track.len(),
            needed: 2,
        });
    }
    Ok(LatentTrack {
        frames: standardize_columns(&track.frames),
        rate: track.rate,
    })
}

/// `tanh(x) + c·x`: bounded core, linear tail for outliers.
#[inline]
pub fn leaky_tanh_scalar(x: f64, c: f64) -> f64 {
    x.tanh() + c * x
}

pub fn leaky_tanh(track: &LatentTrack, c: f64) -> Result<LatentTrack> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::BadParameter(format!("c = {c} must be >= 0")));
    }
    Ok(LatentTrack {
        frames: track.frames.map(|x| leaky_tanh_scalar(x, c)),
        rate: track.rate,
    })
}

fn check_chroma_frame(frame: &[f64]) -> std::result::Result<f64, String> {
    if frame.len() != PITCH_CLASSES {
        return Err(format!("{} entries, expected 12", frame.len()));
    }
    if let Some(v) = frame.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(format!("entry {v} is negative or non-finite"));
    }
    let sum: f64 = frame.iter().sum();
    if sum != 0.0 && (sum - 1.0).abs() > CHROMA_SUM_TOL {
        return Err(format!("row sums to {sum}"));
    }
    Ok(sum)
}

fn chroma_mean_into(
    stats: &LatentStats,
    frame: &[f64],
    lambda: f64,
    out: &mut [f64],
) -> std::result::Result<(), String> {
    let sum = check_chroma_frame(frame)?;
    out.copy_from_slice(&stats.mean);
    if lambda == 0.0 || sum == 0.0 {
        return Ok(());
    }
    for (d, o) in out.iter_mut().enumerate() {
        let mut mix = 0.0;
        for (k, w) in frame.iter().enumerate() {
            mix += w * stats.anchors[(k, d)];
        }
        *o = (1.0 - lambda) * *o + lambda * mix;
    }
    Ok(())
}

/// Mean term for one frame: `(1 - λ)·mean + λ·Σ_k chroma_k·anchor_k`.
/// A silent (all-zero) chroma frame yields `stats.mean`.
pub fn chroma_mean(stats: &LatentStats, chroma_frame: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::BadParameter(format!(
            "lambda = {lambda} must lie in [0, 1]"
        )));
    }
    let mut out = vec![0.0; stats.latent_dim()];
    chroma_mean_into(stats, chroma_frame, lambda, &mut out)
        .map_err(|reason| Error::BadChroma { frame: 0, reason })?;
    Ok(out)
}

fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TOL * a.abs().max(b.abs())
}

/// Affine map into the target space:
/// `w[t] = chroma_mean(chroma[t]) + y · std ⊙ track[t]`.
pub fn to_w(
    track: &LatentTrack,
    stats: &LatentStats,
    chroma: &FeatureTrack,
    params: &MapParams,
) -> Result<LatentTrack> {
    params.validate()?;
    if track.dim() != stats.latent_dim() {
        return Err(Error::DimMismatch {
            expected: stats.latent_dim(),
            got: track.dim(),
        });
    }
    if chroma.kind != FeatureKind::Chroma || chroma.frames.cols() != PITCH_CLASSES {
        return Err(Error::DimMismatch {
            expected: PITCH_CLASSES,
            got: chroma.frames.cols(),
        });
    }
    if !same_rate(track.rate, chroma.rate) {
        return Err(Error::RateMismatch {
            a: track.rate,
            b: chroma.rate,
        });
    }
    if track.len() != chroma.len() {
        return Err(Error::FrameCountMismatch {
            a: track.len(),
            b: chroma.len(),
        });
    }
    let mut out = Matrix::zeros(track.len(), track.dim());
    for t in 0..track.len() {
        let dst = out.row_mut(t);
        chroma_mean_into(stats, chroma.frames.row(t), params.lambda_chroma, dst)
            .map_err(|reason| Error::BadChroma { frame: t, reason })?;
        for ((o, a), s) in dst.iter_mut().zip(track.frames.row(t)).zip(&stats.std) {
            *o += params.y * s * a;
        }
    }
    Ok(LatentTrack {
        frames: out,
        rate: track.rate,
    })
}

/// `(1 - o)·x + o·z`, exact at `o ∈ {0, 1}` and when `x == z`, and never
/// rounded outside `[min(x, z), max(x, z)]`.
#[inline]
fn lerp(x: f64, z: f64, o: f64) -> f64 {
    if o == 0.0 || x == z {
        x
    } else if o == 1.0 {
        z
    } else {
        ((1.0 - o) * x + o * z).clamp(x.min(z), x.max(z))
    }
}

/// `(1 - o_t)·a[t] + o_t·b[t]` per frame.
pub fn onset_blend(a: &LatentTrack, b: &LatentTrack, onset: &FeatureTrack) -> Result<LatentTrack> {
    if a.len() != b.len() || a.len() != onset.len() {
        return Err(Error::FrameCountMismatch {
            a: a.len(),
            b: if a.len() != b.len() {
                b.len()
            } else {
                onset.len()
            },
        });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    if onset.frames.cols() != 1 {
        return Err(Error::DimMismatch {
            expected: 1,
            got: onset.frames.cols(),
        });
    }
    if let Some(o) = onset.values().iter().find(|o| !(0.0..=1.0).contains(*o)) {
        return Err(Error::BadParameter(format!(
            "onset weight {o} outside [0, 1]"
        )));
    }
    let mut out = Matrix::zeros(a.len(), a.dim());
    for (t, &o) in onset.values().iter().enumerate() {
        for ((dst, &x), &z) in out
            .row_mut(t)
            .iter_mut()
            .zip(a.frames.row(t))
            .zip(b.frames.row(t))
        {
            *dst = lerp(x, z, o);
        }
    }
    Ok(LatentTrack {
        frames: out,
        rate: a.rate,
    })
}

/// Intermediate results of one projection path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStages {
    pub projected: LatentTrack,
    pub standardized: LatentTrack,
    pub activated: LatentTrack,
    pub w: LatentTrack,
}

/// Runs a single projection path with the given seed.
pub fn run_path(
    emb: &EmbeddingSequence,
    stats: &LatentStats,
    chroma: &FeatureTrack,
    params: &MapParams,
    seed: u64,
) -> Result<PathStages> {
    let p = init_projection(seed, emb.dim(), stats.latent_dim())?;
    let projected = project(&p, emb)?;
    let standardized = standardize_track(&projected)?;
    let activated = leaky_tanh(&standardized, params.c)?;
    let w = to_w(&activated, stats, chroma, params)?;
    Ok(PathStages {
        projected,
        standardized,
        activated,
        w,
    })
}

/// Full mapping stage: two seeded paths blended by onset strength.
///
/// The paths run on separate threads; each is sequential internally, so the
/// result is bitwise identical to running them one after the other.
pub fn map_pipeline(
    emb: &EmbeddingSequence,
    stats: &LatentStats,
    chroma: &FeatureTrack,
    onset: &FeatureTrack,
    params: &MapParams,
) -> Result<LatentTrack> {
    params.validate()?;
    if onset.kind != FeatureKind::Onset {
        return Err(Error::DimMismatch {
            expected: 1,
            got: onset.frames.cols(),
        });
    }
    if !same_rate(emb.rate, onset.rate) {
        return Err(Error::RateMismatch {
            a: emb.rate,
            b: onset.rate,
        });
    }
    let [seed_a, seed_b] = params.path_seeds();
    let (a, b) = std::thread::scope(|s| {
        let hb = s.spawn(|| run_path(emb, stats, chroma, params, seed_b));
        let a = run_path(emb, stats, chroma, params, seed_a);
        (a, hb.join().expect("projection path panicked"))
    });
    onset_blend(&a?.w, &b?.w, onset)
}
