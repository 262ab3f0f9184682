//! Per-layer style trajectories at video frame rate.
//!
//! A trajectory holds one style vector per generator layer per frame. Layers
//! are split into coarse, middle and fine groups, and each group is smoothed
//! with its own centred moving-average window; coarse layers move slowest.
//!
//! LAVT files (little-endian): magic `LAVT`, version u32 = 1, latent_dim u32,
//! num_layers u32, fps f32, frame_count u64, reserved u32 = 0 (32-byte
//! header), then `frame_count · num_layers · latent_dim` f32 values, frame
//! major then layer major.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::features::FeatureTrack;
use crate::format::{Reader, Writer, VERSION};
use crate::mapping::LatentTrack;
use crate::matrix::Matrix;

pub const LAVT_MAGIC: &[u8; 4] = b"LAVT";
pub const LAVT_HEADER_LEN: usize = 32;

/// Anything sampled at a uniform rate with one row per frame.
pub trait Timeline: Sized {
    fn frames(&self) -> &Matrix;
    fn rate(&self) -> f64;
    fn with_frames(&self, frames: Matrix, rate: f64) -> Self;
}

impl Timeline for LatentTrack {
    fn frames(&self) -> &Matrix {
        &self.frames
    }

    fn rate(&self) -> f64 {
        self.rate
    }

    fn with_frames(&self, frames: Matrix, rate: f64) -> Self {
        LatentTrack { frames, rate }
    }
}

impl Timeline for FeatureTrack {
    fn frames(&self) -> &Matrix {
        &self.frames
    }

    fn rate(&self) -> f64 {
        self.rate
    }

    fn with_frames(&self, frames: Matrix, rate: f64) -> Self {
        FeatureTrack {
            frames,
            rate,
            kind: self.kind,
        }
    }
}

/// Number of output frames when resampling `frames` samples from
/// `src_rate` to `dst_rate`: `floor((frames - 1) · dst / src) + 1`.
pub fn resampled_len(frames: usize, src_rate: f64, dst_rate: f64) -> usize {
    // the epsilon keeps exact ratios like 99·30/50 = 59.4 or 49·50/50 = 49
    // from landing a hair below an integer
    ((frames - 1) as f64 * dst_rate / src_rate + 1e-9).floor() as usize + 1
}

/// Linear interpolation onto a `dst_rate` grid starting at t = 0.
pub fn resample_track<T: Timeline>(track: &T, dst_rate: f64) -> Result<T> {
    let src = track.frames();
    let src_rate = track.rate();
    if src.rows() < 2 {
        return Err(Error::TooFewFrames {
            got: src.rows(),
            needed: 2,
        });
    }
    if !(dst_rate.is_finite() && dst_rate > 0.0) {
        return Err(Error::BadParameter(format!("destination rate {dst_rate}")));
    }
    if !(src_rate.is_finite() && src_rate > 0.0) {
        return Err(Error::BadParameter(format!("source rate {src_rate}")));
    }
    if dst_rate == src_rate {
        return Ok(track.with_frames(src.clone(), dst_rate));
    }
    let out_len = resampled_len(src.rows(), src_rate, dst_rate);
    let last = src.rows() - 1;
    let mut out = Matrix::zeros(out_len, src.cols());
    for i in 0..out_len {
        let pos = i as f64 * src_rate / dst_rate;
        let j = (pos.floor() as usize).min(last);
        let dst = out.row_mut(i);
        if j == last {
            dst.copy_from_slice(src.row(last));
            continue;
        }
        let frac = pos - j as f64;
        for ((o, &a), &b) in dst.iter_mut().zip(src.row(j)).zip(src.row(j + 1)) {
            *o = if a == b { a } else { a + (b - a) * frac };
        }
    }
    Ok(track.with_frames(out, dst_rate))
}

/// `F x L x dim` style tensor, frame major then layer major.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleTrajectory {
    data: Vec<f64>,
    pub frame_count: usize,
    pub num_layers: usize,
    pub latent_dim: usize,
    pub fps: f64,
}

impl StyleTrajectory {
    pub fn new(
        data: Vec<f64>,
        frame_count: usize,
        num_layers: usize,
        latent_dim: usize,
        fps: f64,
    ) -> Result<Self> {
        if data.len() != frame_count * num_layers * latent_dim {
            return Err(Error::BadParameter(format!(
                "{} values for shape {frame_count}x{num_layers}x{latent_dim}",
                data.len()
            )));
        }
        if frame_count == 0 || num_layers == 0 || latent_dim == 0 {
            return Err(Error::BadParameter("trajectory has an empty axis".into()));
        }
        Ok(Self {
            data,
            frame_count,
            num_layers,
            latent_dim,
            fps,
        })
    }

    pub fn style(&self, frame: usize, layer: usize) -> &[f64] {
        let at = (frame * self.num_layers + layer) * self.latent_dim;
        &self.data[at..at + self.latent_dim]
    }

    pub fn style_mut(&mut self, frame: usize, layer: usize) -> &mut [f64] {
        let at = (frame * self.num_layers + layer) * self.latent_dim;
        &mut self.data[at..at + self.latent_dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Time series of one layer as a `F x dim` matrix.
    pub fn layer(&self, layer: usize) -> Matrix {
        let mut m = Matrix::zeros(self.frame_count, self.latent_dim);
        for f in 0..self.frame_count {
            m.row_mut(f).copy_from_slice(self.style(f, layer));
        }
        m
    }
}

/// Coarse, middle and fine layer index ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerGroups {
    pub coarse: Range<usize>,
    pub middle: Range<usize>,
    pub fine: Range<usize>,
}

impl LayerGroups {
    pub fn new(coarse: Range<usize>, middle: Range<usize>, fine: Range<usize>) -> Result<Self> {
        let ok = coarse.start == 0
            && !coarse.is_empty()
            && middle.start == coarse.end
            && !middle.is_empty()
            && fine.start == middle.end
            && !fine.is_empty();
        if !ok {
            return Err(Error::BadGroups(format!(
                "{coarse:?} / {middle:?} / {fine:?} are not contiguous non-empty ranges from 0"
            )));
        }
        Ok(Self {
            coarse,
            middle,
            fine,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.fine.end
    }

    fn window_for(&self, layer: usize, w: &SmoothingWindows) -> usize {
        if self.coarse.contains(&layer) {
            w.coarse
        } else if self.middle.contains(&layer) {
            w.middle
        } else {
            w.fine
        }
    }
}

/// Groups 0–3 / 4–7 / 8.. for a standard 18-layer generator, compressed for
/// smaller layer counts so every group stays non-empty.
pub fn default_groups(num_layers: usize) -> Result<LayerGroups> {
    if num_layers < 3 {
        return Err(Error::BadLayerCount(num_layers));
    }
    let coarse_end = 4.min(num_layers - 2);
    let middle_end = 8.min(num_layers - 1);
    LayerGroups::new(
        0..coarse_end,
        coarse_end..middle_end,
        middle_end..num_layers,
    )
}

/// Odd moving-average window lengths in frames, coarse ≥ middle ≥ fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingWindows {
    pub coarse: usize,
    pub middle: usize,
    pub fine: usize,
}

impl Default for SmoothingWindows {
    fn default() -> Self {
        Self {
            coarse: 25,
            middle: 13,
            fine: 5,
        }
    }
}

impl SmoothingWindows {
    pub fn new(coarse: usize, middle: usize, fine: usize) -> Result<Self> {
        let w = Self {
            coarse,
            middle,
            fine,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("coarse", self.coarse),
            ("middle", self.middle),
            ("fine", self.fine),
        ] {
            if v == 0 || v % 2 == 0 {
                return Err(Error::BadWindows(format!(
                    "{name} window {v} must be odd and positive"
                )));
            }
        }
        if !(self.coarse >= self.middle && self.middle >= self.fine) {
            return Err(Error::BadWindows(format!(
                "windows {}/{}/{} must satisfy coarse >= middle >= fine",
                self.coarse, self.middle, self.fine
            )));
        }
        Ok(())
    }
}

/// Broadcasts each frame's style vector to all `num_layers` layers.
pub fn expand_to_layers(track: &LatentTrack, num_layers: usize) -> Result<StyleTrajectory> {
    if num_layers < 3 {
        return Err(Error::BadLayerCount(num_layers));
    }
    let dim = track.dim();
    let mut data = Vec::with_capacity(track.len() * num_layers * dim);
    for row in track.frames.iter_rows() {
        for _ in 0..num_layers {
            data.extend_from_slice(row);
        }
    }
    StyleTrajectory::new(data, track.len(), num_layers, dim, track.rate)
}

/// Centred moving average along time with a window that shrinks at the clip
/// edges. Sums run left to right, so results do not depend on threading.
pub fn moving_average(series: &Matrix, window: usize) -> Matrix {
    let frames = series.rows();
    let half = (window / 2) as isize;
    let mut out = Matrix::zeros(frames, series.cols());
    for f in 0..frames {
        let lo = (f as isize - half).max(0) as usize;
        let hi = ((f as isize + half) as usize).min(frames - 1);
        let n = (hi - lo + 1) as f64;
        let dst = out.row_mut(f);
        for g in lo..=hi {
            for (o, v) in dst.iter_mut().zip(series.row(g)) {
                *o += v;
            }
        }
        dst.iter_mut().for_each(|o| *o /= n);
    }
    out
}

/// Applies each layer group's window to its layers.
pub fn smooth_hierarchical(
    traj: &StyleTrajectory,
    groups: &LayerGroups,
    windows: &SmoothingWindows,
) -> Result<StyleTrajectory> {
    windows.validate()?;
    if groups.num_layers() != traj.num_layers {
        return Err(Error::BadGroups(format!(
            "groups cover {} layers, trajectory has {}",
            groups.num_layers(),
            traj.num_layers
        )));
    }
    let limit = 2 * traj.frame_count - 1;
    if windows.coarse > limit {
        return Err(Error::WindowTooLarge {
            window: windows.coarse,
            frames: traj.frame_count,
        });
    }
    let mut out = traj.clone();
    for layer in 0..traj.num_layers {
        let w = groups.window_for(layer, windows);
        if w == 1 {
            continue;
        }
        let smoothed = moving_average(&traj.layer(layer), w);
        for f in 0..traj.frame_count {
            out.style_mut(f, layer).copy_from_slice(smoothed.row(f));
        }
    }
    Ok(out)
}

pub fn write_trajectory(traj: &StyleTrajectory) -> Vec<u8> {
    let mut w = Writer::with_capacity(LAVT_HEADER_LEN + traj.data.len() * 4);
    w.bytes(LAVT_MAGIC)
        .u32(VERSION)
        .u32(traj.latent_dim as u32)
        .u32(traj.num_layers as u32)
        .f32(traj.fps as f32)
        .u64(traj.frame_count as u64)
        .u32(0)
        .f32s(&traj.data);
    w.finish()
}

/// Header fields of a LAVT file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LavtHeader {
    pub latent_dim: u32,
    pub num_layers: u32,
    pub fps: f32,
    pub frame_count: u64,
}

fn read_lavt_header(r: &mut Reader) -> Result<LavtHeader> {
    r.magic(LAVT_MAGIC)?;
    r.version()?;
    let latent_dim = r.u32()?;
    let num_layers = r.u32()?;
    let fps = r.f32()?;
    let frame_count = r.u64()?;
    r.reserved()?;
    let cells = frame_count
        .saturating_mul(num_layers as u64)
        .saturating_mul(latent_dim as u64);
    r.expect_payload(cells, 0)?;
    Ok(LavtHeader {
        latent_dim,
        num_layers,
        fps,
        frame_count,
    })
}

pub fn read_trajectory_header(bytes: &[u8]) -> Result<LavtHeader> {
    read_lavt_header(&mut Reader::new(bytes))
}

pub fn read_trajectory(bytes: &[u8]) -> Result<StyleTrajectory> {
    let mut r = Reader::new(bytes);
    let h = read_lavt_header(&mut r)?;
    let (f, l, d) = (
        h.frame_count as usize,
        h.num_layers as usize,
        h.latent_dim as usize,
    );
    let data = r.f32s(f * l * d)?;
    if !data.iter().all(|v| v.is_finite()) {
        return Err(Error::MalformedHeader("non-finite trajectory value".into()));
    }
    StyleTrajectory::new(data, f, l, d, h.fps as f64)
        .map_err(|e| Error::MalformedHeader(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lt(rows: &[&[f64]], rate: f64) -> LatentTrack {
        LatentTrack {
            frames: Matrix::from_rows(rows),
            rate,
        }
    }

    #[test]
    fn resample_identity_and_midpoint() {
        let t = lt(&[&[0.0, 1.0], &[10.0, 3.0], &[4.0, 4.0]], 50.0);
        assert_eq!(resample_track(&t, 50.0).unwrap(), t);
        let r = resample_track(&lt(&[&[0.0], &[10.0]], 1.0), 2.0).unwrap();
        assert_eq!(r.frames.as_slice(), &[0.0, 5.0, 10.0]);
        assert_eq!(r.rate, 2.0);
        assert!(resample_track(&lt(&[&[0.0]], 1.0), 2.0).is_err());
    }

    #[test]
    fn resample_ramp_50_to_30() {
        // closed form: value = 2 + 3·time
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|j| vec![2.0 + 3.0 * j as f64 / 50.0])
            .collect();
        let t = LatentTrack {
            frames: Matrix::from_rows(&rows),
            rate: 50.0,
        };
        let r = resample_track(&t, 30.0).unwrap();
        assert_eq!(r.len(), 60);
        for i in 0..r.len() {
            let expected = 2.0 + 3.0 * i as f64 / 30.0;
            assert!((r.frames[(i, 0)] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn resampled_length_formula() {
        assert_eq!(resampled_len(100, 50.0, 30.0), 60);
        assert_eq!(resampled_len(2, 1.0, 2.0), 3);
        assert_eq!(resampled_len(50, 50.0, 50.0), 50);
        assert_eq!(resampled_len(101, 50.0, 30.0), 61);
        assert_eq!(resampled_len(4, 50.0, 24.0), 2);
    }

    #[test]
    fn groups_for_18_and_3() {
        let g = default_groups(18).unwrap();
        assert_eq!((g.coarse, g.middle, g.fine), (0..4, 4..8, 8..18));
        let g = default_groups(3).unwrap();
        assert_eq!((g.coarse, g.middle, g.fine), (0..1, 1..2, 2..3));
        assert_eq!(default_groups(2), Err(Error::BadLayerCount(2)));
        for l in 3..40 {
            let g = default_groups(l).unwrap();
            let all: Vec<usize> = g
                .coarse
                .clone()
                .chain(g.middle.clone())
                .chain(g.fine.clone())
                .collect();
            assert_eq!(all, (0..l).collect::<Vec<_>>());
        }
        assert!(LayerGroups::new(0..2, 3..4, 4..5).is_err());
        assert!(LayerGroups::new(0..2, 2..2, 2..5).is_err());
    }

    #[test]
    fn window_validation() {
        assert!(SmoothingWindows::new(25, 13, 5).is_ok());
        assert!(SmoothingWindows::new(5, 13, 25).is_err());
        assert!(SmoothingWindows::new(4, 3, 1).is_err());
        assert!(SmoothingWindows::new(3, 3, 0).is_err());
    }

    #[test]
    fn expand_broadcasts() {
        let t = lt(&[&[1.0, 2.0]], 30.0);
        let e = expand_to_layers(&t, 3).unwrap();
        assert_eq!(e.as_slice(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!((e.frame_count, e.num_layers, e.latent_dim), (1, 3, 2));
        assert_eq!(expand_to_layers(&t, 2), Err(Error::BadLayerCount(2)));

        let t = LatentTrack {
            frames: Matrix::zeros(7, 512),
            rate: 30.0,
        };
        let e = expand_to_layers(&t, 18).unwrap();
        assert_eq!((e.frame_count, e.num_layers, e.latent_dim), (7, 18, 512));
    }

    #[test]
    fn smoothing_hand_example() {
        let t = lt(&[&[0.0], &[0.0], &[10.0], &[0.0], &[0.0]], 30.0);
        let traj = expand_to_layers(&t, 3).unwrap();
        let w = SmoothingWindows::new(3, 3, 1).unwrap();
        let s = smooth_hierarchical(&traj, &default_groups(3).unwrap(), &w).unwrap();
        let expected = [0.0, 10.0 / 3.0, 10.0 / 3.0, 10.0 / 3.0, 0.0];
        for f in 0..5usize {
            // brute-force window sum
            let lo = f.saturating_sub(1);
            let hi = (f + 1).min(4);
            let brute = (lo..=hi).map(|g| t.frames[(g, 0)]).sum::<f64>() / (hi - lo + 1) as f64;
            assert_eq!(s.style(f, 0)[0], brute);
            assert!((s.style(f, 1)[0] - expected[f]).abs() < 1e-12);
            assert_eq!(s.style(f, 2)[0], t.frames[(f, 0)]);
        }
    }

    #[test]
    fn smoothing_identity_and_constant() {
        let t = lt(&[&[1.0, -1.0], &[2.0, 5.0], &[3.0, 0.5]], 30.0);
        let traj = expand_to_layers(&t, 4).unwrap();
        let g = default_groups(4).unwrap();
        let ones = SmoothingWindows::new(1, 1, 1).unwrap();
        let s = smooth_hierarchical(&traj, &g, &ones).unwrap();
        for l in 0..4 {
            assert_eq!(s.layer(l), t.frames);
        }
        let c = lt(&[&[0.7, 0.1][..]; 6], 30.0);
        let traj = expand_to_layers(&c, 4).unwrap();
        let s = smooth_hierarchical(&traj, &g, &SmoothingWindows::new(5, 3, 3).unwrap()).unwrap();
        for v in s.as_slice().chunks(2) {
            assert!((v[0] - 0.7).abs() < 1e-15 && (v[1] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn window_too_large() {
        let traj = expand_to_layers(&lt(&[&[0.0], &[1.0]], 30.0), 3).unwrap();
        let g = default_groups(3).unwrap();
        assert!(smooth_hierarchical(&traj, &g, &SmoothingWindows::new(3, 3, 3).unwrap()).is_ok());
        assert_eq!(
            smooth_hierarchical(&traj, &g, &SmoothingWindows::new(5, 3, 1).unwrap()),
            Err(Error::WindowTooLarge {
                window: 5,
                frames: 2
            })
        );
    }

    #[test]
    fn lavt_layout() {
        let traj = StyleTrajectory::new(vec![1.0, 2.0, 3.0, 4.0], 1, 2, 2, 30.0).unwrap();
        let bytes = write_trajectory(&traj);
        assert_eq!(bytes.len(), 32 + 16);
        assert_eq!(&bytes[0..4], b"LAVT");
        assert_eq!(&bytes[8..12], &2u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes());
        assert_eq!(&bytes[16..20], &30f32.to_le_bytes());
        assert_eq!(&bytes[20..28], &1u64.to_le_bytes());
        assert_eq!(&bytes[28..32], &[0; 4]);
        assert_eq!(&bytes[32..36], &1f32.to_le_bytes());
        assert_eq!(read_trajectory(&bytes).unwrap(), traj);
    }

    #[test]
    fn lavt_errors() {
        let traj = StyleTrajectory::new(vec![0.5; 12], 2, 3, 2, 30.0).unwrap();
        let good = write_trajectory(&traj);
        let mut bad = good.clone();
        bad[3] = b'S';
        assert!(matches!(read_trajectory(&bad), Err(Error::BadMagic { .. })));
        let mut bad = good.clone();
        bad[4] = 7;
        assert_eq!(read_trajectory(&bad), Err(Error::BadVersion(7)));
        let mut bad = good.clone();
        bad[20] = 3; // frame_count 3, payload holds 2
        assert_eq!(
            read_trajectory(&bad),
            Err(Error::TruncatedPayload {
                declared: 72,
                actual: 48
            })
        );
        assert!(read_trajectory(&good[..20]).is_err());
    }
}
