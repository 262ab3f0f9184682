//! Embedding sequences, target-space statistics and their file formats.
//!
//! # LAVE (embeddings), little-endian
//!
//! | offset | type | field                       |
//! |-------:|------|-----------------------------|
//! | 0      | [u8;4] | magic `LAVE`              |
//! | 4      | u32  | version = 1                 |
//! | 8      | u32  | dim                         |
//! | 12     | f32  | rate (Hz)                   |
//! | 16     | u64  | frame_count                 |
//! | 24     | u32  | reserved = 0                |
//! | 28     | u32  | reserved = 0                |
//! | 32     | f32 × frame_count·dim | frames, row-major |
//!
//! # LAVS (statistics), little-endian
//!
//! magic `LAVS`, version u32 = 1, latent_dim u32, num_layers u32, then
//! `mean[latent_dim]`, `std[latent_dim]`, `anchors[12][latent_dim]` as f32,
//! then `sample_count` u64.

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{stft_magnitude, FrameSpec};
use crate::format::{Reader, Writer, VERSION};
use crate::matrix::{standardize_columns, Matrix};
use crate::prng::Xoshiro256StarStar;
use crate::{EMBEDDING_DIM, PITCH_CLASSES};

pub const LAVE_MAGIC: &[u8; 4] = b"LAVE";
pub const LAVS_MAGIC: &[u8; 4] = b"LAVS";
pub const LAVE_HEADER_LEN: usize = 32;
pub const LAVS_HEADER_LEN: usize = 16;

/// Floor applied to per-dimension standard deviations.
pub const STD_FLOOR: f64 = 1e-6;
/// Minimum number of w samples: two per pitch anchor.
pub const MIN_SAMPLES: usize = 2 * PITCH_CLASSES;

/// `T x D` codec embedding frames at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub frames: Matrix,
    pub rate: f64,
}

impl EmbeddingSequence {
    pub fn new(frames: Matrix, rate: f64) -> Result<Self> {
        if frames.rows() == 0 || frames.cols() == 0 {
            return Err(Error::InvalidEmbeddings(format!(
                "shape {}x{} has no cells",
                frames.rows(),
                frames.cols()
            )));
        }
        if !frames.is_finite() {
            return Err(Error::InvalidEmbeddings("non-finite value".into()));
        }
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidEmbeddings(format!("rate {rate}")));
        }
        Ok(Self { frames, rate })
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }
}

/// Statistics of the target style space: per-dimension mean and standard
/// deviation, twelve pitch anchors and the generator's style-input count.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `12 x latent_dim`, one row per pitch class starting at C.
    pub anchors: Matrix,
    pub num_layers: u32,
    pub sample_count: u64,
}

impl LatentStats {
    pub fn new(
        mean: Vec<f64>,
        std: Vec<f64>,
        anchors: Matrix,
        num_layers: u32,
        sample_count: u64,
    ) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::InvalidStats("latent_dim is zero".into()));
        }
        if std.len() != dim || anchors.cols() != dim {
            return Err(Error::InvalidStats(format!(
                "mean has {dim} dims, std {}, anchors {}",
                std.len(),
                anchors.cols()
            )));
        }
        if anchors.rows() != PITCH_CLASSES {
            return Err(Error::InvalidStats(format!(
                "{} anchor rows, expected 12",
                anchors.rows()
            )));
        }
        if let Some((d, s)) = std
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > 0.0))
        {
            return Err(Error::InvalidStats(format!(
                "std[{d}] = {s} is not positive and finite"
            )));
        }
        if !mean.iter().all(|v| v.is_finite()) || !anchors.is_finite() {
            return Err(Error::InvalidStats("non-finite mean or anchor".into()));
        }
        if num_layers == 0 {
            return Err(Error::InvalidStats("num_layers is zero".into()));
        }
        Ok(Self {
            mean,
            std,
            anchors,
            num_layers,
            sample_count,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.mean.len()
    }
}

/// Per-column mean and population standard deviation (no floor).
pub fn column_moments(samples: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = samples.rows() as f64;
    let mut mean = vec![0.0; samples.cols()];
    for row in samples.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; samples.cols()];
    for row in samples.iter_rows() {
        for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
    (mean, std)
}

/// Seeded partition of `0..n` into 12 groups whose sizes differ by at most one.
///
/// Indices are Fisher–Yates shuffled with the crate PRNG and dealt round-robin.
pub fn anchor_partition(n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = Xoshiro256StarStar::from_seed(seed);
    for i in (1..n).rev() {
        let j = rng.next_below(i + 1);
        idx.swap(i, j);
    }
    let mut groups: Vec<Vec<usize>> = (0..PITCH_CLASSES)
        .map(|_| Vec::with_capacity(n / PITCH_CLASSES + 1))
        .collect();
    for (pos, &i) in idx.iter().enumerate() {
        groups[pos % PITCH_CLASSES].push(i);
    }
    groups
}

/// Mean, floored population std and 12 partition-mean anchors of `N x dim`
/// w samples.
pub fn compute_stats(w_samples: &Matrix, num_layers: u32, anchor_seed: u64) -> Result<LatentStats> {
    let n = w_samples.rows();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: n,
            needed: MIN_SAMPLES,
        });
    }
    if !w_samples.is_finite() {
        return Err(Error::InvalidStats("non-finite w sample".into()));
    }
    let (mean, std) = column_moments(w_samples);
    let std = std.into_iter().map(|s| s.max(STD_FLOOR)).collect();

    let dim = w_samples.cols();
    let mut anchors = Matrix::zeros(PITCH_CLASSES, dim);
    for (k, group) in anchor_partition(n, anchor_seed).iter().enumerate() {
        let row = anchors.row_mut(k);
        for &i in group {
            for (a, v) in row.iter_mut().zip(w_samples.row(i)) {
                *a += v;
            }
        }
        row.iter_mut().for_each(|a| *a /= group.len() as f64);
    }
    LatentStats::new(mean, std, anchors, num_layers, n as u64)
}

pub fn write_embeddings(seq: &EmbeddingSequence) -> Vec<u8> {
    let mut w = Writer::with_capacity(LAVE_HEADER_LEN + seq.frames.as_slice().len() * 4);
    w.bytes(LAVE_MAGIC)
        .u32(VERSION)
        .u32(seq.dim() as u32)
        .f32(seq.rate as f32)
        .u64(seq.len() as u64)
        .u32(0)
        .u32(0)
        .f32s(seq.frames.as_slice());
    w.finish()
}

/// Header fields of a LAVE file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaveHeader {
    pub dim: u32,
    pub rate: f32,
    pub frame_count: u64,
}

fn read_lave_header(r: &mut Reader) -> Result<LaveHeader> {
    r.magic(LAVE_MAGIC)?;
    r.version()?;
    let dim = r.u32()?;
    let rate = r.f32()?;
    let frame_count = r.u64()?;
    r.reserved()?;
    r.reserved()?;
    r.expect_payload(frame_count.saturating_mul(dim as u64), 0)?;
    Ok(LaveHeader {
        dim,
        rate,
        frame_count,
    })
}

/// Parses and validates a LAVE header without decoding the payload.
pub fn read_embeddings_header(bytes: &[u8]) -> Result<LaveHeader> {
    read_lave_header(&mut Reader::new(bytes))
}

pub fn read_embeddings(bytes: &[u8]) -> Result<EmbeddingSequence> {
    let mut r = Reader::new(bytes);
    let h = read_lave_header(&mut r)?;
    let (rows, cols) = (h.frame_count as usize, h.dim as usize);
    let data = r.f32s(rows * cols)?;
    EmbeddingSequence::new(Matrix::from_vec(rows, cols, data), h.rate as f64)
}

pub fn write_stats(stats: &LatentStats) -> Vec<u8> {
    let dim = stats.latent_dim();
    let mut w = Writer::with_capacity(LAVS_HEADER_LEN + (14 * dim) * 4 + 8);
    w.bytes(LAVS_MAGIC)
        .u32(VERSION)
        .u32(dim as u32)
        .u32(stats.num_layers)
        .f32s(&stats.mean)
        .f32s(&stats.std)
        .f32s(stats.anchors.as_slice())
        .u64(stats.sample_count);
    w.finish()
}

/// Header fields of a LAVS file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LavsHeader {
    pub latent_dim: u32,
    pub num_layers: u32,
}

fn read_lavs_header(r: &mut Reader) -> Result<LavsHeader> {
    r.magic(LAVS_MAGIC)?;
    r.version()?;
    let latent_dim = r.u32()?;
    let num_layers = r.u32()?;
    r.expect_payload((PITCH_CLASSES as u64 + 2) * latent_dim as u64, 8)?;
    Ok(LavsHeader {
        latent_dim,
        num_layers,
    })
}

pub fn read_stats_header(bytes: &[u8]) -> Result<LavsHeader> {
    read_lavs_header(&mut Reader::new(bytes))
}

pub fn read_stats(bytes: &[u8]) -> Result<LatentStats> {
    let mut r = Reader::new(bytes);
    let h = read_lavs_header(&mut r)?;
    let dim = h.latent_dim as usize;
    let mean = r.f32s(dim)?;
    let std = r.f32s(dim)?;
    let anchors = Matrix::from_vec(PITCH_CLASSES, dim, r.f32s(PITCH_CLASSES * dim)?);
    let sample_count = r.u64()?;
    LatentStats::new(mean, std, anchors, h.num_layers, sample_count)
}

/// Upper edge of the mock encoder's mel filterbank in Hz.
pub const MEL_FMAX: f64 = 12_000.0;
const LOG_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular HTK-scale mel filterbank, `bands x bins`.
pub fn mel_filterbank(bands: usize, fft_size: usize, sample_rate: u32, fmax: f64) -> Matrix {
    let bins = fft_size / 2 + 1;
    let mel_max = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (bands + 1) as f64))
        .collect();
    let mut fb = Matrix::zeros(bands, bins);
    for b in 0..bands {
        let (lo, centre, hi) = (edges[b], edges[b + 1], edges[b + 2]);
        for k in 0..bins {
            let f = k as f64 * sample_rate as f64 / fft_size as f64;
            let w = if f > lo && f <= centre {
                (f - lo) / (centre - lo)
            } else if f > centre && f < hi {
                (hi - f) / (hi - centre)
            } else {
                0.0
            };
            fb[(b, k)] = w;
        }
    }
    fb
}

/// Stand-in for a neural codec encoder: 128 log-mel energies per 50 Hz frame,
/// standardized per dimension over the clip.
pub fn mock_encode(buf: &AudioBuffer) -> Result<EmbeddingSequence> {
    let spec = stft_magnitude(buf, FrameSpec::default())?;
    let fb = mel_filterbank(
        EMBEDDING_DIM,
        spec.spec.fft_size,
        spec.sample_rate,
        MEL_FMAX,
    );
    let mut logmel = Matrix::zeros(spec.frames(), EMBEDDING_DIM);
    for t in 0..spec.frames() {
        let power: Vec<f64> = spec.mags.row(t).iter().map(|m| m * m).collect();
        for b in 0..EMBEDDING_DIM {
            let e: f64 = fb.row(b).iter().zip(&power).map(|(w, p)| w * p).sum();
            logmel[(t, b)] = (e + LOG_FLOOR).ln();
        }
    }
    EmbeddingSequence::new(standardize_columns(&logmel), spec.frame_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_stats() {
        let v = [0.5, -1.0, 2.0];
        let rows = Matrix::from_rows(&vec![v; 24]);
        let s = compute_stats(&rows, 18, 1).unwrap();
        assert_eq!(s.mean, v.to_vec());
        assert_eq!(s.std, vec![STD_FLOOR; 3]);
        for k in 0..12 {
            assert_eq!(s.anchors.row(k), &v);
        }
        assert_eq!(s.sample_count, 24);
    }

    #[test]
    fn two_point_symmetry() {
        let u = [1.5, -0.25];
        let mut rows = Vec::new();
        for _ in 0..12 {
            rows.push(u.to_vec());
            rows.push(u.iter().map(|x| -x).collect());
        }
        let s = compute_stats(&Matrix::from_rows(&rows), 3, 9).unwrap();
        assert_eq!(s.mean, vec![0.0, 0.0]);
        assert_eq!(s.std, vec![1.5, 0.25]);
    }

    #[test]
    fn moments_of_4x2_fixture() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]);
        let (mean, std) = column_moments(&m);
        assert_eq!(mean, vec![4.0, 5.0]);
        for s in std {
            assert!((s - 5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn too_few_samples() {
        let m = Matrix::zeros(23, 4);
        assert_eq!(
            compute_stats(&m, 18, 0).unwrap_err(),
            Error::TooFewSamples {
                got: 23,
                needed: 24
            }
        );
    }

    #[test]
    fn partition_is_balanced_and_complete() {
        for n in [24usize, 25, 100, 1201] {
            let groups = anchor_partition(n, 77);
            let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert_ne!(anchor_partition(48, 1), anchor_partition(48, 2));
    }

    #[test]
    fn lave_layout_by_hand() {
        let seq = EmbeddingSequence::new(Matrix::from_rows(&[[0.0, 1.0]]), 50.0).unwrap();
        let bytes = write_embeddings(&seq);
        let mut expected = Vec::new();
        expected.extend_from_slice(b"LAVE");
        expected.extend_from_slice(&[1, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0]);
        expected.extend_from_slice(&[0x00, 0x00, 0x48, 0x42]); // 50.0f32
        expected.extend_from_slice(&[1, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend_from_slice(&[0; 8]);
        assert_eq!(expected.len(), 32);
        expected.extend_from_slice(&[0, 0, 0, 0, 0x00, 0x00, 0x80, 0x3f]);
        assert_eq!(bytes, expected);
        assert_eq!(read_embeddings(&bytes).unwrap(), seq);
    }

    #[test]
    fn lave_errors() {
        let seq =
            EmbeddingSequence::new(Matrix::from_rows(&[[0.0, 1.0], [2.0, 3.0]]), 50.0).unwrap();
        let good = write_embeddings(&seq);

        let mut bad = good.clone();
        bad[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_embeddings(&bad), Err(Error::BadMagic { .. })));

        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(read_embeddings(&bad), Err(Error::BadVersion(2)));

        let truncated = &good[..good.len() - 4];
        assert_eq!(
            read_embeddings(truncated),
            Err(Error::TruncatedPayload {
                declared: 16,
                actual: 12
            })
        );
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(
            read_embeddings(&long),
            Err(Error::TruncatedPayload { .. })
        ));

        let mut bad = good.clone();
        bad[24] = 1;
        assert!(matches!(
            read_embeddings(&bad),
            Err(Error::MalformedHeader(_))
        ));

        assert!(matches!(
            read_embeddings(&good[..10]),
            Err(Error::MalformedHeader(_))
        ));

        let mut nan = good;
        nan[32..36].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            read_embeddings(&nan),
            Err(Error::InvalidEmbeddings(_))
        ));
    }

    fn tiny_stats() -> LatentStats {
        LatentStats::new(
            vec![0.1, -0.2],
            vec![1.0, 0.5],
            Matrix::from_vec(12, 2, (0..24).map(|i| i as f64 * 0.25).collect()),
            2,
            24,
        )
        .unwrap()
    }

    #[test]
    fn lavs_byte_count_and_roundtrip() {
        let bytes = write_stats(&tiny_stats());
        assert_eq!(bytes.len(), 16 + 2 * 4 + 2 * 4 + 12 * 2 * 4 + 8);
        assert_eq!(bytes.len(), 136);
        let back = read_stats(&bytes).unwrap();
        assert_eq!(write_stats(&back), bytes);
        assert_eq!(back.num_layers, 2);
        assert_eq!(back.sample_count, 24);
    }

    #[test]
    fn lavs_rejects_zero_std() {
        let mut bytes = write_stats(&tiny_stats());
        // std block starts after header + mean
        let at = 16 + 2 * 4;
        bytes[at..at + 4].copy_from_slice(&0f32.to_le_bytes());
        assert!(matches!(read_stats(&bytes), Err(Error::InvalidStats(_))));

        let mut bytes = write_stats(&tiny_stats());
        bytes[0] = b'X';
        assert!(matches!(read_stats(&bytes), Err(Error::BadMagic { .. })));
        let bytes = write_stats(&tiny_stats());
        assert!(matches!(
            read_stats(&bytes[..100]),
            Err(Error::TruncatedPayload { .. })
        ));
    }

    #[test]
    fn stats_constructor_checks() {
        let ok = tiny_stats();
        assert!(LatentStats::new(ok.mean.clone(), vec![1.0], ok.anchors.clone(), 2, 0).is_err());
        assert!(
            LatentStats::new(ok.mean.clone(), ok.std.clone(), Matrix::zeros(11, 2), 2, 0).is_err()
        );
        assert!(
            LatentStats::new(ok.mean.clone(), vec![1.0, -1.0], ok.anchors.clone(), 2, 0).is_err()
        );
        assert!(
            LatentStats::new(ok.mean.clone(), ok.std.clone(), ok.anchors.clone(), 0, 0).is_err()
        );
    }

    #[test]
    fn mel_filters_cover_band() {
        let fb = mel_filterbank(128, 2048, 24000, MEL_FMAX);
        assert_eq!((fb.rows(), fb.cols()), (128, 1025));
        for b in 0..128 {
            assert!(fb.row(b).iter().any(|&w| w > 0.0), "band {b} is empty");
            assert!(fb.row(b).iter().all(|&w| (0.0..=1.0).contains(&w)));
        }
        assert!(fb.column(0).iter().all(|&w| w == 0.0));
    }

    #[test]
    fn mock_encode_of_silence() {
        let e = mock_encode(&AudioBuffer::mono(vec![0.0; 24000], 24000)).unwrap();
        assert_eq!((e.len(), e.dim()), (50, 128));
        assert_eq!(e.rate, 50.0);
        assert!(e.frames.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mock_encode_shape_and_moments() {
        let mut rng = Xoshiro256StarStar::from_seed(2024);
        for len in [24000usize, 30_719, 2048] {
            let buf =
                AudioBuffer::mono((0..len).map(|_| rng.next_uniform() - 0.5).collect(), 24000);
            let e = mock_encode(&buf).unwrap();
            assert_eq!(e.len(), len / 480);
            assert_eq!(e.dim(), 128);
            if e.len() < 2 {
                continue;
            }
            let (mean, std) = column_moments(&e.frames);
            for d in 0..128 {
                assert!(mean[d].abs() < 1e-6);
                assert!((std[d] * std[d] - 1.0).abs() < 1e-6);
            }
        }
        assert!(matches!(
            mock_encode(&AudioBuffer::mono(vec![0.0; 1000], 24000)),
            Err(Error::AudioTooShort { .. })
        ));
    }
}
