//! Hand-crafted musical features: percussive onset strength and 12-bin chroma.
//!
//! All extraction runs on canonical 24 kHz mono audio with a 2048-point Hann
//! STFT and a 480-sample hop, giving exactly 50 frames per second.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::{CANONICAL_FFT, CANONICAL_HOP, PITCH_CLASSES};

/// Median kernel length along both axes of the HPSS filter.
pub const HPSS_KERNEL: usize = 17;
const HPSS_EPS: f64 = 1e-10;
/// Chroma rows with less total energy than this are treated as silent.
pub const CHROMA_SILENCE: f64 = 1e-8;
pub const CHROMA_FMIN: f64 = 55.0;
pub const CHROMA_FMAX: f64 = 8000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpec {
    pub fft_size: usize,
    pub hop: usize,
}

impl FrameSpec {
    pub fn new(fft_size: usize, hop: usize) -> Result<Self> {
        if !fft_size.is_power_of_two() {
            return Err(Error::BadFrameSpec(format!(
                "fft size {fft_size} is not a power of two"
            )));
        }
        if hop == 0 || hop > fft_size {
            return Err(Error::BadFrameSpec(format!(
                "hop {hop} not in 1..={fft_size}"
            )));
        }
        Ok(Self { fft_size, hop })
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            fft_size: CANONICAL_FFT,
            hop: CANONICAL_HOP,
        }
    }
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Magnitude spectrogram, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub mags: Matrix,
    pub sample_rate: u32,
    pub spec: FrameSpec,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.mags.rows()
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.spec.hop as f64
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.spec.fft_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Chroma,
    Onset,
}

impl FeatureKind {
    pub fn width(self) -> usize {
        match self {
            FeatureKind::Chroma => PITCH_CLASSES,
            FeatureKind::Onset => 1,
        }
    }
}

/// Time-aligned feature frames (`T x 12` chroma or `T x 1` onset).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrack {
    pub frames: Matrix,
    pub rate: f64,
    pub kind: FeatureKind,
}

impl FeatureTrack {
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    /// Onset values as a flat slice. Only meaningful for onset tracks.
    pub fn values(&self) -> &[f64] {
        self.frames.as_slice()
    }

    /// Rescales non-zero chroma rows back to unit L1 norm, e.g. after
    /// interpolating between a silent and a voiced frame.
    pub fn renormalize_chroma(&mut self) {
        for t in 0..self.frames.rows() {
            let row = self.frames.row_mut(t);
            let total: f64 = row.iter().sum();
            if total < CHROMA_SILENCE {
                row.fill(0.0);
            } else {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
    }
}

fn reflect_index(i: isize, len: usize) -> usize {
    // single reflection suffices because padding < len
    let n = len as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// Hann-windowed STFT magnitude with reflect padding so frame `t` is centred
/// on sample `t * hop`. Produces `floor(len / hop)` frames.
pub fn stft_magnitude(buf: &AudioBuffer, spec: FrameSpec) -> Result<Spectrogram> {
    let x = &buf.samples;
    if x.len() < spec.fft_size {
        return Err(Error::AudioTooShort {
            len: x.len(),
            needed: spec.fft_size,
        });
    }
    let n = spec.fft_size;
    let frames = x.len() / spec.hop;
    let bins = spec.bins();
    let window = hann(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut frame = vec![Complex::default(); n];
    let mut mags = Matrix::zeros(frames, bins);
    let half = (n / 2) as isize;
    for t in 0..frames {
        let start = (t * spec.hop) as isize - half;
        for (i, (slot, w)) in frame.iter_mut().zip(&window).enumerate() {
            let idx = reflect_index(start + i as isize, x.len());
            *slot = Complex::new(x[idx] * w, 0.0);
        }
        fft.process_with_scratch(&mut frame, &mut scratch);
        for (m, c) in mags.row_mut(t).iter_mut().zip(&frame[..bins]) {
            *m = c.norm();
        }
    }
    Ok(Spectrogram {
        mags,
        sample_rate: buf.sample_rate,
        spec,
    })
}

/// Median of `buf`, averaging the two central values for even lengths.
fn median(buf: &mut [f64]) -> f64 {
    let n = buf.len();
    buf.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Centred running median with the window clipped at the edges.
fn running_median(values: &[f64], kernel: usize, out: &mut [f64]) {
    let half = kernel / 2;
    let mut buf = Vec::with_capacity(kernel);
    for (i, o) in out.iter_mut().enumerate().take(values.len()) {
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(values.len());
        buf.clear();
        buf.extend_from_slice(&values[lo..hi]);
        *o = median(&mut buf);
    }
}

/// Harmonic-enhanced spectrogram: median over time for each bin.
pub fn harmonic_median(spec: &Spectrogram) -> Matrix {
    let m = &spec.mags;
    let mut out = Matrix::zeros(m.rows(), m.cols());
    let mut col_out = vec![0.0; m.rows()];
    for k in 0..m.cols() {
        running_median(&m.column(k), HPSS_KERNEL, &mut col_out);
        for (t, v) in col_out.iter().enumerate() {
            out[(t, k)] = *v;
        }
    }
    out
}

/// Percussive-enhanced spectrogram: median over frequency for each frame.
pub fn percussive_median(spec: &Spectrogram) -> Matrix {
    let m = &spec.mags;
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for t in 0..m.rows() {
        running_median(m.row(t), HPSS_KERNEL, out.row_mut(t));
    }
    out
}

/// Percussive component of median-filter HPSS with a squared soft mask.
pub fn hpss_percussive(spec: &Spectrogram) -> Spectrogram {
    let h = harmonic_median(spec);
    let p = percussive_median(spec);
    let mut mags = spec.mags.clone();
    for ((m, &hv), &pv) in mags
        .as_mut_slice()
        .iter_mut()
        .zip(h.as_slice())
        .zip(p.as_slice())
    {
        let p2 = pv * pv;
        *m *= p2 / (hv * hv + p2 + HPSS_EPS);
    }
    Spectrogram {
        mags,
        sample_rate: spec.sample_rate,
        spec: spec.spec,
    }
}

/// Positive log spectral flux, averaged over bins and scaled to `[0, 1]` by
/// the clip maximum.
pub fn onset_envelope(perc: &Spectrogram) -> FeatureTrack {
    let m = &perc.mags;
    let frames = m.rows();
    let mut raw = vec![0.0; frames];
    for (t, r) in raw.iter_mut().enumerate().skip(1) {
        let flux: f64 = m
            .row(t)
            .iter()
            .zip(m.row(t - 1))
            .map(|(&cur, &prev)| (cur.ln_1p() - prev.ln_1p()).max(0.0))
            .sum();
        *r = flux / m.cols() as f64;
    }
    let peak = raw.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        raw.iter_mut().for_each(|v| *v /= peak);
    }
    FeatureTrack {
        frames: Matrix::from_vec(frames, 1, raw),
        rate: perc.frame_rate(),
        kind: FeatureKind::Onset,
    }
}

/// Pitch class of a frequency, with A4 = 440 Hz at MIDI 69 and C = 0.
pub fn pitch_class(freq: f64) -> usize {
    let midi = (12.0 * (freq / 440.0).log2() + 69.0).round() as i64;
    midi.rem_euclid(12) as usize
}

/// Energy chroma: squared magnitudes folded onto 12 pitch classes, rows
/// L1-normalized, silent rows zeroed.
pub fn chroma(spec: &Spectrogram) -> FeatureTrack {
    let m = &spec.mags;
    let classes: Vec<Option<usize>> = (0..m.cols())
        .map(|k| {
            let f = spec.bin_frequency(k);
            (k >= 1 && (CHROMA_FMIN..=CHROMA_FMAX).contains(&f)).then(|| pitch_class(f))
        })
        .collect();
    let mut out = Matrix::zeros(m.rows(), PITCH_CLASSES);
    for t in 0..m.rows() {
        let row = out.row_mut(t);
        for (&mag, pc) in m.row(t).iter().zip(&classes) {
            if let Some(pc) = *pc {
                row[pc] += mag * mag;
            }
        }
        let total: f64 = row.iter().sum();
        if total < CHROMA_SILENCE {
            row.fill(0.0);
        } else {
            row.iter_mut().for_each(|v| *v /= total);
        }
    }
    FeatureTrack {
        frames: out,
        rate: spec.frame_rate(),
        kind: FeatureKind::Chroma,
    }
}

/// Chroma and onset tracks for canonical mono audio.
pub fn extract(buf: &AudioBuffer) -> Result<(FeatureTrack, FeatureTrack)> {
    let spec = stft_magnitude(buf, FrameSpec::default())?;
    let onset = onset_envelope(&hpss_percussive(&spec));
    Ok((chroma(&spec), onset))
}
