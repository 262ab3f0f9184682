//! WAV decoding, mono mixing and band-limited resampling.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance on decoded sample magnitude.
pub const CLIP_TOLERANCE: f64 = 1e-6;

/// PCM audio held as `f64` samples, interleaved when `channels > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl AudioBuffer {
    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            channels: 1,
        }
    }

    /// Number of frames (samples per channel).
    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn duration_s(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(Error::MalformedContainer(
            "fmt chunk shorter than 16 bytes".into(),
        ));
    }
    let mut format = le_u16(body, 0);
    let channels = le_u16(body, 2);
    let sample_rate = le_u32(body, 4);
    let bits = le_u16(body, 14);
    if format == FORMAT_EXTENSIBLE {
        // sub-format GUID starts at offset 24; its first two bytes hold the tag
        if body.len() < 26 {
            return Err(Error::MalformedContainer(
                "truncated WAVE_FORMAT_EXTENSIBLE".into(),
            ));
        }
        format = le_u16(body, 24);
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        bits,
    })
}

/// Decodes a RIFF/WAVE byte stream holding 16-bit PCM or 32-bit float audio.
///
/// Multi-channel data stays interleaved; call [`to_mono`] to mix down.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedContainer("missing RIFF/WAVE magic".into()));
    }
    let riff_len = le_u32(bytes, 4) as usize;
    if riff_len + 8 > bytes.len() {
        return Err(Error::MalformedContainer(format!(
            "RIFF size {} exceeds file size {}",
            riff_len + 8,
            bytes.len()
        )));
    }
    let end = riff_len + 8;

    let mut fmt = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= end)
            .ok_or_else(|| {
                Error::MalformedContainer(format!(
                    "chunk {:?} of {size} bytes overruns container",
                    String::from_utf8_lossy(id)
                ))
            })?;
        match id {
            b"fmt " => fmt = Some(parse_fmt(&bytes[body_start..body_end])?),
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        // chunks are word aligned
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::MalformedContainer("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedContainer("no data chunk".into()))?;

    if !(1..=2).contains(&fmt.channels) {
        return Err(Error::UnsupportedEncoding(format!(
            "{} channels",
            fmt.channels
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(Error::MalformedContainer("sample rate is zero".into()));
    }
    let samples: Vec<f64> = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => {
            let mut out = Vec::with_capacity(data.len() / 4);
            for c in data.chunks_exact(4) {
                let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
                if !v.is_finite() || v.abs() > 1.0 + CLIP_TOLERANCE {
                    return Err(Error::UnsupportedEncoding(format!(
                        "float sample {v} outside [-1, 1]"
                    )));
                }
                out.push(v);
            }
            out
        }
        (f, b) => {
            return Err(Error::UnsupportedEncoding(format!(
                "format tag {f} with {b} bits per sample"
            )))
        }
    };
    let frame_len = fmt.channels as usize;
    let samples_len = samples.len() - samples.len() % frame_len;
    if samples_len == 0 {
        return Err(Error::EmptyAudio);
    }
    let mut samples = samples;
    samples.truncate(samples_len);
    Ok(AudioBuffer {
        samples,
        sample_rate: fmt.sample_rate,
        channels: fmt.channels,
    })
}

fn wav_header(data_len: usize, format: u16, channels: u16, sample_rate: u32, bits: u16) -> Vec<u8> {
    let block_align = channels * bits / 8;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    out
}

/// Writes interleaved `i16` samples as a canonical 44-byte-header PCM WAV.
pub fn encode_wav_i16(samples: &[i16], sample_rate: u32, channels: u16) -> Vec<u8> {
    let mut out = wav_header(samples.len() * 2, FORMAT_PCM, channels, sample_rate, 16);
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Writes interleaved samples as 32-bit float WAV.
pub fn encode_wav_f32(samples: &[f64], sample_rate: u32, channels: u16) -> Vec<u8> {
    let mut out = wav_header(
        samples.len() * 4,
        FORMAT_IEEE_FLOAT,
        channels,
        sample_rate,
        32,
    );
    for &s in samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// Averages interleaved channels into one.
pub fn to_mono(buf: &AudioBuffer, channels: usize) -> Result<AudioBuffer> {
    if channels == 0 || !buf.samples.len().is_multiple_of(channels) {
        return Err(Error::LengthMismatch {
            len: buf.samples.len(),
            channels,
        });
    }
    let samples = if channels == 1 {
        buf.samples.clone()
    } else {
        buf.samples
            .chunks_exact(channels)
            .map(|f| f.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Ok(AudioBuffer::mono(samples, buf.sample_rate))
}

/// Kaiser window shape parameter.
pub const KAISER_BETA: f64 = 8.6;
/// Zero crossings of the interpolation sinc on each side of the centre.
pub const ZERO_CROSSINGS: usize = 64;
/// Above this many phases the filter is evaluated per output sample
/// instead of tabulated.
const MAX_TABLE_PHASES: u64 = 1024;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Windowed-sinc low-pass interpolator for a fixed rational ratio.
struct SincKernel {
    cutoff: f64,
    /// Half-width of the kernel support in input samples.
    half_width: f64,
    /// Input taps either side of the base index.
    reach: i64,
    i0_beta: f64,
}

impl SincKernel {
    fn new(cutoff: f64) -> Self {
        let half_width = ZERO_CROSSINGS as f64 / cutoff;
        Self {
            cutoff,
            half_width,
            reach: half_width.ceil() as i64,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let r = t / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let kaiser = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        self.cutoff * sinc(self.cutoff * t) * kaiser
    }

    /// Taps for input indices `base - reach + 1 ..= base + reach` when the
    /// output sits `frac` input samples past `base`. Normalized to unit sum.
    fn taps(&self, frac: f64) -> Vec<f64> {
        let mut taps: Vec<f64> = (-self.reach + 1..=self.reach)
            .map(|k| self.eval(frac - k as f64))
            .collect();
        let sum: f64 = taps.iter().sum();
        if sum != 0.0 {
            taps.iter_mut().for_each(|t| *t /= sum);
        }
        taps
    }
}

/// Band-limited polyphase resampling to `target_rate`.
///
/// Output length is `round(len * target / source)`. The anti-aliasing cutoff
/// is the lower of the two Nyquist frequencies; signal outside the buffer is
/// taken as zero.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if buf.samples.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if target_rate == 0 {
        return Err(Error::BadParameter("target rate must be positive".into()));
    }
    let channels = buf.channels.max(1) as usize;
    if !buf.samples.len().is_multiple_of(channels) {
        return Err(Error::LengthMismatch {
            len: buf.samples.len(),
            channels,
        });
    }
    if target_rate == buf.sample_rate {
        return Ok(buf.clone());
    }

    let src = buf.sample_rate as u64;
    let dst = target_rate as u64;
    let g = gcd(src, dst);
    let (up, down) = (dst / g, src / g);
    let in_frames = buf.samples.len() / channels;
    let out_frames = ((in_frames as u64 * dst) as f64 / src as f64).round() as usize;

    let kernel = SincKernel::new((dst as f64 / src as f64).min(1.0));
    let table: Option<Vec<Vec<f64>>> = (up <= MAX_TABLE_PHASES)
        .then(|| (0..up).map(|p| kernel.taps(p as f64 / up as f64)).collect());

    let mut out = vec![0.0; out_frames * channels];
    let mut scratch;
    for n in 0..out_frames {
        let num = n as u64 * down;
        let base = (num / up) as i64;
        let phase = num % up;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                scratch = kernel.taps(phase as f64 / up as f64);
                &scratch
            }
        };
        let first = base - kernel.reach + 1;
        for ch in 0..channels {
            let mut acc = 0.0;
            for (k, &w) in taps.iter().enumerate() {
                let idx = first + k as i64;
                if idx >= 0 && (idx as usize) < in_frames {
                    acc += w * buf.samples[idx as usize * channels + ch];
                }
            }
            out[n * channels + ch] = acc;
        }
    }
    Ok(AudioBuffer {
        samples: out,
        sample_rate: target_rate,
        channels: buf.channels,
    })
}

/// Decode, mix to mono and resample to the canonical 24 kHz.
pub fn load_canonical(bytes: &[u8]) -> Result<AudioBuffer> {
    let decoded = decode_wav(bytes)?;
    let mono = to_mono(&decoded, decoded.channels as usize)?;
    resample(&mono, crate::CANONICAL_RATE)
}
