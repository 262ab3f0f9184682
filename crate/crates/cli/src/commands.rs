use std::fs;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use lav_core::audio::{self, load_canonical};
use lav_core::latent::{self, compute_stats};
use lav_core::pipeline::{self, PipelineConfig};
use lav_core::trajectory::{self, default_groups};
use lav_core::{MapParams, SmoothingWindows};

use crate::error::CliError;
use crate::{MapArgs, MockEncodeArgs, StatsArgs};

fn read(path: &Path, what: &str) -> Result<Vec<u8>, CliError> {
    fs::read(path)
        .map_err(|e| CliError::from(e).context(format!("reading {what} {}", path.display())))
}

/// Writes via a sibling temp file so a failed run never leaves a partial output.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path.file_name().ok_or_else(|| {
        CliError::usage(format!("output path {} has no file name", path.display()))
    })?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::from(e).context(format!("writing {}", path.display())));
    }
    Ok(())
}

fn emit<T: Serialize>(summary: &T) -> Result<(), CliError> {
    let line = serde_json::to_string(summary).map_err(|e| CliError::Numeric(e.into()))?;
    println!("{line}");
    Ok(())
}

#[derive(Serialize)]
struct ParamSummary {
    seed: u64,
    y: f64,
    c: f64,
    lambda_chroma: f64,
    fps: f64,
    win_coarse: usize,
    win_middle: usize,
    win_fine: usize,
}

#[derive(Serialize)]
struct GroupSummary {
    coarse: [usize; 2],
    middle: [usize; 2],
    fine: [usize; 2],
}

#[derive(Serialize)]
struct MapSummary<'a> {
    command: &'static str,
    audio: &'a Path,
    embeddings: Option<&'a Path>,
    stats: &'a Path,
    out: &'a Path,
    duration_s: f64,
    mock_encoded: bool,
    embedding_dim: usize,
    embedding_frames: usize,
    embedding_rate: f64,
    frames: usize,
    num_layers: usize,
    latent_dim: usize,
    params: ParamSummary,
    groups: GroupSummary,
}

pub fn map(a: &MapArgs) -> Result<(), CliError> {
    let params = MapParams {
        y: a.y,
        c: a.c,
        lambda_chroma: a.lambda_chroma,
        seed: a.seed,
    };
    let windows = SmoothingWindows {
        coarse: a.win_coarse,
        middle: a.win_middle,
        fine: a.win_fine,
    };
    params.validate()?;
    windows.validate()?;
    if !(a.fps.is_finite() && a.fps > 0.0) {
        return Err(CliError::usage(format!("--fps {} must be positive", a.fps)));
    }
    let config = PipelineConfig {
        params,
        fps: a.fps,
        windows,
    };

    let stats = latent::read_stats(&read(&a.stats, "stats")?)
        .map_err(|e| CliError::from(e).context(format!("parsing {}", a.stats.display())))?;
    let groups = default_groups(stats.num_layers as usize)
        .map_err(|e| CliError::Input(e.into()).context("stats num_layers"))?;
    let embeddings = match &a.embeddings {
        Some(p) => Some(
            latent::read_embeddings(&read(p, "embeddings")?)
                .map_err(|e| CliError::from(e).context(format!("parsing {}", p.display())))?,
        ),
        None => None,
    };
    let audio = load_canonical(&read(&a.audio, "audio")?)
        .map_err(|e| CliError::from(e).context(format!("decoding {}", a.audio.display())))?;
    info!(
        "audio: {:.3} s at {} Hz",
        audio.duration_s(),
        audio.sample_rate
    );
    if embeddings.is_none() {
        info!("no --embeddings given; using the mock encoder");
    }

    let out = pipeline::run(&audio, embeddings, &stats, &config)?;
    if !out.trajectory.is_finite() {
        return Err(CliError::numeric("trajectory contains non-finite values"));
    }
    let bytes = trajectory::write_trajectory(&out.trajectory);
    write_atomic(&a.out, &bytes)?;

    let range = |r: &std::ops::Range<usize>| [r.start, r.end];
    emit(&MapSummary {
        command: "map",
        audio: &a.audio,
        embeddings: a.embeddings.as_deref(),
        stats: &a.stats,
        out: &a.out,
        duration_s: audio.duration_s(),
        mock_encoded: out.mock_encoded,
        embedding_dim: out.embeddings.dim(),
        embedding_frames: out.embeddings.len(),
        embedding_rate: out.embeddings.rate,
        frames: out.trajectory.frame_count,
        num_layers: out.trajectory.num_layers,
        latent_dim: out.trajectory.latent_dim,
        params: ParamSummary {
            seed: a.seed,
            y: a.y,
            c: a.c,
            lambda_chroma: a.lambda_chroma,
            fps: a.fps,
            win_coarse: a.win_coarse,
            win_middle: a.win_middle,
            win_fine: a.win_fine,
        },
        groups: GroupSummary {
            coarse: range(&groups.coarse),
            middle: range(&groups.middle),
            fine: range(&groups.fine),
        },
    })
}

#[derive(Serialize)]
struct StatsSummary<'a> {
    command: &'static str,
    w_samples: &'a Path,
    out: &'a Path,
    sample_count: u64,
    latent_dim: usize,
    num_layers: u32,
    anchor_seed: u64,
}

pub fn stats(a: &StatsArgs) -> Result<(), CliError> {
    if a.num_layers < 3 {
        return Err(CliError::usage(format!(
            "--num-layers {} must be at least 3",
            a.num_layers
        )));
    }
    let samples = latent::read_embeddings(&read(&a.w_samples, "w samples")?)
        .map_err(|e| CliError::from(e).context(format!("parsing {}", a.w_samples.display())))?;
    let stats = compute_stats(&samples.frames, a.num_layers, a.anchor_seed)?;
    if let Some(d) = stats.std.iter().position(|&s| s <= latent::STD_FLOOR) {
        warn!("dimension {d} has std at the floor {}", latent::STD_FLOOR);
    }
    write_atomic(&a.out, &latent::write_stats(&stats))?;
    emit(&StatsSummary {
        command: "stats",
        w_samples: &a.w_samples,
        out: &a.out,
        sample_count: stats.sample_count,
        latent_dim: stats.latent_dim(),
        num_layers: stats.num_layers,
        anchor_seed: a.anchor_seed,
    })
}

#[derive(Serialize)]
struct EncodeSummary<'a> {
    command: &'static str,
    audio: &'a Path,
    out: &'a Path,
    duration_s: f64,
    frames: usize,
    dim: usize,
    rate: f64,
}

pub fn mock_encode(a: &MockEncodeArgs) -> Result<(), CliError> {
    let audio = load_canonical(&read(&a.audio, "audio")?)
        .map_err(|e| CliError::from(e).context(format!("decoding {}", a.audio.display())))?;
    let seq = latent::mock_encode(&audio)?;
    write_atomic(&a.out, &latent::write_embeddings(&seq))?;
    emit(&EncodeSummary {
        command: "mock-encode",
        audio: &a.audio,
        out: &a.out,
        duration_s: audio.duration_s(),
        frames: seq.len(),
        dim: seq.dim(),
        rate: seq.rate,
    })
}

pub fn inspect(path: &Path) -> Result<(), CliError> {
    let bytes = read(path, "file")?;
    let ctx = |e: lav_core::Error| {
        CliError::Input(e.into()).context(format!("parsing {}", path.display()))
    };
    let line = match bytes.get(..4) {
        Some(b"LAVE") => {
            let h = latent::read_embeddings_header(&bytes).map_err(ctx)?;
            format!(
                "LAVE version=1 dim={} rate={} frames={}",
                h.dim, h.rate, h.frame_count
            )
        }
        Some(b"LAVS") => {
            let s = latent::read_stats(&bytes).map_err(ctx)?;
            format!(
                "LAVS version=1 latent_dim={} num_layers={} sample_count={}",
                s.latent_dim(),
                s.num_layers,
                s.sample_count
            )
        }
        Some(b"LAVT") => {
            let h = trajectory::read_trajectory_header(&bytes).map_err(ctx)?;
            format!(
                "LAVT version=1 latent_dim={} num_layers={} fps={} frames={}",
                h.latent_dim, h.num_layers, h.fps, h.frame_count
            )
        }
        Some(b"RIFF") => {
            let buf = audio::decode_wav(&bytes).map_err(ctx)?;
            format!(
                "WAV sample_rate={} channels={} frames={} duration_s={:.6}",
                buf.sample_rate,
                buf.channels,
                buf.frames(),
                buf.duration_s()
            )
        }
        _ => {
            return Err(CliError::Input(anyhow::anyhow!(
                "{}: unrecognized file type",
                path.display()
            )))
        }
    };
    println!("{line}");
    Ok(())
}
