use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cvkit_core::image::{Image, ImageSize};
use cvkit_core::imgproc::color::gray_from_rgb;
use cvkit_core::imgproc::filter::sobel;
use cvkit_core::imgproc::flip::flip_horizontal;
use cvkit_core::imgproc::resize::{resize_bilinear, resize_nearest};
use cvkit_core::io::{decode_jpeg, decode_png, encode_jpeg, encode_png};
use cvkit_core::tensor::{CountingAllocator, CpuAllocator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seed for every benchmark fixture.
pub const FIXTURE_SEED: u64 = 0x5eed;
pub const JPEG_QUALITY: u8 = 90;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unknown op {0:?}; expected one of {ops}", ops = BenchOp::NAMES.join(", "))]
    UnknownOp(String),

    #[error("iterations must be at least 1")]
    NoIterations,

    #[error("fixture setup failed: {0}")]
    FixtureFailure(String),

    #[error("could not write report: {0}")]
    Io(#[from] std::io::Error),

    #[error("could not serialize report: {0}")]
    Serialize(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchOp {
    GrayFromRgb,
    FlipHorizontal,
    ResizeNearest,
    ResizeBilinear,
    Sobel,
    DecodePng,
    DecodeJpeg,
    EncodeJpeg,
}

impl BenchOp {
    pub const ALL: [BenchOp; 8] = [
        Self::GrayFromRgb,
        Self::FlipHorizontal,
        Self::ResizeNearest,
        Self::ResizeBilinear,
        Self::Sobel,
        Self::DecodePng,
        Self::DecodeJpeg,
        Self::EncodeJpeg,
    ];
    const NAMES: [&'static str; 8] = [
        "gray_from_rgb",
        "flip_horizontal",
        "resize_nearest",
        "resize_bilinear",
        "sobel",
        "decode_png",
        "decode_jpeg",
        "encode_jpeg",
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES[Self::ALL.iter().position(|&op| op == self).unwrap()]
    }

    /// Kernels that write into caller buffers; codec ops produce fresh
    /// images or byte streams by contract.
    pub fn is_kernel(self) -> bool {
        !matches!(self, Self::DecodePng | Self::DecodeJpeg | Self::EncodeJpeg)
    }
}

impl fmt::Display for BenchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchOp {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::NAMES
            .iter()
            .position(|&n| n == s)
            .map(|i| Self::ALL[i])
            .ok_or_else(|| BenchError::UnknownOp(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub op: String,
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub p95_ns: f64,
    pub stddev_ns: f64,
    /// Input megapixels processed per second of timed work.
    pub throughput_megapixels_per_s: f64,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
    pub build_profile: String,
}

pub const REPORT_FIELDS: [&str; 11] = [
    "op",
    "width",
    "height",
    "iterations",
    "mean_ns",
    "median_ns",
    "p95_ns",
    "stddev_ns",
    "throughput_megapixels_per_s",
    "timestamp",
    "build_profile",
];

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub op: BenchOp,
    pub size: ImageSize,
    pub iterations: usize,
    pub warmup: usize,
    /// Destination scale for the resize ops.
    pub scale: f64,
}

impl BenchConfig {
    pub fn new(op: BenchOp, size: ImageSize, iterations: usize) -> Self {
        Self {
            op,
            size,
            iterations,
            warmup: 10,
            scale: 0.5,
        }
    }
}

/// Timing summary for a set of per-iteration samples in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub total: f64,
}

impl Stats {
    pub fn from_samples(samples: &mut [u64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        samples.sort_unstable();
        let n = samples.len();
        let total: f64 = samples.iter().map(|&s| s as f64).sum();
        let mean = total / n as f64;
        let median = if n % 2 == 1 {
            samples[n / 2] as f64
        } else {
            (samples[n / 2 - 1] as f64 + samples[n / 2] as f64) / 2.0
        };
        let rank = (0.95 * n as f64).ceil() as usize;
        let p95 = samples[rank.clamp(1, n) - 1] as f64;
        let var = samples.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        Some(Self {
            mean,
            median,
            p95,
            stddev: var.sqrt(),
            total,
        })
    }
}

/// Seeded pseudo-random RGB image; identical bytes on every call.
pub fn fixture_rgb(size: ImageSize) -> Image<u8, 3> {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let mut data = vec![0u8; size.area() * 3];
    rng.fill(&mut data[..]);
    Image::from_size_slice(size, &data).expect("length matches size")
}

fn scaled(size: ImageSize, scale: f64) -> Result<ImageSize, BenchError> {
    let dim = |v: usize| ((v as f64 * scale).round() as usize).max(1);
    ImageSize::new(dim(size.width()), dim(size.height()))
        .map_err(|e| BenchError::FixtureFailure(e.to_string()))
}

fn fixture_err(e: impl fmt::Display) -> BenchError {
    BenchError::FixtureFailure(e.to_string())
}

/// Runs `warmup` untimed and `iterations` timed calls of `step`. Returns the
/// samples and the allocator's acquire count growth across the timed calls.
fn time_loop(
    iterations: usize,
    warmup: usize,
    alloc: &CountingAllocator,
    mut step: impl FnMut() -> Result<(), BenchError>,
) -> Result<(Vec<u64>, usize), BenchError> {
    for _ in 0..warmup {
        step()?;
    }
    let mut samples = Vec::with_capacity(iterations);
    let before = alloc.acquire_count();
    for _ in 0..iterations {
        let start = Instant::now();
        step()?;
        // Instant has nanosecond resolution; keep every sample positive
        samples.push((start.elapsed().as_nanos() as u64).max(1));
    }
    Ok((samples, alloc.acquire_count() - before))
}

/// Runs a benchmark and also returns how many tensor regions were acquired
/// during the timed iterations. Every image buffer comes from a
/// [`CountingAllocator`].
pub fn run_benchmark_counted(config: &BenchConfig) -> Result<(BenchReport, usize), BenchError> {
    if config.iterations == 0 {
        return Err(BenchError::NoIterations);
    }
    let (iters, warmup) = (config.iterations, config.warmup);
    let alloc = CountingAllocator::new(CpuAllocator);
    let size = config.size;
    let rgb = fixture_rgb(size);
    let rgb_in = Image::<u8, 3, _>::from_size_slice_in(size, rgb.as_slice(), alloc.clone())
        .map_err(fixture_err)?;
    let as_f32 = |img: &Image<u8, 3>| -> Vec<f32> { img.as_slice().iter().map(|&v| v as f32 / 255.0).collect() };

    let (samples, acquired) = match config.op {
        BenchOp::GrayFromRgb => {
            let mut dst = Image::<u8, 1, _>::from_size_val_in(size, 0, alloc.clone()).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || gray_from_rgb(&rgb_in, &mut dst).map_err(fixture_err))?
        }
        BenchOp::FlipHorizontal => {
            let mut dst = Image::<u8, 3, _>::from_size_val_in(size, 0, alloc.clone()).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || flip_horizontal(&rgb_in, &mut dst).map_err(fixture_err))?
        }
        BenchOp::ResizeNearest => {
            let dst_size = scaled(size, config.scale)?;
            let mut dst = Image::<u8, 3, _>::from_size_val_in(dst_size, 0, alloc.clone()).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || resize_nearest(&rgb_in, &mut dst).map_err(fixture_err))?
        }
        BenchOp::ResizeBilinear => {
            let src = Image::<f32, 3, _>::from_size_slice_in(size, &as_f32(&rgb), alloc.clone()).map_err(fixture_err)?;
            let dst_size = scaled(size, config.scale)?;
            let mut dst = Image::<f32, 3, _>::from_size_val_in(dst_size, 0.0, alloc.clone()).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || resize_bilinear(&src, &mut dst).map_err(fixture_err))?
        }
        BenchOp::Sobel => {
            let gray: Vec<f32> = as_f32(&rgb).chunks_exact(3).map(|p| p[1]).collect();
            let src = Image::<f32, 1, _>::from_size_slice_in(size, &gray, alloc.clone()).map_err(fixture_err)?;
            let mut dst = Image::<f32, 1, _>::from_size_val_in(size, 0.0, alloc.clone()).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || sobel(&src, &mut dst, 3).map_err(fixture_err))?
        }
        BenchOp::DecodePng => {
            let bytes = encode_png(&rgb).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || {
                std::hint::black_box(decode_png(&bytes).map_err(fixture_err)?);
                Ok(())
            })?
        }
        BenchOp::DecodeJpeg => {
            let bytes = encode_jpeg(&rgb, JPEG_QUALITY).map_err(fixture_err)?;
            time_loop(iters, warmup, &alloc, || {
                std::hint::black_box(decode_jpeg(&bytes).map_err(fixture_err)?);
                Ok(())
            })?
        }
        BenchOp::EncodeJpeg => time_loop(iters, warmup, &alloc, || {
            std::hint::black_box(encode_jpeg(&rgb_in, JPEG_QUALITY).map_err(fixture_err)?);
            Ok(())
        })?,
    };

    let mut samples = samples;
    let stats = Stats::from_samples(&mut samples).expect("at least one iteration");
    let megapixels = (size.area() * iters) as f64 / 1e6;
    let report = BenchReport {
        op: config.op.name().to_string(),
        width: size.width(),
        height: size.height(),
        iterations: iters,
        mean_ns: stats.mean,
        median_ns: stats.median,
        p95_ns: stats.p95,
        stddev_ns: stats.stddev,
        throughput_megapixels_per_s: megapixels / (stats.total / 1e9),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        build_profile: if cfg!(debug_assertions) { "debug" } else { "release" }.to_string(),
    };
    Ok((report, acquired))
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    run_benchmark_counted(config).map(|(report, _)| report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format {other:?}; expected json or csv")),
        }
    }
}

/// Writes reports as a JSON array or as CSV with a header row.
pub fn write_report<W: Write>(
    reports: &[BenchReport],
    format: ReportFormat,
    mut out: W,
) -> Result<(), BenchError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, reports)
                .map_err(|e| BenchError::Serialize(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            if reports.is_empty() {
                w.write_record(REPORT_FIELDS)
                    .map_err(|e| BenchError::Serialize(e.to_string()))?;
            }
            for r in reports {
                w.serialize(r).map_err(|e| BenchError::Serialize(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes to `path`, or standard output when `None`.
pub fn emit_report(
    reports: &[BenchReport],
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), BenchError> {
    match path {
        Some(path) => write_report(reports, format, std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => write_report(reports, format, std::io::stdout().lock()),
    }
}
