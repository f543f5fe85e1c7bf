use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cvkit_cli::bench::{emit_report, run_benchmark, BenchConfig, BenchOp, ReportFormat};
use cvkit_core::image::ImageSize;

/// Times image kernels and codecs on seeded synthetic images.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Args {
    /// Operation to time; repeat for several.
    #[arg(long = "op", required = true)]
    ops: Vec<BenchOp>,

    #[arg(long)]
    width: usize,

    #[arg(long)]
    height: usize,

    /// Timed iterations.
    #[arg(long, default_value_t = 1000)]
    iters: usize,

    /// Untimed iterations before timing.
    #[arg(long, default_value_t = 10)]
    warmup: usize,

    /// Destination size as a fraction of the input for resize ops.
    #[arg(long, default_value_t = 0.5)]
    scale: f64,

    #[arg(long, default_value = "json")]
    format: ReportFormat,

    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: Args) -> anyhow::Result<()> {
    let size = ImageSize::new(args.width, args.height)?;
    anyhow::ensure!(
        args.scale.is_finite() && args.scale > 0.0,
        "--scale must be positive"
    );
    let mut reports = Vec::with_capacity(args.ops.len());
    for op in args.ops {
        let config = BenchConfig {
            warmup: args.warmup,
            scale: args.scale,
            ..BenchConfig::new(op, size, args.iters)
        };
        reports.push(run_benchmark(&config)?);
    }
    emit_report(&reports, args.format, args.out.as_deref())?;
    Ok(())
}

/// Help and version exit 0; usage errors exit 1 rather than clap's 2.
fn usage_exit(e: clap::Error) -> ExitCode {
    let _ = e.print();
    if e.use_stderr() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => return usage_exit(e),
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e:#}");
            ExitCode::from(1)
        }
    }
}
