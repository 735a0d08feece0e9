use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use invdiff::io::RunConfig;
use invdiff::pipeline;

#[derive(Parser)]
#[command(name = "invdiff", version, about = "Source localization by inverse diffusion")]
struct Cli {
    /// Run configuration (`key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sources, their PSDR and the clean and sensed images.
    Synth,
    /// Image of a stored PSDR tensor.
    Forward { psdr: PathBuf },
    /// Recover a PSDR tensor from an image.
    Solve { image: PathBuf },
    /// Detect sources in a PSDR tensor or aggregated map.
    Detect { input: PathBuf },
    /// Detect and score against a truth CSV.
    Eval { input: PathBuf, truth: PathBuf },
    /// Dump the kernel bank.
    Kernels,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var("INVDIFF_THREADS") {
        let n: usize = v.parse().with_context(|| format!("INVDIFF_THREADS={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = &cli.out;
    match cli.command {
        Command::Synth => {
            let s = pipeline::cmd_synth(&cfg, cfg.seed, out)?;
            eprintln!("{} sources, image max {:.6e}", s.sources.len(), s.clean.fold(0.0f64, |m, &v| m.max(v)));
        }
        Command::Forward { psdr } => {
            pipeline::cmd_forward(&cfg, &psdr, out)?;
        }
        Command::Solve { image } => {
            let (_, trace) = pipeline::cmd_solve(&cfg, &image, out)?;
            let last = trace.records.last().map_or(0.0, |r| r.cost);
            eprintln!("{} iterations, converged {}, cost {:.6e}", trace.iterations, trace.converged, last);
        }
        Command::Detect { input } => {
            let d = pipeline::cmd_detect(&cfg, &input, out)?;
            eprintln!("{} detections", d.locations.len());
        }
        Command::Eval { input, truth } => {
            let r = pipeline::cmd_eval(&cfg, &input, &truth, out)?;
            eprintln!("precision {:.4} recall {:.4} f1 {:.4}", r.precision, r.recall, r.f1);
        }
        Command::Kernels => {
            let paths = pipeline::cmd_kernels(&cfg, out)?;
            eprintln!("{} kernels", paths.len());
        }
    }
    Ok(())
}
