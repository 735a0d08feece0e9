//! The `invdiff` subcommands as library calls. Each reads a [`RunConfig`]
//! and writes its outputs into a directory.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Ix2, Ix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detect::{aggregate_map, find_sources, match_and_score, DetectionResult, MatchReport};
use crate::error::{Error, Result};
use crate::io::{self, RunConfig, SourcePlan};
use crate::operator::{build_kernel_bank, forward, KernelBank, Observation, PsdrTensor};
use crate::physics::{phi_general, sensor_model, synth_psdr, PointSource, SourceSpec};
use crate::solver::{fista_solve, lambda_max, SolveTrace, SolverConfig};

pub const PSDR_TRUE: &str = "psdr_true.idf";
pub const IMAGE_CLEAN: &str = "image_clean.idf";
pub const IMAGE_SENSED: &str = "image_sensed.idf";
pub const TRUTH: &str = "truth.csv";
pub const IMAGE: &str = "image.idf";
pub const PSDR: &str = "psdr.idf";
pub const TRACE: &str = "trace.csv";
pub const DETECTIONS: &str = "detections.csv";
pub const METRICS: &str = "metrics.csv";
pub const PAIRS: &str = "pairs.csv";

/// Attempts per source before random placement gives up.
const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Everything `synth` produces.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub sources: Vec<PointSource>,
    pub psdr: PsdrTensor,
    pub clean: Array2<f64>,
    pub sensed: Array2<f64>,
}

/// Draws sources uniformly inside the margin, rejecting any closer than
/// `spacing` to one already placed.
pub fn place_sources(plan: &SourcePlan, rows: usize, cols: usize, rng: &mut impl Rng) -> Result<Vec<PointSource>> {
    let (count, rate, spacing, margin, t_start, t_stop) = match *plan {
        SourcePlan::File(ref path) => return io::read_truth_sources(path),
        SourcePlan::Random { count, rate, spacing, margin, t_start, t_stop } => {
            (count, rate, spacing, margin, t_start, t_stop)
        }
    };
    if count == 0 {
        return Ok(Vec::new());
    }
    if 2 * margin >= rows || 2 * margin >= cols {
        return Err(Error::invalid(format!("margin {margin} leaves no room in {rows}x{cols}")));
    }
    let mut out: Vec<PointSource> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS * count {
            return Err(Error::invalid(format!("could not place {count} sources {spacing} px apart")));
        }
        let m = rng.random_range(margin..rows - margin);
        let n = rng.random_range(margin..cols - margin);
        let clear = out
            .iter()
            .all(|s| (s.m as f64 - m as f64).hypot(s.n as f64 - n as f64) >= spacing);
        if clear {
            out.push(PointSource { m, n, rate, t_start, t_stop });
        }
    }
    Ok(out)
}

pub fn kernel_bank(cfg: &RunConfig) -> Result<KernelBank> {
    build_kernel_bank(&cfg.grid()?, cfg.physics.psf_sigma, cfg.quad_order)
}

/// Sources, their PSDR, the noiseless image and the sensed image. Source
/// placement draws from `seed`; sensor noise from `seed + 1`.
pub fn synthesize(cfg: &RunConfig, seed: u64) -> Result<Synthesis> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sources = place_sources(&cfg.sources, cfg.rows, cfg.cols, &mut rng)?;
    let phi = phi_general(&cfg.physics, cfg.tau_steps, cfg.eps)?;
    let spec = SourceSpec::new(sources);
    let psdr = synth_psdr(&spec, &cfg.physics, &grid, &phi, (cfg.rows, cfg.cols))?;
    let bank = kernel_bank(cfg)?;
    let clean = forward(&psdr, &bank)?.mapv(|v| v.max(0.0));
    let sensed = sensor_model(&clean, &cfg.sensor, seed.wrapping_add(1))?;
    Ok(Synthesis { sources: spec.sources, psdr, clean, sensed })
}

/// Observation of `image` with the configured weights and mask (uniform
/// when not given).
pub fn observation(cfg: &RunConfig, image: Array2<f64>) -> Result<Observation> {
    let dims = image.dim();
    let weights = match &cfg.weights_file {
        Some(p) => io::read_image(p)?,
        None => Array2::ones(dims),
    };
    let mask = match &cfg.mask_file {
        Some(p) => io::read_image(p)?.mapv(|v| v != 0.0),
        None => Array2::from_elem(dims, true),
    };
    Observation::new(image, weights, mask)
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// Writes `image_*.idf` with `.pgm` previews, `psdr_true.idf` and `truth.csv`.
pub fn cmd_synth(cfg: &RunConfig, seed: u64, out: &Path) -> Result<Synthesis> {
    prepare(out)?;
    let s = synthesize(cfg, seed)?;
    io::write_array3(&out.join(PSDR_TRUE), s.psdr.data())?;
    io::write_image(&out.join(IMAGE_CLEAN), &s.clean)?;
    io::write_image(&out.join(IMAGE_SENSED), &s.sensed)?;
    io::write_pgm(&out.join("image_clean.pgm"), &s.clean)?;
    io::write_pgm(&out.join("image_sensed.pgm"), &s.sensed)?;
    fs::write(out.join(TRUTH), io::truth_csv(&s.sources))?;
    Ok(s)
}

/// Forward image of a stored PSDR, written to `image.idf`.
pub fn cmd_forward(cfg: &RunConfig, psdr: &Path, out: &Path) -> Result<Array2<f64>> {
    prepare(out)?;
    let a = PsdrTensor::new(io::read_array3(psdr)?)?;
    let y = forward(&a, &kernel_bank(cfg)?)?;
    io::write_image(&out.join(IMAGE), &y)?;
    io::write_pgm(&out.join("image.pgm"), &y.mapv(|v| v.max(0.0)))?;
    Ok(y)
}

/// Solver settings with `lambda_rel` resolved against this observation.
pub fn solver_config(cfg: &RunConfig, obs: &Observation, bank: &KernelBank) -> Result<SolverConfig> {
    let mut s = cfg.solver;
    if let Some(r) = cfg.lambda_rel {
        s.lambda = r * lambda_max(obs, bank)?;
    }
    Ok(s)
}

/// Recovered PSDR (`psdr.idf`) and iteration trace (`trace.csv`).
pub fn cmd_solve(cfg: &RunConfig, image: &Path, out: &Path) -> Result<(PsdrTensor, SolveTrace)> {
    prepare(out)?;
    let obs = observation(cfg, io::read_image(image)?)?;
    let bank = kernel_bank(cfg)?;
    let solver = solver_config(cfg, &obs, &bank)?;
    let (a, trace) = fista_solve(&obs, &bank, &solver, None)?;
    io::write_array3(&out.join(PSDR), a.data())?;
    fs::write(out.join(TRACE), trace.to_csv())?;
    Ok((a, trace))
}

/// Source map from a PSDR (rank 3) or an already aggregated map (rank 2).
pub fn load_map(cfg: &RunConfig, input: &Path) -> Result<Array2<f64>> {
    let t = io::read_tensor(input)?;
    match t.ndim() {
        2 => Ok(t.into_dimensionality::<Ix2>().unwrap()),
        3 => {
            let a = PsdrTensor::new(t.into_dimensionality::<Ix3>().unwrap())?;
            aggregate_map(&a, &cfg.grid()?)
        }
        r => Err(Error::Format { path: input.to_path_buf(), message: format!("expected rank 2 or 3, got {r}") }),
    }
}

/// Peaks of the source map, written to `detections.csv`.
pub fn cmd_detect(cfg: &RunConfig, input: &Path, out: &Path) -> Result<DetectionResult> {
    prepare(out)?;
    let map = load_map(cfg, input)?;
    let d = find_sources(&map, cfg.detect.rel_threshold, cfg.detect.min_separation)?;
    fs::write(out.join(DETECTIONS), io::detections_csv(&d))?;
    Ok(d)
}

/// Detection plus scoring against a truth CSV: `detections.csv`,
/// `metrics.csv` and `pairs.csv`.
pub fn cmd_eval(cfg: &RunConfig, input: &Path, truth: &Path, out: &Path) -> Result<MatchReport> {
    let d = cmd_detect(cfg, input, out)?;
    let t = io::read_locations(truth)?;
    let r = match_and_score(&d, &t, cfg.detect.match_radius)?;
    fs::write(out.join(METRICS), io::metrics_csv(&r))?;
    fs::write(out.join(PAIRS), io::pairs_csv(&r, &d, &t))?;
    Ok(r)
}

/// One `kernel_NN.idf` per scale bin, `NN` 1-based.
pub fn cmd_kernels(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    prepare(out)?;
    let bank = kernel_bank(cfg)?;
    let mut paths = Vec::new();
    for (k, g) in bank.kernels().iter().enumerate() {
        let p = out.join(format!("kernel_{:02}.idf", k + 1));
        io::write_image(&p, g.data())?;
        paths.push(p);
    }
    Ok(paths)
}
