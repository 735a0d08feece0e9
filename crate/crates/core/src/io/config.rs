//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Unknown or repeated keys are errors. Lists are comma separated. Relative
//! paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::detect::{DEFAULT_MATCH_RADIUS, DEFAULT_MIN_SEPARATION, DEFAULT_REL_THRESHOLD};
use crate::error::{Error, Result};
use crate::operator::{SigmaGrid, DEFAULT_QUAD_ORDER};
use crate::physics::{PhysicalParams, SensorConfig};
use crate::solver::SolverConfig;

/// Default regularization as a fraction of the zero-solution threshold.
pub const DEFAULT_LAMBDA_REL: f64 = 0.1;

const KEYS: &[&str] = &[
    "kappa_a",
    "kappa_d",
    "diffusion",
    "horizon",
    "pixel_pitch",
    "psf_sigma",
    "rows",
    "cols",
    "sigma_boundaries",
    "scale_to_sigma_max",
    "support",
    "quad_order",
    "tau_steps",
    "eps",
    "sources_file",
    "n_sources",
    "source_rate",
    "source_spacing",
    "source_margin",
    "release_start",
    "release_stop",
    "noise_sigma",
    "bits",
    "lambda",
    "lambda_rel",
    "max_iters",
    "rel_tol",
    "step_safety",
    "restart",
    "power_iters",
    "weights_file",
    "mask_file",
    "rel_threshold",
    "min_separation",
    "match_radius",
    "seed",
];

/// Where synthetic sources come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourcePlan {
    /// A truth CSV (`m,n,rate,t_start,t_stop`).
    File(PathBuf),
    /// `count` sources at least `spacing` pixels apart and `margin` pixels
    /// from the border, all with the same rate and release window.
    Random { count: usize, rate: f64, spacing: f64, margin: usize, t_start: f64, t_stop: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub rel_threshold: f64,
    pub min_separation: usize,
    pub match_radius: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            rel_threshold: DEFAULT_REL_THRESHOLD,
            min_separation: DEFAULT_MIN_SEPARATION,
            match_radius: DEFAULT_MATCH_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub physics: PhysicalParams,
    pub rows: usize,
    pub cols: usize,
    /// Scale boundaries in pixels; a leading 0 is added when missing.
    pub sigma_boundaries: Vec<f64>,
    /// Stretch the boundaries so the last one equals `sqrt(2DT)` in pixels.
    pub scale_to_sigma_max: bool,
    /// 1-based regularized bins; `None` for all.
    pub support: Option<Vec<usize>>,
    pub quad_order: usize,
    pub tau_steps: usize,
    pub eps: f64,
    pub sources: SourcePlan,
    pub sensor: SensorConfig,
    pub solver: SolverConfig,
    /// When set, `lambda` is this fraction of the image's zero-solution
    /// threshold instead of the absolute `solver.lambda`.
    pub lambda_rel: Option<f64>,
    pub weights_file: Option<PathBuf>,
    pub mask_file: Option<PathBuf>,
    pub detect: DetectConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let physics = PhysicalParams {
            kappa_a: 1e-6,
            kappa_d: 0.0,
            diffusion: 1e-10,
            horizon: 3600.0,
            pixel_pitch: 7e-5,
            psf_sigma: 0.0,
        };
        RunConfig {
            physics,
            rows: 128,
            cols: 128,
            sigma_boundaries: vec![2.0, 15.0, 20.0, 30.0, 40.0, 50.0, 70.0],
            scale_to_sigma_max: true,
            support: None,
            quad_order: DEFAULT_QUAD_ORDER,
            tau_steps: 2048,
            eps: 1e-5,
            sources: SourcePlan::Random {
                count: 20,
                rate: 1.0,
                spacing: 12.0,
                margin: 8,
                t_start: 0.0,
                t_stop: physics.horizon,
            },
            sensor: SensorConfig { noise_sigma: 0.01, bits: 12 },
            solver: SolverConfig::default(),
            lambda_rel: Some(DEFAULT_LAMBDA_REL),
            weights_file: None,
            mask_file: None,
            detect: DetectConfig::default(),
            seed: 0,
        }
    }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| Error::Config {
                line,
                message: format!("{key}: cannot parse {v:?}: {e}"),
            }),
        }
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<T>().map_err(|e| Error::Config {
                        line,
                        message: format!("{key}: cannot parse {s:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got {content:?}"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config { line, message: format!("unknown key {key:?}") });
            }
            if map.insert(key.to_string(), (line, value.trim().to_string())).is_some() {
                return Err(Error::Config { line, message: format!("duplicate key {key:?}") });
            }
        }
        let mut e = Entries { map };
        let mut c = RunConfig::default();
        let p = &mut c.physics;
        e.set("kappa_a", &mut p.kappa_a)?;
        e.set("kappa_d", &mut p.kappa_d)?;
        e.set("diffusion", &mut p.diffusion)?;
        e.set("horizon", &mut p.horizon)?;
        e.set("pixel_pitch", &mut p.pixel_pitch)?;
        e.set("psf_sigma", &mut p.psf_sigma)?;
        e.set("rows", &mut c.rows)?;
        e.set("cols", &mut c.cols)?;
        if let Some(b) = e.list("sigma_boundaries")? {
            c.sigma_boundaries = b;
        }
        e.set("scale_to_sigma_max", &mut c.scale_to_sigma_max)?;
        if let Some((line, v)) = e.map.remove("support") {
            c.support = if v == "all" {
                None
            } else {
                let idx = v
                    .split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Config {
                        line,
                        message: format!("support must be `all` or 1-based bin indices, got {v:?}"),
                    })?;
                Some(idx)
            };
        }
        e.set("quad_order", &mut c.quad_order)?;
        e.set("tau_steps", &mut c.tau_steps)?;
        e.set("eps", &mut c.eps)?;

        let file: Option<PathBuf> = e.take("sources_file")?;
        let count = e.take("n_sources")?;
        let rate = e.take("source_rate")?;
        let spacing = e.take("source_spacing")?;
        let margin = e.take("source_margin")?;
        let t_start = e.take("release_start")?;
        let t_stop = e.take("release_stop")?;
        c.sources = match file {
            Some(f) => {
                if count.is_some() || rate.is_some() || spacing.is_some() || margin.is_some() {
                    return Err(Error::Config {
                        line: 0,
                        message: "sources_file excludes the random source keys".into(),
                    });
                }
                SourcePlan::File(base_dir.join(f))
            }
            None => SourcePlan::Random {
                count: count.unwrap_or(20),
                rate: rate.unwrap_or(1.0),
                spacing: spacing.unwrap_or(12.0),
                margin: margin.unwrap_or(8),
                t_start: t_start.unwrap_or(0.0),
                t_stop: t_stop.unwrap_or(c.physics.horizon),
            },
        };

        e.set("noise_sigma", &mut c.sensor.noise_sigma)?;
        e.set("bits", &mut c.sensor.bits)?;
        let s = &mut c.solver;
        let lambda: Option<f64> = e.take("lambda")?;
        let lambda_rel: Option<f64> = e.take("lambda_rel")?;
        match (lambda, lambda_rel) {
            (Some(_), Some(_)) => {
                return Err(Error::Config { line: 0, message: "lambda and lambda_rel are exclusive".into() })
            }
            (Some(l), None) => {
                s.lambda = l;
                c.lambda_rel = None;
            }
            (None, r) => c.lambda_rel = r.or(c.lambda_rel),
        }
        e.set("max_iters", &mut s.max_iters)?;
        e.set("rel_tol", &mut s.rel_tol)?;
        e.set("step_safety", &mut s.step_safety)?;
        e.set("restart", &mut s.restart)?;
        e.set("power_iters", &mut s.power_iters)?;
        c.weights_file = e.take::<PathBuf>("weights_file")?.map(|f| base_dir.join(f));
        c.mask_file = e.take::<PathBuf>("mask_file")?.map(|f| base_dir.join(f));
        e.set("rel_threshold", &mut c.detect.rel_threshold)?;
        e.set("min_separation", &mut c.detect.min_separation)?;
        e.set("match_radius", &mut c.detect.match_radius)?;
        e.set("seed", &mut c.seed)?;
        debug_assert!(e.map.is_empty());
        c.validate()?;
        Ok(c)
    }

    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid("rows and cols must be positive"));
        }
        self.sensor.validate()?;
        self.solver.validate()?;
        if let Some(r) = self.lambda_rel {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::invalid(format!("lambda_rel must be finite and >= 0, got {r}")));
            }
        }
        let grid = self.grid()?;
        let smax = self.physics.sigma_max_pixels();
        if grid.sigma_max() > smax * (1.0 + 1e-9) {
            return Err(Error::GridExceedsSigmaMax { boundary: grid.sigma_max(), sigma_max: smax });
        }
        if let SourcePlan::Random { t_start, t_stop, rate, spacing, .. } = self.sources {
            if !(0.0 <= t_start && t_start <= t_stop && t_stop <= self.physics.horizon) {
                return Err(Error::invalid("release window must satisfy 0 <= start <= stop <= horizon"));
            }
            if !(rate >= 0.0) || !(spacing >= 0.0) {
                return Err(Error::invalid("source_rate and source_spacing must be >= 0"));
            }
        }
        Ok(())
    }

    /// The scale grid, with a leading 0 and optionally stretched to
    /// `sqrt(2DT)` in pixels.
    pub fn grid(&self) -> Result<SigmaGrid> {
        let g = SigmaGrid::with_leading_zero(self.sigma_boundaries.clone(), self.support.as_deref())?;
        if self.scale_to_sigma_max {
            g.scaled_to(self.physics.sigma_max_pixels())
        } else {
            Ok(g)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_and_comments() {
        let text = "# assay\nkappa_d = 1e-3  # per second\nrows = 64\ncols=32\nsupport = 2, 3\n\
                    restart = false\nsigma_boundaries = 0, 1, 2, 4\nscale_to_sigma_max = false\n";
        let c = RunConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(c.physics.kappa_d, 1e-3);
        assert_eq!((c.rows, c.cols), (64, 32));
        assert_eq!(c.support, Some(vec![2, 3]));
        assert!(!c.solver.restart);
        assert_eq!(c.grid().unwrap().boundaries(), &[0.0, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn unknown_and_duplicate_keys_fail() {
        let err = RunConfig::parse("rows = 3\nlamda = 2\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = RunConfig::parse("rows = 3\nrows = 4\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        assert!(RunConfig::parse("rows 3\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("rows = three\n", Path::new(".")).is_err());
    }

    #[test]
    fn absolute_lambda_disables_relative() {
        let c = RunConfig::parse("lambda = 4000\n", Path::new(".")).unwrap();
        assert_eq!((c.solver.lambda, c.lambda_rel), (4000.0, None));
        let c = RunConfig::parse("lambda_rel = 0.05\n", Path::new(".")).unwrap();
        assert_eq!(c.lambda_rel, Some(0.05));
        assert_eq!(RunConfig::default().lambda_rel, Some(DEFAULT_LAMBDA_REL));
        assert!(RunConfig::parse("lambda = 1\nlambda_rel = 0.1\n", Path::new(".")).is_err());
    }

    #[test]
    fn default_grid_reaches_sigma_max() {
        let c = RunConfig::default();
        let g = c.grid().unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g.sigma_max(), c.physics.sigma_max_pixels());
    }

    #[test]
    fn grid_beyond_sigma_max_is_rejected() {
        let text = "sigma_boundaries = 0, 100\nscale_to_sigma_max = false\n";
        assert!(matches!(
            RunConfig::parse(text, Path::new(".")),
            Err(Error::GridExceedsSigmaMax { .. })
        ));
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let c = RunConfig::parse("sources_file = truth.csv\n", Path::new("/data/run")).unwrap();
        assert_eq!(c.sources, SourcePlan::File(PathBuf::from("/data/run/truth.csv")));
    }
}
