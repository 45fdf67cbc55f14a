//! Run configuration: defaults, then an optional TOML file, then
//! environment variables, then command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::forms::{NullityConfig, NullityMode};
use crate::immersions::{DecomposeConfig, FdSteps};
use crate::splitting::{FalsifyConfig, LemmaConfig};

/// Names the TOML configuration file when `--config` is absent.
pub const CONFIG_ENV: &str = "WARPSPLIT_CONFIG";
/// Prefix of the per-setting variables (`WARPSPLIT_SEED`, `WARPSPLIT_TOL`, …).
pub const ENV_PREFIX: &str = "WARPSPLIT_";

/// Tolerance ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative rank threshold for exactly given forms.
    pub rank_tol: f64,
    /// Relative rank threshold for forms built from finite differences.
    pub fd_rank_tol: f64,
    /// Mixed second fundamental form entries below this count as zero.
    pub adapt_tol: f64,
    /// Metric comparisons and the mixed span norm of the lemma.
    pub iso_tol: f64,
    /// Curvature formula against the finite-difference tensor.
    pub fd_tol: f64,
    /// `|⟨x, x⟩ − 1/c|` for points of a quadric.
    pub quadric_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank_tol: 1e-9, fd_rank_tol: 1e-5, adapt_tol: 1e-5, iso_tol: 1e-6, fd_tol: 1e-4, quadric_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct RunConfig {
    pub tol: Tolerances,
    pub seed: u64,
    pub fd: FdSteps,
    /// Grid points per angle on `Gr(1, 2)`.
    pub grid_res: usize,
    /// Grid points per angle on `Gr(1, 3)` and `Gr(2, 3)`.
    pub grid_res_2d: usize,
    /// Random starts of the s-nullity search.
    pub starts: usize,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { tol: Tolerances::default(), seed: 0, fd: FdSteps::default(), grid_res: 720, grid_res_2d: 72, starts: 24, jobs: 0 }
    }
}

/// Settings given explicitly, by flag or environment variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub tol: Option<f64>,
    pub rank_tol: Option<f64>,
    pub seed: Option<u64>,
    pub h: Option<f64>,
    pub grid: Option<usize>,
    pub starts: Option<usize>,
    pub jobs: Option<usize>,
}

impl ConfigOverrides {
    /// Reads `WARPSPLIT_TOL`, `…_RANK_TOL`, `…_SEED`, `…_H`, `…_GRID`,
    /// `…_STARTS` and `…_JOBS` through `lookup`.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, HarnessError> {
        fn get<T: std::str::FromStr>(lookup: &impl Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>, HarnessError> {
            let name = format!("{ENV_PREFIX}{key}");
            match lookup(&name) {
                None => Ok(None),
                Some(raw) => raw
                    .trim()
                    .parse()
                    .map(Some)
                    .map_err(|_| HarnessError::Config(format!("{name}={raw:?} is not a valid value"))),
            }
        }
        Ok(Self {
            tol: get(&lookup, "TOL")?,
            rank_tol: get(&lookup, "RANK_TOL")?,
            seed: get(&lookup, "SEED")?,
            h: get(&lookup, "H")?,
            grid: get(&lookup, "GRID")?,
            starts: get(&lookup, "STARTS")?,
            jobs: get(&lookup, "JOBS")?,
        })
    }

    fn apply(&self, c: &mut RunConfig) {
        if let Some(v) = self.tol {
            c.tol.adapt_tol = v;
        }
        if let Some(v) = self.rank_tol {
            c.tol.rank_tol = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.h {
            c.fd.first = v;
        }
        if let Some(v) = self.grid {
            c.grid_res = v;
        }
        if let Some(v) = self.starts {
            c.starts = v;
        }
        if let Some(v) = self.jobs {
            c.jobs = v;
        }
    }
}

impl RunConfig {
    pub fn from_toml(origin: &str, text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            HarnessError::Parse { path: origin.to_string(), line, column, message: e.message().to_string() }
        })
    }

    /// Layers the file (`file`, else the one named by `WARPSPLIT_CONFIG`),
    /// the environment and `flags` over the defaults, then validates.
    pub fn resolve(
        file: Option<&Path>,
        lookup: impl Fn(&str) -> Option<String>,
        flags: &ConfigOverrides,
    ) -> Result<Self, HarnessError> {
        let path = file.map(|p| p.to_string_lossy().into_owned()).or_else(|| lookup(CONFIG_ENV));
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Io { path: path.clone(), message: e.to_string() })?;
                Self::from_toml(&path, &text)?
            }
            None => Self::default(),
        };
        ConfigOverrides::from_env(&lookup)?.apply(&mut config);
        flags.apply(&mut config);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let t = &self.tol;
        let named = [
            ("rankTol", t.rank_tol),
            ("fdRankTol", t.fd_rank_tol),
            ("adaptTol", t.adapt_tol),
            ("isoTol", t.iso_tol),
            ("fdTol", t.fd_tol),
            ("quadricTol", t.quadric_tol),
            ("fd.first", self.fd.first),
            ("fd.second", self.fd.second),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(HarnessError::Config(format!("{name} must be positive, got {v}")));
        }
        if self.grid_res == 0 || self.grid_res_2d == 0 {
            return Err(HarnessError::Config("grid resolutions must be positive".into()));
        }
        if self.starts == 0 {
            return Err(HarnessError::Config("starts must be positive".into()));
        }
        Ok(())
    }

    pub fn nullity(&self) -> NullityConfig {
        NullityConfig {
            rank_tol: self.tol.rank_tol,
            mode: NullityMode::Auto,
            grid_res: self.grid_res,
            grid_res_2d: self.grid_res_2d,
            starts: self.starts,
            seed: self.seed,
        }
    }

    /// Nullity settings for finite-difference forms.
    pub fn fd_nullity(&self) -> NullityConfig {
        NullityConfig { rank_tol: self.tol.fd_rank_tol, ..self.nullity() }
    }

    pub fn lemma(&self) -> LemmaConfig {
        LemmaConfig { nullity: self.nullity(), s_tol: self.tol.iso_tol, seed: self.seed, ..LemmaConfig::default() }
    }

    pub fn falsify(&self) -> FalsifyConfig {
        let base = FalsifyConfig::default();
        FalsifyConfig {
            gate: NullityConfig { rank_tol: self.tol.rank_tol, ..base.gate },
            recheck: NullityConfig { rank_tol: self.tol.rank_tol, grid_res: self.grid_res, grid_res_2d: self.grid_res_2d, ..base.recheck },
            s_tol: self.tol.iso_tol,
            ..base
        }
    }

    pub fn decompose(&self) -> DecomposeConfig {
        DecomposeConfig { nullity: self.fd_nullity(), adapt_tol: self.tol.adapt_tol, seed: self.seed, ..DecomposeConfig::default() }
    }

    /// Runs `f` on a pool of [`RunConfig::jobs`] threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
