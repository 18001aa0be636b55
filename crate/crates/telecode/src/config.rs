//! Sweep configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use telecode_core::estimators::Protocol;
use telecode_core::{ProtocolParams, Replica};

use crate::error::{CliError, Result};

/// Either an explicit list or `points` evenly spaced values in `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// Exact spin sums on the axes, boundary MPS elsewhere.
    #[default]
    Auto,
    Mps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub t_over_pi: Grid,
    pub theta_over_pi: Grid,
    pub d: Vec<usize>,
    pub n_replica: Vec<Replica>,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
    pub samples: u64,
    pub chi_max: usize,
    pub svd_cutoff: f64,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub backend: BackendChoice,
    pub output: OutputConfig,
}

fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::Active]
}

fn default_workers() -> usize {
    1
}

/// Worker count after the `TELECODE_WORKERS` override.
pub fn effective_workers(configured: usize) -> Result<usize> {
    match std::env::var("TELECODE_WORKERS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::config("TELECODE_WORKERS", format!("expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(configured),
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| text[..s.start].lines().count().max(1)).map_or("config".into(), |l| format!("line {l}"));
            CliError::config(field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.t_over_pi.values()
    }

    pub fn theta_values(&self) -> Vec<f64> {
        self.theta_over_pi.values()
    }

    /// Point parameters, with the per-task seed left at the global seed.
    pub fn params(&self, t_over_pi: f64, theta_over_pi: f64, d: usize, n: Replica) -> ProtocolParams {
        ProtocolParams {
            t_over_pi,
            theta_over_pi,
            phi_over_pi: 0.0,
            d,
            n_replica: n,
            seed: self.seed,
            chi_max: self.chi_max,
            svd_cutoff: self.svd_cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ts = self.t_values();
        let thetas = self.theta_values();
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(CliError::config(name, "grid is empty"))
            } else {
                Ok(())
            }
        };
        nonempty("t_over_pi", ts.len())?;
        nonempty("theta_over_pi", thetas.len())?;
        nonempty("d", self.d.len())?;
        nonempty("n_replica", self.n_replica.len())?;
        nonempty("protocols", self.protocols.len())?;
        if let Grid::Range { start, stop, .. } = self.t_over_pi {
            if !(stop >= start) {
                return Err(CliError::config("t_over_pi", "range stop must not be below start"));
            }
        }
        for (i, &t) in ts.iter().enumerate() {
            if !(0.0..=0.25).contains(&t) {
                return Err(CliError::config(format!("t_over_pi[{i}]"), format!("{t} is outside [0, 0.25]")));
            }
        }
        for (i, &th) in thetas.iter().enumerate() {
            if !(0.0..=0.5).contains(&th) {
                return Err(CliError::config(format!("theta_over_pi[{i}]"), format!("{th} is outside [0, 0.5]")));
            }
        }
        for (i, &d) in self.d.iter().enumerate() {
            if d < 2 {
                return Err(CliError::config(format!("d[{i}]"), format!("code distance {d} is below 2")));
            }
        }
        let mut seen = self.d.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.d.len() {
            return Err(CliError::config("d", "duplicate code distance"));
        }
        if self.samples == 0 {
            return Err(CliError::config("samples", "must be positive"));
        }
        if self.chi_max < 2 {
            return Err(CliError::config("chi_max", format!("{} is below 2", self.chi_max)));
        }
        if !(self.svd_cutoff > 0.0 && self.svd_cutoff < 1.0) {
            return Err(CliError::config("svd_cutoff", format!("{} is outside (0, 1)", self.svd_cutoff)));
        }
        if self.workers == 0 {
            return Err(CliError::config("workers", "must be positive"));
        }
        if self.protocols.contains(&Protocol::Passive) {
            if thetas.iter().any(|&th| th != 0.0) {
                return Err(CliError::config("protocols", "the passive protocol requires theta_over_pi = [0]"));
            }
            if self.n_replica.iter().any(|&n| n != Replica::One) {
                return Err(CliError::config("protocols", "the passive protocol requires n_replica = [1]"));
            }
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(CliError::config("output.dir", "must not be empty"));
        }
        Ok(())
    }
}
