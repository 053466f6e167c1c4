//! Run configuration: one TOML file with flat dotted keys, overridden by flags.

use std::path::{Path, PathBuf};

use buqo::engine::{BuqoSettings, Mode, OuterSettings, DEFAULT_ALPHA, DEFAULT_ETA};
use buqo::map_solver::MapSettings;
use buqo::primal_dual::PdSettings;
use buqo::sim::{PatternKind, PhantomKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Simulate,
    Map,
    Test,
    Grid,
    Report,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub truth: Option<PathBuf>,
    pub pattern: Option<PathBuf>,
    pub measurements: Option<PathBuf>,
    pub structure: Option<PathBuf>,
    /// Precomputed MAP estimate; `test` skips the MAP solve when set.
    pub map: Option<PathBuf>,
    pub outcome: Option<PathBuf>,
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phantom: PhantomKind,
    pub rows: usize,
    pub cols: usize,
    pub pattern: PatternKind,
    /// Ratio and variance used by `simulate`.
    pub sampling_ratio: f64,
    pub sigma2: f64,
    /// Overrides the two-standard-deviation bound derived from `sigma2`.
    pub epsilon: Option<f64>,
    pub sampling_ratios: Vec<f64>,
    pub noise_variances: Vec<f64>,
    /// Built-in names (`bright`, `faint`, `empty`, `background`) or paths to structure files.
    pub structures: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phantom: PhantomKind::CompactSources,
            rows: 64,
            cols: 64,
            pattern: PatternKind::GaussianRandom,
            sampling_ratio: 0.5,
            sigma2: 0.01,
            epsilon: None,
            sampling_ratios: vec![0.5, 0.75, 1.0],
            noise_variances: vec![0.01, 0.02, 0.03],
            structures: vec!["bright".into(), "empty".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub map_tol: f64,
    pub map_max_iters: usize,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub outer_tol: f64,
    pub outer_max_iters: usize,
    pub fb_gamma: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = BuqoSettings::default();
        Self {
            map_tol: s.map.tol,
            map_max_iters: s.map.max_iters,
            inner_tol: s.inner.tol,
            inner_max_iters: s.inner.max_iters,
            outer_tol: s.outer.tol,
            outer_max_iters: s.outer.max_iters,
            fb_gamma: s.fb_gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub seed: u64,
    pub alpha: f64,
    pub eta: f64,
    pub mode: Mode,
    pub out: PathBuf,
    pub input: InputPaths,
    pub experiment: ExperimentConfig,
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 1,
            alpha: DEFAULT_ALPHA,
            eta: DEFAULT_ETA,
            mode: Mode::Pocs,
            out: PathBuf::from("buqo-out"),
            input: InputPaths::default(),
            experiment: ExperimentConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    /// `key=value` pairs with dotted keys, applied before the named flags.
    pub set: Vec<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flat `a.b = value` lines, one per leaf.
    pub fn to_flat_toml(&self) -> String {
        let value = toml::Table::try_from(self).expect("config serializes to a table");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    /// Reads `path` (if any), applies overrides and resolves relative input
    /// paths against the directory of the config file.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| CliError::Config(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        if let Some(base) = path.and_then(Path::parent) {
            resolve_inputs(&mut table, base);
        }
        for kv in &overrides.set {
            let (key, raw) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("`--set {kv}` is not key=value")))?;
            set_dotted(&mut table, key.trim(), parse_value(raw.trim()))?;
        }
        let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        if let Some(v) = overrides.seed {
            cfg.seed = v;
        }
        if let Some(v) = overrides.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = overrides.eta {
            cfg.eta = v;
        }
        if let Some(v) = overrides.mode {
            cfg.mode = v;
        }
        if let Some(v) = &overrides.out {
            cfg.out = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta = {} must be a nonnegative number", self.eta));
        }
        if !(self.solver.fb_gamma > 0.0 && self.solver.fb_gamma < 1.0) {
            return bad(format!("solver.fb_gamma = {} must lie in (0, 1)", self.solver.fb_gamma));
        }
        let e = &self.experiment;
        if !(e.sampling_ratio > 0.0 && e.sampling_ratio <= 1.0) {
            return bad(format!("experiment.sampling_ratio = {} must lie in (0, 1]", e.sampling_ratio));
        }
        if !(e.sigma2 > 0.0) {
            return bad(format!("experiment.sigma2 = {} must be positive", e.sigma2));
        }
        for p in self.input.all() {
            if !p.exists() {
                return bad(format!("input file {} does not exist", p.display()));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> BuqoSettings {
        let s = &self.solver;
        BuqoSettings {
            alpha: self.alpha,
            eta: self.eta,
            mode: self.mode,
            fb_gamma: s.fb_gamma,
            map: MapSettings {
                tol: s.map_tol,
                max_iters: s.map_max_iters,
                ..MapSettings::default()
            },
            inner: PdSettings {
                tol: s.inner_tol,
                max_iters: s.inner_max_iters,
                ..PdSettings::default()
            },
            outer: OuterSettings {
                tol: s.outer_tol,
                max_iters: s.outer_max_iters,
            },
        }
    }
}

impl InputPaths {
    fn all(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.truth,
            &self.pattern,
            &self.measurements,
            &self.structure,
            &self.map,
            &self.outcome,
            &self.grid,
        ]
        .into_iter()
        .flatten()
    }
}

/// Relative `input.*` paths in a config file are relative to that file.
fn resolve_inputs(table: &mut toml::Table, base: &Path) {
    let Some(toml::Value::Table(input)) = table.get_mut("input") else { return };
    for (_, v) in input.iter_mut() {
        if let toml::Value::String(p) = v {
            if Path::new(p.as_str()).is_relative() {
                let joined = base.join(p.as_str()).to_string_lossy().into_owned();
                *p = joined;
            }
        }
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => out.push(format!("{key} = {other}")),
        }
    }
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Config(format!("empty key in `{key}`")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
