//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qsdyn::model::{GeneralModel, ModelError};
use qsdyn::sweep::GridRange;
use qsdyn::{IntegratorConfig, ModelParams, SimplexState, SweepSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Every key accepted in a config file; each one is also a `--key` flag.
pub const KEYS: &[&str] = &[
    "f0",
    "f1",
    "f2",
    "Q",
    "Qp",
    "tmax",
    "step",
    "f0Q_min",
    "f0Q_max",
    "f1Qp_min",
    "f1Qp_max",
    "abs_tol",
    "rel_tol",
    "h_init",
    "h_max",
    "drift_tol",
    "classify_tol",
    "transient_tol",
    "interval",
    "x0",
    "x1",
    "x2",
    "f2s",
    "branching",
    "kernel",
    "x2s",
    "out",
    "emit_plots",
    "threads",
];

/// Raw settings: later insertions win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
            s.set(k.trim(), v.trim()).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|_| CliError::Config(format!("`{key}` expects a number, got {v:?}"))))
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| CliError::Config(format!("`{key}` expects comma-separated numbers, got {v:?}")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn bool(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(CliError::Config(format!("`{key}` expects true or false, got {v:?}"))),
        }
    }
}

/// Fully validated settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    pub sweep: SweepSpec,
    /// Start of `simulate` runs: `x0, x1` then every `x2` component.
    pub initial: Vec<f64>,
    pub general: Option<GeneralModel>,
    pub interval: f64,
    pub out: PathBuf,
    pub emit_plots: bool,
    pub threads: Option<usize>,
}

pub const DEFAULT_SIMULATE_TMAX: f64 = 100.0;

impl RunConfig {
    /// `default_tmax` applies when the settings leave `tmax` unset.
    pub fn from_settings(s: &Settings, default_tmax: f64) -> Result<Self, CliError> {
        let (q, qp, f2) = (s.f64_or("Q", 0.7)?, s.f64_or("Qp", 0.3)?, s.f64_or("f2", 0.42)?);
        let params = ModelParams::new(s.f64_or("f0", 0.9)?, s.f64_or("f1", 0.7)?, f2, q, qp)?;
        let defaults = IntegratorConfig::default();
        let integrator = IntegratorConfig {
            abs_tol: s.f64_or("abs_tol", defaults.abs_tol)?,
            rel_tol: s.f64_or("rel_tol", defaults.rel_tol)?,
            h_init: s.f64_or("h_init", defaults.h_init)?,
            h_max: s.f64_or("h_max", defaults.h_max)?,
            t_max: s.f64_or("tmax", default_tmax)?,
            drift_tol: s.f64_or("drift_tol", defaults.drift_tol)?,
        };
        integrator.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let general = match s.list("f2s")? {
            None => {
                for k in ["branching", "kernel", "x2s"] {
                    if s.get(k).is_some() {
                        return Err(CliError::Config(format!("`{k}` requires `f2s`")));
                    }
                }
                None
            }
            Some(f2s) => Some(general_model(s, &params, f2s)?),
        };

        let (x0, x1, x2) = (s.f64_or("x0", 1.0)?, s.f64_or("x1", 0.0)?, s.f64_or("x2", 0.0)?);
        let initial = match &general {
            None => SimplexState::new(x0, x1, x2)?.to_array().to_vec(),
            Some(g) => {
                let n = g.subclones();
                let x2s = match s.list("x2s")? {
                    Some(v) => v,
                    None => g.branching().iter().map(|b| b * x2).collect(),
                };
                if x2s.len() != n {
                    return Err(CliError::Config(format!("`x2s` has {} entries, expected {n}", x2s.len())));
                }
                let mut v = vec![x0, x1];
                v.extend(x2s);
                let sum: f64 = v.iter().sum();
                if (sum - 1.0).abs() > qsdyn::model::SIMPLEX_TOL || v.iter().any(|x| *x < 0.0) {
                    return Err(CliError::Config(format!("initial state {v:?} is not on the simplex (sum {sum})")));
                }
                v
            }
        };

        let step = s.f64_or("step", 0.01)?;
        let f0q = GridRange::new(s.f64_or("f0Q_min", step)?, s.f64_or("f0Q_max", 1.0)?, step);
        let f1qp = GridRange::new(s.f64_or("f1Qp_min", step)?, s.f64_or("f1Qp_max", 1.0)?, step);
        let mut sweep = SweepSpec::standard(step);
        sweep.q = q;
        sweep.qp = qp;
        sweep.f2 = f2;
        let mut sweep = sweep.with_product_ranges(f0q, f1qp);
        sweep.classify_tol = s.f64_or("classify_tol", sweep.classify_tol)?;
        sweep.transient_tol = s.f64_or("transient_tol", sweep.transient_tol)?;
        sweep.integrator = IntegratorConfig { t_max: s.f64_or("tmax", defaults.t_max)?, ..integrator };
        sweep.initial_state = SimplexState::new(x0, x1, 1.0 - x0 - x1)
            .map_err(|e| CliError::Config(format!("initial state: {e}")))?;
        sweep.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let interval = s.f64_or("interval", 0.1)?;
        if !(interval.is_finite() && interval > 0.0) {
            return Err(CliError::Config(format!("`interval` must be positive, got {interval}")));
        }
        let threads = match s.f64("threads")? {
            None => None,
            Some(t) if t >= 1.0 && t.fract() == 0.0 => Some(t as usize),
            Some(t) => return Err(CliError::Config(format!("`threads` must be a positive integer, got {t}"))),
        };
        Ok(RunConfig {
            params,
            integrator,
            sweep,
            initial,
            general,
            interval,
            out: PathBuf::from(s.get("out").unwrap_or("out")),
            emit_plots: s.bool("emit_plots")?,
            threads,
        })
    }
}

fn general_model(s: &Settings, p: &ModelParams, f2s: Vec<f64>) -> Result<GeneralModel, CliError> {
    let n = f2s.len();
    let branching = s.list("branching")?.unwrap_or_else(|| vec![1.0 / n as f64; n]);
    let kernel: Vec<Vec<f64>> = match s.get("kernel") {
        None => (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
        Some(text) => text
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| CliError::Config(format!("`kernel` expects rows like `a, b; c, d`, got {text:?}")))
                    })
                    .collect::<Result<Vec<f64>, CliError>>()
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(GeneralModel::new(p.f0(), p.f1(), p.q(), p.qp(), f2s, branching, &kernel)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let s = Settings::parse("# header\nf0 = 0.5   # trailing\n\n  Qp=0.25\n").unwrap();
        assert_eq!(s.get("f0"), Some("0.5"));
        assert_eq!(s.get("Qp"), Some("0.25"));
    }

    #[test]
    fn rejects_unknown_and_malformed_lines() {
        assert!(matches!(Settings::parse("bogus = 1"), Err(CliError::Config(_))));
        assert!(matches!(Settings::parse("f0 0.5"), Err(CliError::Config(_))));
        let s = Settings::parse("f0 = abc").unwrap();
        assert!(RunConfig::from_settings(&s, 1.0).is_err());
    }

    #[test]
    fn defaults_build() {
        let c = RunConfig::from_settings(&Settings::default(), DEFAULT_SIMULATE_TMAX).unwrap();
        assert_eq!(c.params.f0q(), 0.9 * 0.7);
        assert_eq!(c.integrator.t_max, 100.0);
        assert_eq!(c.sweep.integrator.t_max, 1e5);
        assert_eq!(c.initial, vec![1.0, 0.0, 0.0]);
        assert_eq!(c.sweep.f0_range.len(), 100);
    }

    #[test]
    fn general_model_from_lists() {
        let s = Settings::parse("f2s = 0.4, 0.5\nbranching = 0.25, 0.75\nkernel = 0.9, 0.2; 0.1, 0.8\nx0 = 0.5\nx2 = 0.5").unwrap();
        let c = RunConfig::from_settings(&s, 1.0).unwrap();
        let g = c.general.unwrap();
        assert_eq!(g.subclones(), 2);
        assert_eq!(g.kernel(1, 0), 0.1);
        assert_eq!(c.initial, vec![0.5, 0.0, 0.125, 0.375]);
        let s = Settings::parse("kernel = 1").unwrap();
        assert!(RunConfig::from_settings(&s, 1.0).is_err());
    }
}
