//! Flat `key = value` run configuration: parsing, validation, and the
//! semantic hash recorded in run summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scenario::{build_scenario, Scenario, ScenarioError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Picard,
    Weak,
    Both,
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrator::Picard => write!(f, "picard"),
            Integrator::Weak => write!(f, "weak"),
            Integrator::Both => write!(f, "both"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("config line {line}: duplicate key {key}")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `scenario`")]
    MissingScenario,
    #[error("bad value for {key}: {reason}")]
    BadValue { key: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A parsed run configuration: the scenario plus harness settings.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub integrator: Integrator,
    pub out_dir: PathBuf,
    pub lin_tol: f64,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Picard window in units of dt (1 = per-step iteration).
    pub window_steps: usize,
    pub c_env: f64,
}

/// Harness keys are consumed here; everything else is forwarded to the
/// scenario builder as an override and validated there.
pub fn parse_config_text(text: &str) -> Result<RunConfig, ConfigError> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::Malformed { line, text: raw.to_string() });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed { line, text: raw.to_string() });
        }
        if pairs.insert(key.clone(), value).is_some() {
            return Err(ConfigError::Duplicate { line, key });
        }
    }

    let name = pairs.remove("scenario").ok_or(ConfigError::MissingScenario)?;
    let integrator = match pairs.remove("integrator").as_deref() {
        None | Some("picard") => Integrator::Picard,
        Some("weak") => Integrator::Weak,
        Some("both") => Integrator::Both,
        Some(other) => {
            return Err(ConfigError::BadValue {
                key: "integrator".into(),
                reason: format!("unknown integrator {other:?} (picard | weak | both)"),
            })
        }
    };
    let out_dir = PathBuf::from(pairs.remove("out_dir").unwrap_or_else(|| "runs/out".to_string()));
    let parse_pos = |key: &str, default: f64, pairs: &mut BTreeMap<String, String>| {
        match pairs.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| *x > 0.0)
                .ok_or_else(|| ConfigError::BadValue {
                    key: key.into(),
                    reason: format!("{v:?} is not a positive number"),
                }),
        }
    };
    let lin_tol = parse_pos("lin_tol", 1e-10, &mut pairs)?;
    let picard_tol = parse_pos("picard_tol", 1e-10, &mut pairs)?;
    let max_picard = match pairs.remove("max_picard") {
        None => 50,
        Some(v) => v.parse::<usize>().ok().filter(|&x| x >= 1).ok_or_else(|| {
            ConfigError::BadValue { key: "max_picard".into(), reason: format!("{v:?}") }
        })?,
    };
    let window_steps = match pairs.remove("window_steps") {
        None => 1,
        Some(v) => v.parse::<usize>().ok().filter(|&x| x >= 1).ok_or_else(|| {
            ConfigError::BadValue { key: "window_steps".into(), reason: format!("{v:?}") }
        })?,
    };
    let c_env = match pairs.remove("c_env") {
        None => 1.0,
        Some(v) => v.parse::<f64>().ok().filter(|x| *x >= 0.0).ok_or_else(|| {
            ConfigError::BadValue { key: "c_env".into(), reason: format!("{v:?}") }
        })?,
    };

    // remaining keys are scenario overrides
    let scenario = build_scenario(&name, &pairs)?;
    Ok(RunConfig {
        scenario,
        integrator,
        out_dir,
        lin_tol,
        picard_tol,
        max_picard,
        window_steps,
        c_env,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config_text(&text)
}

impl RunConfig {
    /// Canonical serialization of every semantically meaningful field
    /// (the output directory is excluded: it does not change the math).
    fn canonical(&self) -> String {
        let sc = &self.scenario;
        let mut s = String::new();
        let f = |v: f64| format!("{v:.17e}");
        s.push_str(&format!("scenario={}\n", sc.name));
        s.push_str(&format!("dim={}\n", sc.dim));
        s.push_str(&format!("n={:?}\n", sc.n));
        s.push_str(&format!("l={}\n", sc.l.iter().map(|&v| f(v)).collect::<Vec<_>>().join(",")));
        s.push_str(&format!("boundary={:?}\n", sc.boundary));
        s.push_str(&format!("amplitude={}\n", f(sc.amplitude)));
        s.push_str(&format!("wavenumbers={:?}\n", sc.wavenumbers));
        s.push_str(&format!("mu={}\n", f(sc.mu)));
        s.push_str(&format!("lambda={}\n", f(sc.lambda)));
        s.push_str(&format!("gamma={}\n", f(sc.gamma)));
        s.push_str(&format!("t_end={}\n", f(sc.t_end)));
        s.push_str(&format!("dt={}\n", f(sc.dt)));
        s.push_str(&format!("snapshot_every={}\n", sc.snapshot_every));
        s.push_str(&format!("integrator={}\n", self.integrator));
        s.push_str(&format!("lin_tol={}\n", f(self.lin_tol)));
        s.push_str(&format!("picard_tol={}\n", f(self.picard_tol)));
        s.push_str(&format!("max_picard={}\n", self.max_picard));
        s.push_str(&format!("window_steps={}\n", self.window_steps));
        s.push_str(&format!("c_env={}\n", f(self.c_env)));
        s
    }

    /// Hex SHA-256 of the canonical form; changes iff a semantic field
    /// changes.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
# demo configuration
scenario = small_vortex
amplitude = 1e-3   # overrides the default
integrator = both
out_dir = runs/demo
";

    #[test]
    fn parses_comments_defaults_and_overrides() {
        let cfg = parse_config_text(BASE).unwrap();
        assert_eq!(cfg.scenario.name, "small_vortex");
        assert_eq!(cfg.scenario.amplitude, 1e-3);
        assert_eq!(cfg.integrator, Integrator::Both);
        assert_eq!(cfg.lin_tol, 1e-10);
        assert_eq!(cfg.window_steps, 1);
    }

    #[test]
    fn missing_scenario_is_an_error() {
        assert!(matches!(parse_config_text("dt = 1e-3\n"), Err(ConfigError::MissingScenario)));
    }

    #[test]
    fn malformed_and_duplicate_lines_are_rejected() {
        assert!(matches!(
            parse_config_text("scenario small_vortex\n"),
            Err(ConfigError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_config_text("scenario = zero\nscenario = mms\n"),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_keys_become_scenario_overrides_and_fail_loudly() {
        match parse_config_text("scenario = zero\nwarp = 9\n") {
            Err(ConfigError::Scenario(ScenarioError::InvalidOverride { key, .. })) => {
                assert_eq!(key, "warp")
            }
            other => panic!("expected scenario override error, got {other:?}"),
        }
    }

    #[test]
    fn hash_changes_iff_semantics_change() {
        let a = parse_config_text(BASE).unwrap();
        // comment and whitespace changes leave the hash alone
        let b = parse_config_text(
            "scenario=small_vortex\namplitude =1e-3\nintegrator= both\nout_dir = elsewhere\n",
        )
        .unwrap();
        assert_eq!(a.hash(), b.hash(), "formatting and out_dir must not affect the hash");
        let c = parse_config_text(&BASE.replace("1e-3", "2e-3")).unwrap();
        assert_ne!(a.hash(), c.hash());
        let d = parse_config_text(&BASE.replace("both", "weak")).unwrap();
        assert_ne!(a.hash(), d.hash());
    }
}
