//! Run configuration: a flat `key = value` file with strict, typed parsing.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, found `{value}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("`{0}` must be positive")]
    NotPositive(&'static str),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Exact,
    Spectral,
}

impl FromStr for Method {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "mc" | "monte_carlo" => Ok(Method::Mc),
            "exact" => Ok(Method::Exact),
            "spectral" => Ok(Method::Spectral),
            _ => Err(()),
        }
    }
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Exact => "exact",
            Method::Spectral => "spectral",
        }
    }
}

/// Every parameter of a run. Records persist the whole struct so a result
/// can be reproduced from its line alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub group: String,
    pub method: Method,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    pub spectral_m: usize,
    pub spectral_h: f64,
    pub entropy_n_max: usize,
    pub key_grid: f64,
    pub audit_tolerance: f64,
    pub results_path: Option<String>,
    pub csv_path: Option<String>,
    pub svg_path: Option<String>,
    pub render_radius: usize,
    pub stroke_width: f64,
    pub canvas_size: u32,
    pub orbit_word: String,
    pub measure_samples: usize,
    pub measure_steps: usize,
    pub record_wallclock: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            group: "triangle:4,4,4".into(),
            method: Method::Mc,
            steps: 4000,
            trials: 10_000,
            seed: 1,
            spectral_m: 512,
            spectral_h: 1e-3,
            entropy_n_max: 10,
            key_grid: 1e-8,
            audit_tolerance: 1e-6,
            results_path: None,
            csv_path: None,
            svg_path: None,
            render_radius: 4,
            stroke_width: 0.6,
            canvas_size: 800,
            orbit_word: "g1 g2 g1 g3".into(),
            measure_samples: 20_000,
            measure_steps: 400,
            record_wallclock: false,
        }
    }
}

pub const KEYS: [&str; 20] = [
    "group",
    "method",
    "steps",
    "trials",
    "seed",
    "spectral_m",
    "spectral_h",
    "entropy_n_max",
    "key_grid",
    "audit_tolerance",
    "results_path",
    "csv_path",
    "svg_path",
    "render_radius",
    "stroke_width",
    "canvas_size",
    "orbit_word",
    "measure_samples",
    "measure_steps",
    "record_wallclock",
];

fn parse<T: FromStr>(line: usize, key: &str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        line,
        key: key.into(),
        value: value.into(),
        expected,
    })
}

impl RunConfig {
    /// Sets one key from its textual value; `line` is used in errors only.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let path = |v: &str| (!v.is_empty()).then(|| v.to_string());
        match key {
            "group" => self.group = value.into(),
            "method" => self.method = parse(line, key, value, "mc, exact or spectral")?,
            "steps" => self.steps = parse(line, key, value, "an integer")?,
            "trials" => self.trials = parse(line, key, value, "an integer")?,
            "seed" => self.seed = parse(line, key, value, "an unsigned integer")?,
            "spectral_m" => self.spectral_m = parse(line, key, value, "an integer")?,
            "spectral_h" => self.spectral_h = parse(line, key, value, "a number")?,
            "entropy_n_max" => self.entropy_n_max = parse(line, key, value, "an integer")?,
            "key_grid" => self.key_grid = parse(line, key, value, "a number")?,
            "audit_tolerance" => self.audit_tolerance = parse(line, key, value, "a number")?,
            "results_path" => self.results_path = path(value),
            "csv_path" => self.csv_path = path(value),
            "svg_path" => self.svg_path = path(value),
            "render_radius" => self.render_radius = parse(line, key, value, "an integer")?,
            "stroke_width" => self.stroke_width = parse(line, key, value, "a number")?,
            "canvas_size" => self.canvas_size = parse(line, key, value, "an integer")?,
            "orbit_word" => self.orbit_word = value.into(),
            "measure_samples" => self.measure_samples = parse(line, key, value, "an integer")?,
            "measure_steps" => self.measure_steps = parse(line, key, value, "an integer")?,
            "record_wallclock" => self.record_wallclock = parse(line, key, value, "true or false")?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.into(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks: [(&'static str, bool); 11] = [
            ("steps", self.steps > 0),
            ("trials", self.trials > 0),
            ("spectral_m", self.spectral_m > 0),
            ("spectral_h", self.spectral_h > 0.0),
            ("entropy_n_max", self.entropy_n_max > 0),
            ("key_grid", self.key_grid > 0.0),
            ("audit_tolerance", self.audit_tolerance > 0.0),
            ("stroke_width", self.stroke_width > 0.0),
            ("canvas_size", self.canvas_size > 0),
            ("measure_samples", self.measure_samples > 0),
            ("measure_steps", self.measure_steps > 0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((key, _)) => Err(ConfigError::NotPositive(key)),
            None => Ok(()),
        }
    }

    /// Serialises back to the file format; parsing the result gives `self`.
    pub fn to_config_string(&self) -> String {
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("group", self.group.clone());
        put("method", self.method.as_str().into());
        put("steps", self.steps.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("spectral_m", self.spectral_m.to_string());
        put("spectral_h", format!("{:e}", self.spectral_h));
        put("entropy_n_max", self.entropy_n_max.to_string());
        put("key_grid", format!("{:e}", self.key_grid));
        put("audit_tolerance", format!("{:e}", self.audit_tolerance));
        put("results_path", opt(&self.results_path));
        put("csv_path", opt(&self.csv_path));
        put("svg_path", opt(&self.svg_path));
        put("render_radius", self.render_radius.to_string());
        put("stroke_width", self.stroke_width.to_string());
        put("canvas_size", self.canvas_size.to_string());
        put("orbit_word", self.orbit_word.clone());
        put("measure_samples", self.measure_samples.to_string());
        put("measure_steps", self.measure_steps.to_string());
        put("record_wallclock", self.record_wallclock.to_string());
        s
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        text.parse()
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: trimmed.into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    text: trimmed.into(),
                });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.into(),
                });
            }
            config.set(key, value, line)?;
            seen.push(key.into());
        }
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = c.to_config_string().parse().unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn every_key_is_settable() {
        let mut c = RunConfig::default();
        for key in KEYS {
            let text = c.to_config_string();
            let line = text.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap();
            let value = line.split_once('=').unwrap().1.trim();
            c.set(key, value, 1).unwrap();
        }
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn strict_parsing() {
        assert!(matches!(
            "steps = 10\nsteeps = 3".parse::<RunConfig>(),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            "steps = ten".parse::<RunConfig>(),
            Err(ConfigError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            "steps = 1\nsteps = 2".parse::<RunConfig>(),
            Err(ConfigError::Duplicate { line: 2, .. })
        ));
        assert!(matches!("just words".parse::<RunConfig>(), Err(ConfigError::Syntax { .. })));
        assert!(matches!("trials = 0".parse::<RunConfig>(), Err(ConfigError::NotPositive("trials"))));
        assert!(matches!("spectral_h = -1".parse::<RunConfig>(), Err(ConfigError::NotPositive(_))));
    }

    #[test]
    fn comments_and_overrides() {
        let c: RunConfig = "# drift run\n\ngroup = bolza\nmethod = exact\nseed = 7\nsvg_path = out.svg\n"
            .parse()
            .unwrap();
        assert_eq!(c.group, "bolza");
        assert_eq!(c.method, Method::Exact);
        assert_eq!(c.seed, 7);
        assert_eq!(c.svg_path.as_deref(), Some("out.svg"));
        assert_eq!(c.steps, RunConfig::default().steps);
    }
}
