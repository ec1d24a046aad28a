use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::PipelineError;
use crate::analytics::{DEFAULT_CELL_SIZE, DEFAULT_MAX_CELLS};
use crate::ingest::DEFAULT_MIN_CONFIDENCE;
use crate::risk::RiskParams;

/// Prefix of environment variables overriding config fields, e.g. `IH_TAU=1.5`.
pub const ENV_PREFIX: &str = "IH_";

/// Scene capacity: estimated from the walking area, or given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Capacity {
    #[default]
    Auto,
    Fixed(u32),
}

impl Serialize for Capacity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Capacity::Auto => s.serialize_str("auto"),
            Capacity::Fixed(c) => s.serialize_u32(*c),
        }
    }
}

impl<'de> Deserialize<'de> for Capacity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Capacity;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"auto\" or a positive integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Capacity, E> {
                match v {
                    "auto" => Ok(Capacity::Auto),
                    _ => v
                        .parse::<u32>()
                        .map(Capacity::Fixed)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Capacity, E> {
                u32::try_from(v)
                    .map(Capacity::Fixed)
                    .map_err(|_| E::invalid_value(de::Unexpected::Unsigned(v), &self))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Capacity, E> {
                u32::try_from(v)
                    .map(Capacity::Fixed)
                    .map_err(|_| E::invalid_value(de::Unexpected::Signed(v), &self))
            }
        }
        d.deserialize_any(V)
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_eta() -> f64 {
    RiskParams::default().eta
}
fn default_beta() -> f64 {
    RiskParams::default().beta_slope
}
fn default_tau() -> f64 {
    RiskParams::default().tau
}
fn default_window() -> usize {
    RiskParams::default().window
}
fn default_link_max() -> f64 {
    RiskParams::default().link_max
}
fn default_alarm_risk() -> f64 {
    RiskParams::default().alarm_risk_threshold
}
fn default_alarm_count() -> u32 {
    RiskParams::default().alarm_count_threshold
}
fn default_min_confidence() -> f64 {
    DEFAULT_MIN_CONFIDENCE
}
fn default_cell_size() -> f64 {
    DEFAULT_CELL_SIZE
}
fn default_max_cells() -> usize {
    DEFAULT_MAX_CELLS
}
fn default_map_every() -> u64 {
    10
}
fn yes() -> bool {
    true
}

/// Settings of one `run`. Only `calibration` and `detections` are required.
///
/// Relative paths are taken relative to the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub calibration: PathBuf,
    /// Detections JSONL, or `-` for stdin.
    pub detections: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Overrides the calibration's camera id in logs and file names.
    #[serde(default)]
    pub camera_id: Option<String>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_beta")]
    pub beta_slope: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub capacity: Capacity,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_link_max")]
    pub link_max: f64,
    #[serde(default = "default_alarm_risk")]
    pub alarm_risk_threshold: f64,
    #[serde(default = "default_alarm_count")]
    pub alarm_count_threshold: u32,
    #[serde(default = "default_min_confidence")]
    pub min_confidence: f64,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    #[serde(default = "default_max_cells")]
    pub max_cells: usize,
    /// Rewrite the dynamic map and the running occupation map every this many
    /// frames; 0 writes them only at the end.
    #[serde(default = "default_map_every")]
    pub map_every: u64,
    #[serde(default = "yes")]
    pub write_logs: bool,
    #[serde(default = "yes")]
    pub write_maps: bool,
    /// Offset of local time from UTC, used to cut log files and reports at
    /// local midnight.
    #[serde(default)]
    pub utc_offset_minutes: i32,
}

impl RunConfig {
    /// Risk parameters with the given resolved capacity.
    pub fn risk_params(&self, capacity: u32) -> RiskParams {
        RiskParams {
            eta: self.eta,
            beta_slope: self.beta_slope,
            tau: self.tau,
            capacity,
            window: self.window,
            link_max: self.link_max,
            alarm_risk_threshold: self.alarm_risk_threshold,
            alarm_count_threshold: self.alarm_count_threshold,
        }
    }

    /// Parses a config document after applying `IH_*` overrides from `env`.
    pub fn from_json_with_env(
        text: &str,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, PipelineError> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let Some(obj) = value.as_object_mut() else {
            return Err(PipelineError::Config("config must be a JSON object".into()));
        };
        for (key, raw) in env {
            let Some(field) = key.strip_prefix(ENV_PREFIX) else { continue };
            let field = field.to_ascii_lowercase();
            // numbers and booleans parse as JSON, anything else is a string
            let v = serde_json::from_str::<Value>(&raw).unwrap_or(Value::String(raw));
            obj.insert(field, v);
        }
        serde_json::from_value(value).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config file, applies environment overrides and resolves
    /// relative paths against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json_with_env(&text, std::env::vars())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && p.as_os_str() != "-" {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.calibration);
        fix(&mut self.detections);
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.risk_params(match self.capacity {
            Capacity::Fixed(c) => c,
            Capacity::Auto => 1,
        })
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(PipelineError::Config(format!(
                "min_confidence must be in [0, 1], got {}",
                self.min_confidence
            )));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(PipelineError::Config(format!("cell_size must be positive, got {}", self.cell_size)));
        }
        if self.utc_offset_minutes.abs() >= 24 * 60 {
            return Err(PipelineError::Config("utc_offset_minutes must be within a day".into()));
        }
        if !self.calibration.is_file() {
            return Err(PipelineError::Config(format!(
                "calibration file {} does not exist",
                self.calibration.display()
            )));
        }
        if self.detections.as_os_str() != "-" && !self.detections.is_file() {
            return Err(PipelineError::Config(format!(
                "detections file {} does not exist",
                self.detections.display()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let c = RunConfig::from_json_with_env(r#"{"calibration":"c.json","detections":"-"}"#, env(&[])).unwrap();
        assert_eq!(c.capacity, Capacity::Auto);
        assert_eq!(c.window, 10);
        assert_eq!(c.min_confidence, 0.3);
        assert!(c.write_logs);
    }

    #[test]
    fn capacity_forms() {
        let c = RunConfig::from_json_with_env(r#"{"calibration":"c","detections":"d","capacity":12}"#, env(&[])).unwrap();
        assert_eq!(c.capacity, Capacity::Fixed(12));
        assert!(RunConfig::from_json_with_env(r#"{"calibration":"c","detections":"d","capacity":"lots"}"#, env(&[])).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = RunConfig::from_json_with_env(r#"{"calibration":"c","detections":"d","tua":1}"#, env(&[]));
        assert!(matches!(e, Err(PipelineError::Config(m)) if m.contains("tua")));
    }

    #[test]
    fn env_overrides() {
        let c = RunConfig::from_json_with_env(
            r#"{"calibration":"c","detections":"d","tau":1.0}"#,
            env(&[("IH_TAU", "1.5"), ("IH_CAPACITY", "auto"), ("IH_WRITE_MAPS", "false"), ("PATH", "/bin")]),
        )
        .unwrap();
        assert_eq!(c.tau, 1.5);
        assert_eq!(c.capacity, Capacity::Auto);
        assert!(!c.write_maps);
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut c = RunConfig::from_json_with_env(r#"{"calibration":"c.json","detections":"-"}"#, env(&[])).unwrap();
        c.resolve_paths(Path::new("/etc/site"));
        assert_eq!(c.calibration, PathBuf::from("/etc/site/c.json"));
        assert_eq!(c.detections, PathBuf::from("-"));
        assert_eq!(c.output_dir, PathBuf::from("/etc/site/out"));
    }
}
