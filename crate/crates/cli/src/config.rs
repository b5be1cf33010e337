use std::path::{Path, PathBuf};

use relayopt::Config;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "cf")]
    Cf,
    #[serde(rename = "df-ml")]
    DfMl,
    #[serde(rename = "df-sl")]
    DfSl,
    #[serde(rename = "cutset")]
    Cutset,
}

pub const ALL_SCHEMES: [SchemeName; 5] = [
    SchemeName::Hybrid,
    SchemeName::Cf,
    SchemeName::DfMl,
    SchemeName::DfSl,
    SchemeName::Cutset,
];

/// What a sweep varies: `"backhaul_all"` sets every backhaul capacity, and
/// `{"gain_index": k}` the gain (dB) of the k-th relay, counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    BackhaulAll,
    GainIndex(usize),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Sweep {
    /// `steps` evenly spaced values from `from` to `to`, both included.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gains_db: Vec<f64>,
    #[serde(default)]
    pub power_db: f64,
    pub backhaul: Vec<f64>,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<SchemeName>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn all_schemes() -> Vec<SchemeName> {
    ALL_SCHEMES.to_vec()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = self.gains_db.len();
        if m == 0 {
            return Err(CliError::Config("at least one relay is required".into()));
        }
        if self.backhaul.len() != m {
            return Err(CliError::Config(format!(
                "{m} gains but {} backhaul capacities",
                self.backhaul.len()
            )));
        }
        if self.schemes.is_empty() {
            return Err(CliError::Config("no schemes requested".into()));
        }
        if let Some(s) = &self.sweep {
            if s.steps < 2 {
                return Err(CliError::Config(format!(
                    "a sweep needs at least 2 steps, got {}",
                    s.steps
                )));
            }
            if !s.from.is_finite() || !s.to.is_finite() {
                return Err(CliError::Config("sweep bounds must be finite".into()));
            }
            if let SweepParameter::GainIndex(k) = s.parameter {
                if k == 0 || k > m {
                    return Err(CliError::Config(format!("gain_index {k} outside 1..={m}")));
                }
            }
        }
        self.network()?;
        Ok(())
    }

    pub fn network(&self) -> Result<Config, CliError> {
        Config::from_db(&self.gains_db, self.power_db, self.backhaul.clone())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// The configuration with the swept parameter set to `value`.
    pub fn at(&self, value: f64) -> Result<Config, CliError> {
        let mut point = self.clone();
        match self.sweep.as_ref().map(|s| s.parameter) {
            Some(SweepParameter::BackhaulAll) => point.backhaul = vec![value; self.backhaul.len()],
            Some(SweepParameter::GainIndex(k)) => point.gains_db[k - 1] = value,
            None => {}
        }
        point.network()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<ExperimentConfig, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(json).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn defaults_and_sweeps() {
        let cfg = parse(r#"{"gains_db": [10, 10], "backhaul": [2, 2]}"#).unwrap();
        assert_eq!(cfg.schemes, ALL_SCHEMES.to_vec());
        assert_eq!(cfg.power_db, 0.0);
        let cfg = parse(
            r#"{"gains_db": [0, 10], "backhaul": [2, 2], "schemes": ["df-sl"],
                "sweep": {"parameter": {"gain_index": 2}, "from": 0, "to": 20, "steps": 5}}"#,
        )
        .unwrap();
        assert_eq!(cfg.sweep.as_ref().unwrap().values(), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        let at = cfg.at(20.0).unwrap();
        assert!((at.gains().iter().cloned().fold(0.0, f64::max) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            r#"{"gains_db": [10, 10], "backhaul": [2]}"#,
            r#"{"gains_db": [], "backhaul": []}"#,
            r#"{"gains_db": [10], "backhaul": [-1]}"#,
            r#"{"gains_db": [10], "backhaul": [1], "schemes": ["af"]}"#,
            r#"{"gains_db": [10], "backhaul": [1], "sweep": {"parameter": "backhaul_all", "from": 0, "to": 1, "steps": 1}}"#,
            r#"{"gains_db": [10], "backhaul": [1], "sweep": {"parameter": {"gain_index": 2}, "from": 0, "to": 1, "steps": 3}}"#,
            r#"{"gains_db": [10], "backhaul": [1], "typo": 3}"#,
        ] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }
}
