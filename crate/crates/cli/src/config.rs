//! JSON run configuration and its merge with command-line flags.
//!
//! Precedence, highest first: command-line flag, config file field, built-in default.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lbgame_core::dynamic::{ArrivalOrder, SimultaneousRule, UpdateMode};
use lbgame_core::experiments::{setting_by_name, SettingInstance, SettingSpec};
use lbgame_core::trace::TraceFormat;
use lbgame_core::Instance;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub instance: Option<Instance>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Option<String>,
    pub order: Option<String>,
    pub seed: Option<u64>,
    pub max_steps: Option<usize>,
    pub zero_tolerance: Option<f64>,
    pub rule: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::failed(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

pub fn parse_mode(s: &str) -> Result<UpdateMode, String> {
    match s {
        "seq" | "sequential" => Ok(UpdateMode::Sequential),
        "simul" | "simultaneous" => Ok(UpdateMode::Simultaneous),
        other => Err(format!("unknown mode `{other}` (expected seq or simul)")),
    }
}

pub fn parse_rule(s: &str) -> Result<SimultaneousRule, String> {
    match s {
        "stage" | "stage-equilibrium" => Ok(SimultaneousRule::StageEquilibrium),
        "previous" | "previous-round" => Ok(SimultaneousRule::PreviousRound),
        other => Err(format!("unknown simultaneous rule `{other}` (expected stage or previous)")),
    }
}

pub fn parse_format(s: &str) -> Result<TraceFormat, String> {
    TraceFormat::from_str(s).map_err(|e| e.to_string())
}

/// Order argument: `round-robin`, `random` or a file of player indices.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderArg {
    RoundRobin,
    Random,
    File(PathBuf),
}

impl FromStr for OrderArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "round-robin" | "rr" => OrderArg::RoundRobin,
            "random" => OrderArg::Random,
            path => OrderArg::File(PathBuf::from(path)),
        })
    }
}

impl OrderArg {
    /// Concrete sequential order; `None` for seeded random, derived downstream from the run seed.
    pub fn resolve(&self, n: usize) -> Result<Option<ArrivalOrder>, CliError> {
        match self {
            OrderArg::RoundRobin => Ok(Some(ArrivalOrder::RoundRobin)),
            OrderArg::Random => Ok(None),
            OrderArg::File(path) => {
                let players = read_order_file(path)?;
                if let Some(bad) = players.iter().find(|&&i| i >= n) {
                    return Err(CliError::usage(format!(
                        "order file {}: player {bad} out of range (n = {n})",
                        path.display()
                    )));
                }
                if players.is_empty() {
                    return Err(CliError::usage(format!("order file {} lists no players", path.display())));
                }
                Ok(Some(ArrivalOrder::Explicit(players)))
            }
        }
    }
}

fn read_order_file(path: &Path) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read order file {}: {e}", path.display())))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CliError::usage(format!("order file {}: `{t}` is not a player index", path.display())))
        })
        .collect()
}

/// Instance source after merging `--setting` and the config file.
pub struct Source {
    pub spec: SettingSpec,
    pub instance: Instance,
}

pub fn resolve_source(setting: Option<&str>, config: &ConfigFile, seed: u64) -> Result<Source, CliError> {
    if let Some(name) = setting {
        let spec = setting_by_name(name).map_err(|e| CliError::usage(e.to_string()))?;
        let instance = spec.instance(Some(seed)).map_err(CliError::from)?;
        return Ok(Source { spec, instance });
    }
    match &config.instance {
        Some(inst) => Ok(Source {
            spec: SettingSpec {
                id: "custom".into(),
                description: format!("from config, {} players, {} servers", inst.n(), inst.m()),
                instance: SettingInstance::Fixed(inst.clone()),
                modes: Vec::new(),
            },
            instance: inst.clone(),
        }),
        None => Err(CliError::usage("no instance given: pass --setting ID or --config FILE with an instance block")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_named() {
        let err = serde_json::from_str::<ConfigFile>(r#"{"run": {"mode": "seq", "speed": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("speed"), "{err}");
        let err = serde_json::from_str::<ConfigFile>(r#"{"instance": {"mu": [1], "lambda": [1], "s0": [0], "nu": 1}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("nu"), "{err}");
    }

    #[test]
    fn full_config_parses() {
        let cfg: ConfigFile = serde_json::from_str(
            r#"{"instance": {"mu": [1.5, 2.5], "lambda": [1, 2], "s0": [2, 4]},
                "run": {"mode": "simul", "order": "round-robin", "seed": 7, "max_steps": 40, "zero_tolerance": 0.0},
                "output": {"path": "t.csv", "format": "csv"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.instance.unwrap().mu(), &[1.5, 2.5]);
        assert_eq!(cfg.run.seed, Some(7));
        assert_eq!(parse_mode(cfg.run.mode.as_deref().unwrap()), Ok(UpdateMode::Simultaneous));
    }

    #[test]
    fn argument_parsers() {
        assert_eq!(parse_mode("seq"), Ok(UpdateMode::Sequential));
        assert!(parse_mode("both").is_err());
        assert_eq!(parse_rule("previous"), Ok(SimultaneousRule::PreviousRound));
        assert_eq!("random".parse::<OrderArg>(), Ok(OrderArg::Random));
        assert_eq!("orders.txt".parse::<OrderArg>(), Ok(OrderArg::File("orders.txt".into())));
        assert_eq!(parse_format("jsonl"), Ok(TraceFormat::Jsonl));
    }

    #[test]
    fn order_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("order.txt");
        fs::write(&path, "0 1, 2\n1\n").unwrap();
        let order = OrderArg::File(path.clone()).resolve(3).unwrap();
        assert_eq!(order, Some(ArrivalOrder::Explicit(vec![0, 1, 2, 1])));
        assert!(OrderArg::File(path.clone()).resolve(2).is_err());
        fs::write(&path, "0 x").unwrap();
        assert!(OrderArg::File(path).resolve(3).is_err());
    }
}
