//! Experiment configuration.
//!
//! A config file is TOML written as flat key paths (`sim.b_size = 70.0`);
//! plain tables work as well. Command-line overrides use the same paths.

use super::HarnessError;
use crate::bms::{ControlLimits, SimParams};
use crate::criticality::{BatteryObjective, CriticalitySpec, ParamSpace};
use crate::search::{DooParams, PooParams, SooParams};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mc,
    Hoo,
    Poo,
    Doo,
    Soo,
}

impl Algorithm {
    pub fn is_deterministic(self) -> bool {
        matches!(self, Algorithm::Doo | Algorithm::Soo)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Mc => "mc",
            Algorithm::Hoo => "hoo",
            Algorithm::Poo => "poo",
            Algorithm::Doo => "doo",
            Algorithm::Soo => "soo",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mc" => Ok(Algorithm::Mc),
            "hoo" => Ok(Algorithm::Hoo),
            "poo" => Ok(Algorithm::Poo),
            "doo" => Ok(Algorithm::Doo),
            "soo" => Ok(Algorithm::Soo),
            other => Err(format!("unknown algorithm `{other}` (expected mc, hoo, poo, doo or soo)")),
        }
    }
}

/// HOO settings without the seed, which comes from the seed list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HooConfig {
    pub nu1: f64,
    pub rho: f64,
}

impl Default for HooConfig {
    fn default() -> Self {
        HooConfig { nu1: 1.0, rho: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PooConfig {
    pub nu_max: f64,
    pub rho_max: f64,
}

impl Default for PooConfig {
    fn default() -> Self {
        PooConfig { nu_max: 1.0, rho_max: 0.9 }
    }
}

impl PooConfig {
    pub fn with_seed(&self, seed: u64) -> PooParams {
        PooParams { nu_max: self.nu_max, rho_max: self.rho_max, seed }
    }
}

/// Test space bounds in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    /// deg C
    pub t_amb: [f64; 2],
    /// A
    pub i_max: [f64; 2],
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig { t_amb: [-5.0, 40.0], i_max: [10.0, 100.0] }
    }
}

impl SpaceConfig {
    pub fn to_space(&self) -> ParamSpace {
        ParamSpace::battery(self.t_amb[0], self.t_amb[1], self.i_max[0], self.i_max[1])
    }
}

/// Variants run by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub mc: bool,
    pub hoo_rhos: Vec<f64>,
    pub poo_rho_maxes: Vec<f64>,
    pub doo_rhos: Vec<f64>,
    pub soo_epsilons: Vec<f64>,
    /// Below this budget the ordering chain is reported but not asserted.
    pub min_budget_for_ordering: usize,
    /// Every optimizer must find this many times the Monte Carlo mean.
    pub min_factor_over_mc: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            mc: true,
            hoo_rhos: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99],
            poo_rho_maxes: vec![0.9],
            doo_rhos: vec![0.3],
            soo_epsilons: vec![0.6],
            min_budget_for_ordering: 2000,
            min_factor_over_mc: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Stride of the `trace` command's state export, in steps.
    pub trace_stride: Option<u64>,
    /// Grid resolution of `grid` and `calibrate`.
    pub grid_resolution: usize,
    pub hoo: HooConfig,
    pub poo: PooConfig,
    pub doo: DooParams,
    pub soo: SooParams,
    pub sim: SimParams,
    pub limits: ControlLimits,
    pub space: SpaceConfig,
    pub crit: CriticalitySpec,
    pub compare: CompareConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Mc,
            budget: 4000,
            seeds: vec![1, 2, 3, 4, 5],
            output_dir: PathBuf::from("out"),
            trace_stride: Some(60),
            grid_resolution: 101,
            hoo: HooConfig::default(),
            poo: PooConfig::default(),
            doo: DooParams::default(),
            soo: SooParams::default(),
            sim: SimParams::default(),
            limits: ControlLimits::default(),
            space: SpaceConfig::default(),
            crit: CriticalitySpec::default(),
            compare: CompareConfig::default(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// Parses one `key.path=value` override. Values that are not valid TOML are
/// taken as strings, so `algorithm=hoo` works without quotes.
pub fn parse_override(spec: &str) -> Result<Table, HarnessError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_error(format!("override `{spec}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || !key.split('.').all(|part| !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')) {
        return Err(config_error(format!("override key `{key}` is not a dotted path")));
    }
    let raw = raw.trim();
    let doc = format!("{key} = {raw}");
    match doc.parse::<Table>() {
        Ok(t) => Ok(t),
        Err(_) => {
            let mut t = Table::new();
            insert_path(&mut t, key, Value::String(raw.to_string()));
            Ok(t)
        }
    }
}

fn insert_path(table: &mut Table, key: &str, value: Value) {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .expect("fresh intermediate table");
    }
    cur.insert(last.to_string(), value);
}

/// Deep merge of `over` into `base`; tables merge, everything else replaces.
pub fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl ExperimentConfig {
    /// Builds a config from an optional file plus overrides, then validates it.
    pub fn load(path: Option<&Path>, overrides: &[Table]) -> Result<Self, HarnessError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?;
                text.parse::<Table>()
                    .map_err(|e| config_error(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for o in overrides {
            merge(&mut table, o.clone());
        }
        let cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.budget == 0 {
            return Err(config_error("budget must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(config_error("seeds must list at least one seed"));
        }
        if self.grid_resolution < 2 {
            return Err(config_error("grid_resolution must be at least 2"));
        }
        self.sim.validate().map_err(|e| config_error(format!("sim: {e}")))?;
        self.limits.validate().map_err(|e| config_error(format!("limits: {e}")))?;
        self.space.to_space().validate().map_err(|e| config_error(format!("space: {e}")))?;
        self.crit.validate().map_err(config_error)?;
        let hoo = crate::search::HooParams { nu1: self.hoo.nu1, rho: self.hoo.rho, seed: 0 };
        hoo.validate().map_err(|e| config_error(format!("hoo: {e}")))?;
        self.poo.with_seed(0).validate().map_err(|e| config_error(format!("poo: {e}")))?;
        self.doo.validate().map_err(|e| config_error(format!("doo: {e}")))?;
        self.soo.validate().map_err(|e| config_error(format!("soo: {e}")))?;
        Ok(())
    }

    pub fn objective(&self) -> BatteryObjective {
        BatteryObjective::new(self.sim.clone(), self.limits.clone(), self.space.to_space(), self.crit.clone())
    }
}
