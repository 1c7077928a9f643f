//! Repeated runs of one algorithm over a seed list.

use super::config::{Algorithm, ExperimentConfig};
use super::output::{write_curve_csv, write_json, write_run_csv};
use super::HarnessError;
use crate::criticality::Objective;
use crate::search::{
    critical_count, doo_run, hoo_run, mc_run, poo_run, soo_run, DooParams, EvalRecord, HooParams, PooInstanceReport,
    PooParams, SooParams,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::time::Instant;

/// One algorithm with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum Variant {
    Mc,
    Hoo { nu1: f64, rho: f64 },
    Poo { nu_max: f64, rho_max: f64 },
    Doo { nu1: f64, rho: f64 },
    Soo { epsilon: f64 },
}

impl Variant {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        match cfg.algorithm {
            Algorithm::Mc => Variant::Mc,
            Algorithm::Hoo => Variant::Hoo { nu1: cfg.hoo.nu1, rho: cfg.hoo.rho },
            Algorithm::Poo => Variant::Poo { nu_max: cfg.poo.nu_max, rho_max: cfg.poo.rho_max },
            Algorithm::Doo => Variant::Doo { nu1: cfg.doo.nu1, rho: cfg.doo.rho },
            Algorithm::Soo => Variant::Soo { epsilon: cfg.soo.epsilon },
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Variant::Mc => Algorithm::Mc,
            Variant::Hoo { .. } => Algorithm::Hoo,
            Variant::Poo { .. } => Algorithm::Poo,
            Variant::Doo { .. } => Algorithm::Doo,
            Variant::Soo { .. } => Algorithm::Soo,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Mc => write!(f, "mc"),
            Variant::Hoo { nu1, rho } => write!(f, "hoo(nu1={nu1}, rho={rho})"),
            Variant::Poo { nu_max, rho_max } => write!(f, "poo(nu_max={nu_max}, rho_max={rho_max})"),
            Variant::Doo { nu1, rho } => write!(f, "doo(nu1={nu1}, rho={rho})"),
            Variant::Soo { epsilon } => write!(f, "soo(epsilon={epsilon})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooDetails {
    pub instances: Vec<PooInstanceReport>,
    pub cache_hits: u64,
    pub best_instance: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRun {
    pub trace: Vec<EvalRecord>,
    pub poo: Option<PooDetails>,
}

pub fn run_algorithm<O: Objective + ?Sized>(
    variant: Variant,
    budget: usize,
    seed: u64,
    objective: &O,
    c_kappa: f64,
) -> Result<AlgorithmRun, HarnessError> {
    let trace = match variant {
        Variant::Mc => mc_run(budget, seed, objective, c_kappa)?,
        Variant::Hoo { nu1, rho } => hoo_run(budget, HooParams { nu1, rho, seed }, objective, c_kappa)?,
        Variant::Doo { nu1, rho } => doo_run(budget, DooParams { nu1, rho }, objective, c_kappa)?,
        Variant::Soo { epsilon } => soo_run(budget, SooParams { epsilon }, objective, c_kappa)?,
        Variant::Poo { nu_max, rho_max } => {
            let run = poo_run(budget, PooParams { nu_max, rho_max, seed }, objective, c_kappa)?;
            let details = PooDetails {
                best_instance: run.best_instance().map(|r| r.instance_id),
                instances: run.instances,
                cache_hits: run.cache_hits,
            };
            return Ok(AlgorithmRun { trace: run.trace, poo: Some(details) });
        }
    };
    Ok(AlgorithmRun { trace, poo: None })
}

/// Mean and sample standard deviation (`n - 1` denominator; `None` for a
/// single value).
pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, sd)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub evaluations: usize,
    pub critical_count: usize,
    pub critical_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poo: Option<PooDetails>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    #[serde(flatten)]
    pub variant: Variant,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedSummary>,
    pub mean_critical: f64,
    pub sd_critical: Option<f64>,
    pub critical_ratio: f64,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn from_runs(variant: Variant, budget: usize, runs: Vec<(u64, AlgorithmRun)>, wall_time_s: f64) -> Self {
        let per_seed: Vec<SeedSummary> = runs
            .into_iter()
            .map(|(seed, run)| {
                let count = critical_count(&run.trace);
                SeedSummary {
                    seed,
                    evaluations: run.trace.len(),
                    critical_count: count,
                    critical_ratio: count as f64 / run.trace.len().max(1) as f64,
                    poo: run.poo,
                }
            })
            .collect();
        let counts: Vec<f64> = per_seed.iter().map(|s| s.critical_count as f64).collect();
        let (mean, sd) = mean_sd(&counts);
        Summary {
            variant,
            budget,
            seeds: per_seed.iter().map(|s| s.seed).collect(),
            per_seed,
            mean_critical: mean,
            sd_critical: sd,
            critical_ratio: mean / budget as f64,
            wall_time_s,
        }
    }
}

/// Runs the configured algorithm once per seed and writes `run_<seed>.csv`,
/// `curve_<seed>.csv` and `summary.json` to the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, HarnessError> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let objective = cfg.objective();
    let variant = Variant::from_config(cfg);
    let start = Instant::now();
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = run_algorithm(variant, cfg.budget, seed, &objective, cfg.crit.c_kappa)?;
            write_run_csv(&dir.join(format!("run_{seed}.csv")), &run.trace, &objective.space)?;
            write_curve_csv(&dir.join(format!("curve_{seed}.csv")), &run.trace)?;
            Ok((seed, run))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let summary = Summary::from_runs(variant, cfg.budget, runs, start.elapsed().as_secs_f64());
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}
