//! Parallel optimistic optimization: a schedule of HOO instances sharing one
//! evaluation cache keyed by node.

use super::hoo::{Hoo, HooParams};
use super::{check_open_unit, check_positive, EvalRecord, Evaluator, SearchError};
use crate::criticality::{Objective, UnitPoint};
use crate::partition::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooParams {
    pub nu_max: f64,
    pub rho_max: f64,
    pub seed: u64,
}

impl PooParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        check_positive("nu_max", self.nu_max)?;
        check_open_unit("rho_max", self.rho_max)
    }
}

/// Number of instances: `ceil(D_max/2 * ln(n / ln n))` rounded up to a power
/// of two, with `D_max = ln 2 / ln(1/rho_max)`.
pub fn poo_instance_count(rho_max: f64, n: usize) -> usize {
    let n = n as f64;
    if n < 3.0 {
        return 1;
    }
    let d_max = std::f64::consts::LN_2 / (1.0 / rho_max).ln();
    let raw = (0.5 * d_max * (n / n.ln()).ln()).ceil().max(1.0);
    (raw as usize).next_power_of_two()
}

/// HOO settings of every instance; instance `j` (1-based) uses
/// `rho_max^(M/j)`, so the last instance runs with `rho_max` itself.
pub fn poo_schedule(p: &PooParams, n: usize) -> Vec<HooParams> {
    let m = poo_instance_count(p.rho_max, n);
    (1..=m)
        .map(|j| HooParams { nu1: p.nu_max, rho: p.rho_max.powf(m as f64 / j as f64), seed: p.seed })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PooInstanceReport {
    pub instance_id: usize,
    pub rho: f64,
    pub plays: u64,
    pub fresh: u64,
    pub hits: u64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooRun {
    /// Fresh evaluations only.
    pub trace: Vec<EvalRecord>,
    pub instances: Vec<PooInstanceReport>,
    pub cache_hits: u64,
}

impl PooRun {
    /// Instance with the highest mean reward over its own plays.
    pub fn best_instance(&self) -> Option<&PooInstanceReport> {
        self.instances
            .iter()
            .filter(|r| r.plays > 0)
            .max_by(|a, b| a.mean_reward.total_cmp(&b.mean_reward).then(b.instance_id.cmp(&a.instance_id)))
    }
}

/// Round-robin over the scheduled instances until `n_max` fresh evaluations
/// are spent. A node already evaluated by any instance is reused at no cost,
/// point and value together; a hit draws nothing from the instance's RNG.
pub fn poo_run<O: Objective + ?Sized>(
    n_max: usize,
    params: PooParams,
    objective: &O,
    c_kappa: f64,
) -> Result<PooRun, SearchError> {
    params.validate()?;
    let schedule = poo_schedule(&params, n_max);
    let mut instances = schedule
        .iter()
        .enumerate()
        .map(|(j, hp)| Hoo::new(objective.dim(), *hp, j as u64))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports: Vec<PooInstanceReport> = schedule
        .iter()
        .enumerate()
        .map(|(j, hp)| PooInstanceReport { instance_id: j + 1, rho: hp.rho, plays: 0, fresh: 0, hits: 0, mean_reward: 0.0 })
        .collect();
    let mut cache: HashMap<NodeId, (UnitPoint, f64)> = HashMap::new();
    let mut reward_sums = vec![0.0; instances.len()];
    let mut cache_hits = 0;
    let mut ev = Evaluator::new(objective, n_max, c_kappa);

    'outer: while !ev.budget.exhausted() {
        for (j, hoo) in instances.iter_mut().enumerate() {
            if ev.budget.exhausted() {
                break 'outer;
            }
            let path = hoo.select();
            let leaf = *path.last().expect("path is never empty");
            let id = hoo.tree().node(leaf).id;
            let (point, kappa) = match cache.get(&id) {
                Some((p, k)) => {
                    cache_hits += 1;
                    reports[j].hits += 1;
                    (p.clone(), *k)
                }
                None => {
                    let p = hoo.propose(leaf);
                    let k = ev.eval(p.clone(), Some(id), Some(j + 1))?;
                    cache.insert(id, (p.clone(), k));
                    reports[j].fresh += 1;
                    (p, k)
                }
            };
            reports[j].plays += 1;
            reward_sums[j] += kappa;
            hoo.update(&path, point, kappa);
        }
    }
    for (r, s) in reports.iter_mut().zip(&reward_sums) {
        if r.plays > 0 {
            r.mean_reward = s / r.plays as f64;
        }
    }
    Ok(PooRun { trace: ev.trace, instances: reports, cache_hits })
}
