//! Side-by-side runs of several algorithm variants and the ordering checks
//! between their critical counts.

use super::config::ExperimentConfig;
use super::run::{mean_sd, run_algorithm, Variant};
use super::HarnessError;
use crate::search::critical_count;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantResult {
    pub variant: Variant,
    /// Seeds actually run; deterministic variants run once.
    pub seeds: Vec<u64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub sd: Option<f64>,
}

/// `left > right` on critical counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingCheck {
    pub left: String,
    pub left_count: f64,
    pub right: String,
    pub right_count: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub budget: usize,
    pub results: Vec<VariantResult>,
    pub checks: Vec<OrderingCheck>,
    /// False below the ordering budget or without a Monte Carlo baseline;
    /// the checks are then informational.
    pub asserted: bool,
    pub passed: bool,
}

impl CompareReport {
    pub fn result(&self, variant: &Variant) -> Option<&VariantResult> {
        self.results.iter().find(|r| &r.variant == variant)
    }
}

/// Variants listed in `cfg.compare`, in chain order.
pub fn compare_variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    let c = &cfg.compare;
    let mut v = Vec::new();
    v.extend(c.doo_rhos.iter().map(|&rho| Variant::Doo { nu1: cfg.doo.nu1, rho }));
    v.extend(c.soo_epsilons.iter().map(|&epsilon| Variant::Soo { epsilon }));
    v.extend(c.hoo_rhos.iter().map(|&rho| Variant::Hoo { nu1: cfg.hoo.nu1, rho }));
    v.extend(c.poo_rho_maxes.iter().map(|&rho_max| Variant::Poo { nu_max: cfg.poo.nu_max, rho_max }));
    if c.mc {
        v.push(Variant::Mc);
    }
    v
}

struct Group<'a> {
    label: String,
    low: (&'a str, f64),
    high: (&'a str, f64),
}

fn extreme(results: &[(String, f64)], best: bool) -> Option<(&str, f64)> {
    let it = results.iter().map(|(l, c)| (l.as_str(), *c));
    if best {
        it.max_by(|a, b| a.1.total_cmp(&b.1))
    } else {
        it.min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Ordering checks: each group's worst count above the next group's best
/// along DOO > SOO > HOO > MC, where HOO is represented by its best variant
/// on both sides; POO below the best HOO; every optimizer above the
/// configured multiple of the Monte Carlo mean.
pub fn ordering_checks(results: &[VariantResult], factor_over_mc: f64) -> Vec<OrderingCheck> {
    let by = |alg: crate::harness::Algorithm| -> Vec<(String, f64)> {
        results
            .iter()
            .filter(|r| r.variant.algorithm() == alg)
            .map(|r| (r.variant.to_string(), r.mean))
            .collect()
    };
    use crate::harness::Algorithm::*;
    let (doo, soo, hoo, poo, mc) = (by(Doo), by(Soo), by(Hoo), by(Poo), by(Mc));

    let mut groups = Vec::new();
    for (name, members, hoo_like) in [("doo", &doo, false), ("soo", &soo, false), ("hoo", &hoo, true), ("mc", &mc, true)] {
        if let (Some(lo), Some(hi)) = (extreme(members, hoo_like), extreme(members, true)) {
            groups.push(Group { label: name.to_string(), low: lo, high: hi });
        }
    }
    let check = |left: (&str, f64), right: (&str, f64)| OrderingCheck {
        left: left.0.to_string(),
        left_count: left.1,
        right: right.0.to_string(),
        right_count: right.1,
        holds: left.1 > right.1,
    };

    let mut checks: Vec<OrderingCheck> = groups.windows(2).map(|w| check(w[0].low, w[1].high)).collect();
    if let Some(best_hoo) = groups.iter().find(|g| g.label == "hoo").map(|g| g.high) {
        checks.extend(poo.iter().map(|(l, c)| check(best_hoo, (l, *c))));
    }
    if let Some((_, mc_mean)) = mc.first() {
        let bar = format!("{factor_over_mc} x mc");
        let threshold = factor_over_mc * mc_mean;
        for members in [&doo, &soo, &hoo, &poo] {
            checks.extend(members.iter().map(|(l, c)| check((l, *c), (&bar, threshold))));
        }
    }
    checks
}

/// Runs every configured variant over the seed list (deterministic variants
/// once) and evaluates the ordering checks.
pub fn compare_algorithms(cfg: &ExperimentConfig) -> Result<CompareReport, HarnessError> {
    cfg.validate()?;
    let objective = cfg.objective();
    let variants = compare_variants(cfg);
    let jobs: Vec<(usize, Variant, u64)> = variants
        .iter()
        .enumerate()
        .flat_map(|(k, &v)| {
            let seeds: &[u64] = if v.algorithm().is_deterministic() { &cfg.seeds[..1] } else { &cfg.seeds };
            seeds.iter().map(move |&s| (k, v, s))
        })
        .collect();
    let counts = jobs
        .par_iter()
        .map(|&(_, v, seed)| {
            let run = run_algorithm(v, cfg.budget, seed, &objective, cfg.crit.c_kappa)?;
            Ok(critical_count(&run.trace))
        })
        .collect::<Result<Vec<usize>, HarnessError>>()?;

    let results: Vec<VariantResult> = variants
        .iter()
        .enumerate()
        .map(|(k, &variant)| {
            let (seeds, counts): (Vec<u64>, Vec<usize>) =
                jobs.iter().zip(&counts).filter(|((j, _, _), _)| *j == k).map(|((_, _, s), &c)| (*s, c)).unzip();
            let (mean, sd) = mean_sd(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
            VariantResult { variant, seeds, counts, mean, sd }
        })
        .collect();

    let checks = ordering_checks(&results, cfg.compare.min_factor_over_mc);
    let has_mc = results.iter().any(|r| r.variant == Variant::Mc);
    let has_oo = results.iter().any(|r| r.variant != Variant::Mc);
    let asserted = has_mc && has_oo && cfg.budget >= cfg.compare.min_budget_for_ordering;
    let passed = !asserted || checks.iter().all(|c| c.holds);
    Ok(CompareReport { budget: cfg.budget, results, checks, asserted, passed })
}
