//! Simultaneous optimistic optimization with depth cap `h_max(t) = t^eps`.

use super::doo::{evaluate_root, split_and_evaluate};
use super::{EvalRecord, Evaluator, SearchError};
use crate::criticality::Objective;
use crate::partition::PartitionTree;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SooParams {
    pub epsilon: f64,
}

impl Default for SooParams {
    fn default() -> Self {
        SooParams { epsilon: 0.6 }
    }
}

impl SooParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.epsilon > 0.0 && self.epsilon <= 1.0 {
            Ok(())
        } else {
            Err(SearchError::InvalidParam {
                field: "epsilon",
                reason: format!("must lie in (0, 1], got {}", self.epsilon),
            })
        }
    }
}

/// Depth cap after `t` splits.
pub fn soo_h_max(t: u64, epsilon: f64) -> u32 {
    (t as f64).powf(epsilon).floor() as u32
}

/// Sweeps depths `0..=min(depth, h_max(t))`, splitting the best leaf of a
/// depth whenever it is at least as good as every leaf split earlier in the
/// sweep. `t` counts splits and `h_max` is fixed at the start of each sweep.
///
/// When no splittable leaf lies within the cap (the tree can outgrow a slowly
/// rising cap), the sweep is extended down to the shallowest splittable leaf.
pub fn soo_run<O: Objective + ?Sized>(
    n_max: usize,
    params: SooParams,
    objective: &O,
    c_kappa: f64,
) -> Result<Vec<EvalRecord>, SearchError> {
    params.validate()?;
    let mut tree = PartitionTree::new(objective.dim());
    let mut ev = Evaluator::new(objective, n_max, c_kappa);
    if n_max == 0 {
        return Ok(ev.trace);
    }
    evaluate_root(&mut tree, &mut ev)?;
    let mut leaves = vec![PartitionTree::ROOT];
    let mut t = 0u64;

    'sweeps: while !ev.budget.exhausted() {
        let mut cap = soo_h_max(t, params.epsilon).min(tree.depth());
        let shallowest = leaves
            .iter()
            .filter(|&&k| tree.can_split(k))
            .map(|&k| tree.node(k).id.depth)
            .min();
        let Some(shallowest) = shallowest else { break };
        cap = cap.max(shallowest);

        let mut v_best = f64::NEG_INFINITY;
        for h in 0..=cap {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &k) in leaves.iter().enumerate() {
                let n = tree.node(k);
                if n.id.depth != h || !tree.can_split(k) {
                    continue;
                }
                let v = n.value.expect("every leaf is evaluated");
                let better = match best {
                    None => true,
                    Some((bp, bv)) => v > bv || (v == bv && n.id.index < tree.node(leaves[bp]).id.index),
                };
                if better {
                    best = Some((pos, v));
                }
            }
            let Some((pos, v)) = best else { continue };
            if v < v_best {
                continue;
            }
            let leaf = leaves.swap_remove(pos);
            let complete = split_and_evaluate(&mut tree, leaf, &mut ev)?;
            v_best = v;
            t += 1;
            if !complete {
                break 'sweeps;
            }
            leaves.extend(tree.node(leaf).children.expect("just split"));
            if ev.budget.exhausted() {
                break 'sweeps;
            }
        }
    }
    Ok(ev.trace)
}
