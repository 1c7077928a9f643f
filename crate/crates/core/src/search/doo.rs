//! Deterministic optimistic optimization with `delta(h) = nu1 * rho^h`.

use super::{check_open_unit, check_positive, EvalRecord, Evaluator, SearchError};
use crate::criticality::Objective;
use crate::partition::PartitionTree;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DooParams {
    pub nu1: f64,
    pub rho: f64,
}

impl Default for DooParams {
    fn default() -> Self {
        DooParams { nu1: 1.0, rho: 0.3 }
    }
}

impl DooParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        check_positive("nu1", self.nu1)?;
        check_open_unit("rho", self.rho)
    }

    pub fn delta(&self, depth: u32) -> f64 {
        self.nu1 * self.rho.powi(depth as i32)
    }
}

/// Evaluates both children of `leaf` at their centers. Returns `false` if the
/// budget ran out after the lower child.
pub(super) fn split_and_evaluate<O: Objective + ?Sized>(
    tree: &mut PartitionTree,
    leaf: usize,
    ev: &mut Evaluator<'_, O>,
) -> Result<bool, SearchError> {
    let children = tree.split(leaf).expect("caller picks splittable leaves");
    for child in children {
        if ev.budget.exhausted() {
            return Ok(false);
        }
        let node = tree.node(child);
        let (center, id) = (node.cell.center(), node.id);
        let value = ev.eval(center.clone(), Some(id), None)?;
        let node = tree.node_mut(child);
        node.value = Some(value);
        node.point = Some(center);
    }
    Ok(true)
}

pub(super) fn evaluate_root<O: Objective + ?Sized>(
    tree: &mut PartitionTree,
    ev: &mut Evaluator<'_, O>,
) -> Result<(), SearchError> {
    let root = tree.node(PartitionTree::ROOT);
    let (center, id) = (root.cell.center(), root.id);
    let value = ev.eval(center.clone(), Some(id), None)?;
    let root = tree.node_mut(PartitionTree::ROOT);
    root.value = Some(value);
    root.point = Some(center);
    Ok(())
}

pub fn doo_run<O: Objective + ?Sized>(
    n_max: usize,
    params: DooParams,
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
    while !ev.budget.exhausted() {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &k) in leaves.iter().enumerate() {
            if !tree.can_split(k) {
                continue;
            }
            let n = tree.node(k);
            let b = n.value.expect("every leaf is evaluated") + params.delta(n.id.depth);
            let better = match best {
                None => true,
                Some((bp, bb)) => {
                    let cur = tree.node(leaves[bp]).id;
                    b > bb || (b == bb && (n.id.depth, n.id.index) < (cur.depth, cur.index))
                }
            };
            if better {
                best = Some((pos, b));
            }
        }
        let Some((pos, _)) = best else { break };
        let leaf = leaves.swap_remove(pos);
        if !split_and_evaluate(&mut tree, leaf, &mut ev)? {
            break;
        }
        leaves.extend(tree.node(leaf).children.expect("just split"));
    }
    Ok(ev.trace)
}
