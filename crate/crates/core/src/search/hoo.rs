//! Hierarchical optimistic optimization.

use super::{check_open_unit, check_positive, rng_for, EvalRecord, Evaluator, SearchError};
use crate::criticality::{Objective, UnitPoint};
use crate::partition::{PartitionNode, PartitionTree};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HooParams {
    pub nu1: f64,
    pub rho: f64,
    pub seed: u64,
}

impl HooParams {
    pub fn validate(&self) -> Result<(), SearchError> {
        check_positive("nu1", self.nu1)?;
        check_open_unit("rho", self.rho)
    }
}

/// Upper confidence value of a node after `n_total` plays of the tree.
pub fn hoo_u_value(node: &PartitionNode, n_total: u64, p: &HooParams) -> f64 {
    match node.mean() {
        None => f64::INFINITY,
        Some(mean) => {
            let t = node.visits as f64;
            mean + (2.0 * (n_total as f64).ln() / t).sqrt() + p.nu1 * p.rho.powi(node.id.depth as i32)
        }
    }
}

/// B-value from the node's U-value and its children's B-values; a leaf
/// passes an empty slice.
pub fn hoo_b_value(u_value: f64, child_b: &[f64]) -> f64 {
    if child_b.is_empty() {
        return u_value;
    }
    u_value.min(child_b.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// One HOO instance. Drive it with [`Hoo::select`], [`Hoo::propose`] and
/// [`Hoo::update`], or let [`hoo_run`] do it.
#[derive(Debug, Clone)]
pub struct Hoo {
    params: HooParams,
    tree: PartitionTree,
    rng: ChaCha8Rng,
    rounds: u64,
}

impl Hoo {
    pub fn new(dim: usize, params: HooParams, stream: u64) -> Result<Self, SearchError> {
        params.validate()?;
        Ok(Hoo { params, tree: PartitionTree::new(dim), rng: rng_for(params.seed, stream), rounds: 0 })
    }

    pub fn params(&self) -> &HooParams {
        &self.params
    }

    pub fn tree(&self) -> &PartitionTree {
        &self.tree
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Descends from the root along the child of largest B-value, breaking
    /// ties uniformly at random. Returns the path, root first.
    pub fn select(&mut self) -> Vec<usize> {
        let mut path = vec![PartitionTree::ROOT];
        let mut idx = PartitionTree::ROOT;
        while let Some([a, b]) = self.tree.node(idx).children {
            let (ba, bb) = (self.tree.node(a).b_value, self.tree.node(b).b_value);
            idx = if ba > bb {
                a
            } else if bb > ba {
                b
            } else if self.rng.random_bool(0.5) {
                a
            } else {
                b
            };
            path.push(idx);
        }
        path
    }

    /// Every step of `path` goes to a child of maximal B-value.
    pub fn is_argmax_path(&self, path: &[usize]) -> bool {
        path.first() == Some(&PartitionTree::ROOT)
            && path.windows(2).all(|w| match self.tree.node(w[0]).children {
                Some([a, b]) => {
                    let best = self.tree.node(a).b_value.max(self.tree.node(b).b_value);
                    (w[1] == a || w[1] == b) && self.tree.node(w[1]).b_value == best
                }
                None => false,
            })
            && path.last().is_some_and(|&k| self.tree.node(k).is_leaf())
    }

    /// Uniform point in the selected leaf.
    pub fn propose(&mut self, leaf: usize) -> UnitPoint {
        self.tree.node(leaf).cell.sample_uniform(&mut self.rng)
    }

    /// Records the reward of the play along `path`, splits the played leaf and
    /// refreshes every U- and B-value.
    pub fn update(&mut self, path: &[usize], point: UnitPoint, reward: f64) {
        let leaf = *path.last().expect("path is never empty");
        {
            let node = self.tree.node_mut(leaf);
            node.point = Some(point);
            node.value = Some(reward);
        }
        if self.tree.can_split(leaf) {
            self.tree.split(leaf).expect("leaf checked splittable");
        }
        for &k in path {
            let node = self.tree.node_mut(k);
            node.visits += 1;
            node.reward_sum += reward;
        }
        self.rounds += 1;
        self.refresh();
    }

    fn refresh(&mut self) {
        let n = self.rounds;
        let p = self.params;
        for k in (0..self.tree.len()).rev() {
            let u = hoo_u_value(self.tree.node(k), n, &p);
            let b = match self.tree.node(k).children {
                Some([a, c]) => hoo_b_value(u, &[self.tree.node(a).b_value, self.tree.node(c).b_value]),
                None => hoo_b_value(u, &[]),
            };
            let node = self.tree.node_mut(k);
            node.u_value = u;
            node.b_value = b;
        }
    }

    /// Structural checks: `B <= U` everywhere and every internal node was
    /// played exactly once before its children took over.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (k, n) in self.tree.nodes().iter().enumerate() {
            if n.b_value > n.u_value {
                return Err(format!("node {} (#{k}): B {} > U {}", n.id, n.b_value, n.u_value));
            }
            if let Some([a, b]) = n.children {
                let below = self.tree.node(a).visits + self.tree.node(b).visits;
                if n.visits != below + 1 {
                    return Err(format!("node {}: T = {} but children sum to {below}", n.id, n.visits));
                }
            }
        }
        Ok(())
    }
}

/// Plain HOO; all `n_max` budget units are fresh evaluations.
pub fn hoo_run<O: Objective + ?Sized>(
    n_max: usize,
    params: HooParams,
    objective: &O,
    c_kappa: f64,
) -> Result<Vec<EvalRecord>, SearchError> {
    let mut hoo = Hoo::new(objective.dim(), params, 0)?;
    let mut ev = Evaluator::new(objective, n_max, c_kappa);
    while !ev.budget.exhausted() {
        let path = hoo.select();
        let leaf = *path.last().expect("path is never empty");
        let point = hoo.propose(leaf);
        let kappa = ev.eval(point.clone(), Some(hoo.tree().node(leaf).id), None)?;
        hoo.update(&path, point, kappa);
    }
    Ok(ev.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criticality::FnObjective;
    use crate::partition::{Cell, NodeId};

    fn node(depth: u32, visits: u64, mean: f64) -> PartitionNode {
        let mut tree = PartitionTree::new(2);
        let mut n = tree.node_mut(0).clone();
        n.id = NodeId { depth, index: 1 };
        n.cell = Cell::unit(2);
        n.visits = visits;
        n.reward_sum = mean * visits as f64;
        n
    }

    #[test]
    fn u_value_examples() {
        let p = HooParams { nu1: 1.0, rho: 0.5, seed: 0 };
        assert_eq!(hoo_u_value(&node(1, 1, 0.5), 1, &p), 1.0);
        assert_eq!(hoo_u_value(&node(1, 0, 0.0), 5, &p), f64::INFINITY);
        let q = HooParams { rho: 0.37, ..p };
        // Only the smoothness term remains: nu1 * rho^0 = 1.
        assert_eq!(hoo_u_value(&node(0, 4, 0.25), 1, &q), 1.25);
    }

    #[test]
    fn b_value_examples() {
        assert_eq!(hoo_b_value(0.9, &[]), 0.9);
        assert_eq!(hoo_b_value(f64::INFINITY, &[]), f64::INFINITY);
        assert_eq!(hoo_b_value(1.2, &[0.7, 1.5]), 1.2);
        assert_eq!(hoo_b_value(1.2, &[0.7, 0.9]), 0.9);
    }

    #[test]
    fn first_round_grows_three_nodes() {
        let f = FnObjective::new(2, |u: &[f64]| u[0]);
        let mut hoo = Hoo::new(2, HooParams { nu1: 1.0, rho: 0.5, seed: 4 }, 0).unwrap();
        let path = hoo.select();
        assert_eq!(path, vec![0]);
        let x = hoo.propose(0);
        let r = f.evaluate(&x).unwrap();
        hoo.update(&path, x, r);
        assert_eq!(hoo.tree().len(), 3);
        assert_eq!(hoo.tree().node(0).visits, 1);
        hoo.check_invariants().unwrap();
    }

    #[test]
    fn invariants_hold_every_round() {
        let f = FnObjective::new(2, |u: &[f64]| 1.0 - (u[0] - 0.7).abs() - (u[1] - 0.2).abs());
        let mut hoo = Hoo::new(2, HooParams { nu1: 1.0, rho: 0.6, seed: 8 }, 0).unwrap();
        for _ in 0..300 {
            let path = hoo.select();
            assert!(hoo.is_argmax_path(&path));
            let x = hoo.propose(*path.last().unwrap());
            assert!(hoo.tree().node(*path.last().unwrap()).cell.contains(&x.0));
            let r = f.evaluate(&x).unwrap();
            hoo.update(&path, x, r);
            hoo.check_invariants().unwrap();
        }
    }

    #[test]
    fn run_is_reproducible_and_concentrates() {
        let f = FnObjective::new(2, |u: &[f64]| 1.0 - (u[0] - 0.7).abs() - (u[1] - 0.2).abs());
        let p = HooParams { nu1: 1.0, rho: 0.5, seed: 2 };
        let a = hoo_run(800, p, &f, 0.9).unwrap();
        assert_eq!(a, hoo_run(800, p, &f, 0.9).unwrap());
        assert_eq!(a.len(), 800);
        let late = a[400..].iter().filter(|r| r.critical).count();
        // The 0.9 level set covers 2% of the square; uniform sampling would
        // land about 8 of these 400 points in it.
        assert!(late > 50, "{late}");
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Hoo::new(2, HooParams { nu1: 0.0, rho: 0.5, seed: 0 }, 0).is_err());
        assert!(Hoo::new(2, HooParams { nu1: 1.0, rho: 1.0, seed: 0 }, 0).is_err());
    }
}
