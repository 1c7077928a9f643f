//! Hierarchical binary partition of the unit cube.
//!
//! Node `(h, i)` lives at depth `h` with index `i` in `1..=2^h`; its children
//! are `(h+1, 2i-1)` (lower half) and `(h+1, 2i)` (upper half). A split
//! bisects the longest side of the cell, the smallest axis winning ties.
//!
//! Cells use half-open containment `[lo, hi)` per axis, closed at the upper
//! face of the unit cube, so the leaves tile `[0, 1]^d` without overlap.

use crate::criticality::UnitPoint;
use rand::Rng;
use std::fmt;
use std::io::Write;
use thiserror::Error;

/// Deepest node the index type can address.
pub const MAX_DEPTH: u32 = 126;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("node {0} is already split")]
    NotALeaf(NodeId),
    #[error("node {0} is at the maximum depth")]
    TooDeep(NodeId),
    #[error("node {0} is too small to bisect in floating point")]
    Degenerate(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub depth: u32,
    pub index: u128,
}

impl NodeId {
    pub const ROOT: NodeId = NodeId { depth: 0, index: 1 };

    pub fn children(self) -> (NodeId, NodeId) {
        let depth = self.depth + 1;
        (NodeId { depth, index: 2 * self.index - 1 }, NodeId { depth, index: 2 * self.index })
    }

    pub fn parent(self) -> Option<NodeId> {
        (self.depth > 0).then(|| NodeId { depth: self.depth - 1, index: self.index.div_ceil(2) })
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.depth, self.index)
    }
}

/// Axis-aligned box inside the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cell {
    pub fn unit(dim: usize) -> Self {
        Cell { lo: vec![0.0; dim], hi: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn center(&self) -> UnitPoint {
        UnitPoint(self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect())
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn max_side(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).fold(0.0, f64::max)
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k).powi(2)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&lo, &hi))| lo <= v && (v < hi || (v == hi && hi == 1.0)))
    }

    /// Axis that a split bisects.
    pub fn split_axis(&self) -> usize {
        let mut best = 0;
        for k in 1..self.dim() {
            if self.side(k) > self.side(best) {
                best = k;
            }
        }
        best
    }

    /// Lower and upper half, or `None` when the midpoint is not representable.
    pub fn bisect(&self) -> Option<(Cell, Cell)> {
        let k = self.split_axis();
        let mid = 0.5 * (self.lo[k] + self.hi[k]);
        if !(self.lo[k] < mid && mid < self.hi[k]) {
            return None;
        }
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.hi[k] = mid;
        upper.lo[k] = mid;
        Some((lower, upper))
    }

    /// Uniform draw from the cell interior `[lo, hi)`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitPoint {
        UnitPoint(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(&lo, &hi)| rng.random_range(lo..hi))
                .collect(),
        )
    }
}

/// One cell of the tree together with the search statistics of every
/// algorithm. Fields an algorithm does not use stay at their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionNode {
    pub id: NodeId,
    pub cell: Cell,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    /// Number of plays routed through this node.
    pub visits: u64,
    pub reward_sum: f64,
    /// Objective value at `point`.
    pub value: Option<f64>,
    pub point: Option<UnitPoint>,
    pub u_value: f64,
    pub b_value: f64,
}

impl PartitionNode {
    fn new(id: NodeId, cell: Cell, parent: Option<usize>) -> Self {
        PartitionNode {
            id,
            cell,
            parent,
            children: None,
            visits: 0,
            reward_sum: 0.0,
            value: None,
            point: None,
            u_value: f64::INFINITY,
            b_value: f64::INFINITY,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn mean(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.reward_sum / self.visits as f64)
    }
}

/// Arena of nodes. Index 0 is the root and children always sit at larger
/// indices than their parent, so a reverse scan visits children first.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    nodes: Vec<PartitionNode>,
    depth: u32,
}

impl PartitionTree {
    pub fn new(dim: usize) -> Self {
        PartitionTree { nodes: vec![PartitionNode::new(NodeId::ROOT, Cell::unit(dim), None)], depth: 0 }
    }

    pub const ROOT: usize = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Depth of the deepest node.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn node(&self, idx: usize) -> &PartitionNode {
        &self.nodes[idx]
    }

    pub fn node_mut(&mut self, idx: usize) -> &mut PartitionNode {
        &mut self.nodes[idx]
    }

    pub fn nodes(&self) -> &[PartitionNode] {
        &self.nodes
    }

    pub fn can_split(&self, idx: usize) -> bool {
        let n = &self.nodes[idx];
        n.is_leaf() && n.id.depth < MAX_DEPTH && n.cell.bisect().is_some()
    }

    /// Splits a leaf; returns the arena indices of the lower and upper child.
    pub fn split(&mut self, idx: usize) -> Result<[usize; 2], PartitionError> {
        let node = &self.nodes[idx];
        if !node.is_leaf() {
            return Err(PartitionError::NotALeaf(node.id));
        }
        if node.id.depth >= MAX_DEPTH {
            return Err(PartitionError::TooDeep(node.id));
        }
        let (lower, upper) = node.cell.bisect().ok_or(PartitionError::Degenerate(node.id))?;
        let (id_a, id_b) = node.id.children();
        let a = self.nodes.len();
        self.nodes.push(PartitionNode::new(id_a, lower, Some(idx)));
        self.nodes.push(PartitionNode::new(id_b, upper, Some(idx)));
        self.nodes[idx].children = Some([a, a + 1]);
        self.depth = self.depth.max(id_a.depth);
        Ok([a, a + 1])
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter(|(_, n)| n.is_leaf()).map(|(k, _)| k)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    /// Leaf containing `x`, found by descending from the root.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut idx = Self::ROOT;
        if !self.nodes[idx].cell.contains(x) {
            return None;
        }
        while let Some([a, b]) = self.nodes[idx].children {
            idx = if self.nodes[a].cell.contains(x) { a } else { b };
        }
        Some(idx)
    }

    /// Path of arena indices from the root down to `idx`.
    pub fn path_to(&self, idx: usize) -> Vec<usize> {
        let mut path = vec![idx];
        let mut cur = idx;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn max_leaf_diameter(&self) -> f64 {
        self.leaves().map(|k| self.nodes[k].cell.diameter()).fold(0.0, f64::max)
    }

    /// Debug dump, one line per node: `h i lo.. hi.. T mean value`.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
        for n in &self.nodes {
            write!(out, "{} {}", n.id.depth, n.id.index)?;
            for v in n.cell.lo.iter().chain(&n.cell.hi) {
                write!(out, " {v:.6}")?;
            }
            writeln!(out, " {} {} {}", n.visits, opt(n.mean()), opt(n.value))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn root_and_first_splits() {
        let mut t = PartitionTree::new(2);
        let root = t.node(0);
        assert_eq!(root.id, NodeId { depth: 0, index: 1 });
        assert_eq!(root.cell, Cell::unit(2));
        let [a, b] = t.split(0).unwrap();
        assert_eq!(t.node(a).cell, Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 1.0] });
        assert_eq!(t.node(b).cell, Cell { lo: vec![0.5, 0.0], hi: vec![1.0, 1.0] });
        assert_eq!(t.node(a).id, NodeId { depth: 1, index: 1 });
        assert_eq!(t.node(b).id, NodeId { depth: 1, index: 2 });
        let [c, d] = t.split(a).unwrap();
        assert_eq!(t.node(c).cell, Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 0.5] });
        assert_eq!(t.node(d).cell, Cell { lo: vec![0.0, 0.5], hi: vec![0.5, 1.0] });
        assert_eq!(t.split(0), Err(PartitionError::NotALeaf(NodeId::ROOT)));
    }

    #[test]
    fn centers() {
        assert_eq!(Cell::unit(2).center().0, vec![0.5, 0.5]);
        assert_eq!(Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 1.0] }.center().0, vec![0.25, 0.5]);
        assert_eq!(Cell { lo: vec![0.5, 0.5], hi: vec![0.75, 1.0] }.center().0, vec![0.625, 0.75]);
    }

    #[test]
    fn chain_side_length_halves_every_two_levels() {
        // Brute force: walk a chain of random children down to depth 10.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = PartitionTree::new(2);
        let mut idx = 0;
        for h in 1..=10u32 {
            let kids = t.split(idx).unwrap();
            idx = kids[rng.random_range(0..2)];
            // Depth 1 still has a full-length side, so the exponent is
            // floor(h/2), not ceil(h/2).
            let expected = 0.5f64.powi((h / 2) as i32);
            assert_eq!(t.node(idx).cell.max_side(), expected, "depth {h}");
        }
    }

    #[test]
    fn sample_mean_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cell = Cell::unit(2);
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let p = cell.sample_uniform(&mut rng);
            assert!(cell.contains(&p.0));
            sum[0] += p.0[0];
            sum[1] += p.0[1];
        }
        assert!((sum[0] / n as f64 - 0.5).abs() < 0.01);
        assert!((sum[1] / n as f64 - 0.5).abs() < 0.01);

        let draw = |seed| Cell::unit(2).sample_uniform(&mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn containment_is_half_open() {
        let lower = Cell { lo: vec![0.0, 0.0], hi: vec![0.5, 1.0] };
        let upper = Cell { lo: vec![0.5, 0.0], hi: vec![1.0, 1.0] };
        assert!(!lower.contains(&[0.5, 0.2]));
        assert!(upper.contains(&[0.5, 0.2]));
        assert!(upper.contains(&[1.0, 1.0]));
        assert!(lower.contains(&[0.0, 1.0]));
    }

    #[test]
    fn depth_cap_and_degenerate_cells() {
        let mut t = PartitionTree::new(1);
        let mut idx = 0;
        let err = loop {
            match t.split(idx) {
                Ok([a, _]) => idx = a,
                Err(e) => break e,
            }
        };
        // One axis exhausts the f64 mantissa long before the index overflows.
        assert!(matches!(err, PartitionError::Degenerate(_) | PartitionError::TooDeep(_)));
        assert!(!t.can_split(idx));
    }

    #[test]
    fn dump_format() {
        let mut t = PartitionTree::new(2);
        t.split(0).unwrap();
        t.node_mut(1).visits = 2;
        t.node_mut(1).reward_sum = 1.0;
        t.node_mut(1).value = Some(0.25);
        let mut buf = Vec::new();
        t.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "0 1 0.000000 0.000000 1.000000 1.000000 0 - -");
        assert_eq!(lines[1], "1 1 0.000000 0.000000 0.500000 1.000000 2 0.500000 0.250000");
    }

    proptest! {
        #[test]
        fn leaves_tile_and_indices_agree(picks in prop::collection::vec(any::<u32>(), 0..60), probes in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 50)) {
            let mut t = PartitionTree::new(2);
            let mut diam = t.max_leaf_diameter();
            for p in picks {
                let leaves: Vec<_> = t.leaves().collect();
                let leaf = leaves[p as usize % leaves.len()];
                let [a, b] = t.split(leaf).unwrap();
                let parent = t.node(leaf).id;
                prop_assert_eq!(t.node(a).id.parent(), Some(parent));
                prop_assert_eq!(t.node(b).id.parent(), Some(parent));
                let d = t.max_leaf_diameter();
                prop_assert!(d <= diam);
                diam = d;
            }
            prop_assert_eq!(t.leaf_count(), t.len().div_ceil(2));
            for (x, y) in probes {
                let hits: Vec<_> = t.leaves().filter(|&k| t.node(k).cell.contains(&[x, y])).collect();
                prop_assert_eq!(hits.len(), 1);
                prop_assert_eq!(t.locate(&[x, y]), Some(hits[0]));
            }
        }
    }
}
