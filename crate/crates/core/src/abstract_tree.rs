//! The abstract branch-and-bound model.
//!
//! A variable is a pair of fixed left/right dual gains. A node's dual gap is the sum of
//! the side gains along its root path, and a tree closes a target gap `G` once every
//! leaf has reached it. Single-variable (SVB) trees are the unit of tree size; Pandora
//! instances hide each variable's gain until it is first branched on.

use thiserror::Error;

use crate::gains::{is_zero_gain, GeomGain};

/// Largest depth whose perfect tree size `2^(d+1) - 1` fits a signed 64-bit count.
pub const MAX_DEPTH: u64 = 62;

/// Node limit for [`build_svb_tree`].
pub const MAX_ENUMERATED_NODES: u64 = 10_000_000;

const MAX_DP_CELLS: u64 = 200_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("tree depth {0} exceeds the enumerable limit of {MAX_DEPTH}")]
    DepthCapacity(u64),
    #[error("tree would exceed {MAX_ENUMERATED_NODES} nodes")]
    NodeCapacity,
    #[error("gap must be positive and finite, got {0}")]
    InvalidGap(f64),
    #[error("both gains must be positive, got ({0}, {1})")]
    NonPositiveGain(f64, f64),
    #[error("all candidates have been revealed")]
    Exhausted,
    #[error("reveal order is not a permutation of the pool")]
    InvalidOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractVariable {
    pub id: String,
    pub left_gain: f64,
    pub right_gain: f64,
}

impl AbstractVariable {
    pub fn new(id: impl Into<String>, left_gain: f64, right_gain: f64) -> Self {
        Self {
            id: id.into(),
            left_gain,
            right_gain,
        }
    }
}

/// Gap closed at a child of a node with gap `parent_gap`.
pub fn node_gap(parent_gap: f64, variable: &AbstractVariable, side: Side) -> f64 {
    match side {
        Side::Left => parent_gap + variable.left_gain,
        Side::Right => parent_gap + variable.right_gain,
    }
}

/// Depth of the SVB tree of a symmetric variable. `Unbounded` sorts after every finite depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Depth {
    Finite(u64),
    Unbounded,
}

impl Depth {
    pub fn finite(self) -> Option<u64> {
        match self {
            Depth::Finite(d) => Some(d),
            Depth::Unbounded => None,
        }
    }
}

impl std::fmt::Display for Depth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Depth::Finite(d) => write!(f, "{d}"),
            Depth::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// `ceil(gap / gain)`, or `Unbounded` for a zero gain.
pub fn svb_depth(gap: f64, gain: GeomGain) -> Depth {
    depth_for(gap, gain.value())
}

pub(crate) fn depth_for(gap: f64, gain: f64) -> Depth {
    if is_zero_gain(gain) {
        return Depth::Unbounded;
    }
    let ratio = (gap / gain).ceil();
    if ratio.is_finite() {
        // saturating cast; anything past MAX_DEPTH is rejected by svb_tree_size anyway
        Depth::Finite(ratio.max(0.0) as u64)
    } else {
        Depth::Unbounded
    }
}

/// Size of a perfect binary tree of the given depth: `2^(depth+1) - 1`.
pub fn svb_tree_size(depth: u64) -> Result<u64, TreeError> {
    if depth > MAX_DEPTH {
        return Err(TreeError::DepthCapacity(depth));
    }
    Ok((1u64 << (depth + 1)) - 1)
}

/// Exact node count of the smallest tree closing `gap` that branches on `variable` everywhere.
///
/// Counts `T(γ) = 1` if `γ ≥ G`, else `1 + T(γ + l) + T(γ + r)`. A reachable gap is
/// `a·l + b·r`, so the recursion is tabulated over `(a, b)` one `b`-row at a time.
pub fn build_svb_tree(gap: f64, variable: &AbstractVariable) -> Result<u64, TreeError> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(TreeError::InvalidGap(gap));
    }
    let (l, r) = (variable.left_gain, variable.right_gain);
    if !(l > 0.0 && r > 0.0 && l.is_finite() && r.is_finite()) {
        return Err(TreeError::NonPositiveGain(l, r));
    }

    let steps_to_close = |g: f64| -> u64 {
        let mut k = (gap / g).ceil().max(0.0) as u64;
        while (k as f64) * g < gap {
            k += 1;
        }
        k
    };
    let a_max = steps_to_close(l);
    let b_max = steps_to_close(r);
    if (a_max + 1).saturating_mul(b_max + 1) > MAX_DP_CELLS {
        return Err(TreeError::NodeCapacity);
    }

    let closed = |a: u64, b: u64| (a as f64) * l + (b as f64) * r >= gap;
    let width = a_max as usize + 2;
    // row for b + 1; for b = b_max every cell is a leaf
    let mut above = vec![1u64; width];
    let mut row = vec![1u64; width];
    for b in (0..=b_max).rev() {
        row[width - 1] = 1;
        for a in (0..=a_max).rev() {
            let ai = a as usize;
            row[ai] = if closed(a, b) {
                1
            } else {
                let t = 1 + row[ai + 1] + above[ai];
                if t > MAX_ENUMERATED_NODES {
                    return Err(TreeError::NodeCapacity);
                }
                t
            };
        }
        std::mem::swap(&mut above, &mut row);
    }
    Ok(above[0])
}

/// Nodes used by a Pandora run: the final tree plus two nodes per strong-branching restart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeCost {
    pub final_tree_nodes: u64,
    pub sb_nodes: u64,
    pub total: u64,
}

impl TreeCost {
    pub fn new(final_tree_nodes: u64, reveals: u64) -> Self {
        let sb_nodes = 2 * reveals;
        Self {
            final_tree_nodes,
            sb_nodes,
            total: final_tree_nodes + sb_nodes,
        }
    }

    /// Cost of stopping after `reveals` restarts with the best depth `depth`.
    pub fn at_depth(depth: u64, reveals: u64) -> Result<Self, TreeError> {
        Ok(Self::new(svb_tree_size(depth)?, reveals))
    }
}

/// Target gap plus a pool of hidden geometric-mean gains, sampled without replacement.
#[derive(Debug, Clone)]
pub struct PvbInstance {
    gap: f64,
    pool: Vec<GeomGain>,
    revealed_count: usize,
}

impl PvbInstance {
    pub fn new(gap: f64, pool: Vec<GeomGain>) -> Result<Self, TreeError> {
        if !(gap.is_finite() && gap > 0.0) {
            return Err(TreeError::InvalidGap(gap));
        }
        Ok(Self {
            gap,
            pool,
            revealed_count: 0,
        })
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed_count
    }

    pub fn remaining(&self) -> usize {
        self.pool.len() - self.revealed_count
    }

    /// Reveals `pool[order[revealed_count]]`. Each reveal costs one branching and a restart.
    pub fn reveal_next(&mut self, order: &[usize]) -> Result<GeomGain, TreeError> {
        if self.revealed_count >= self.pool.len() {
            return Err(TreeError::Exhausted);
        }
        if order.len() != self.pool.len() {
            return Err(TreeError::InvalidOrder);
        }
        let idx = order[self.revealed_count];
        let gain = *self.pool.get(idx).ok_or(TreeError::InvalidOrder)?;
        self.revealed_count += 1;
        Ok(gain)
    }

    /// Cost of stopping now with best depth `depth`.
    pub fn cost_if_stop(&self, depth: u64) -> Result<TreeCost, TreeError> {
        TreeCost::at_depth(depth, self.revealed_count as u64)
    }

    /// Best depth over the whole pool; what an omniscient strategy would build.
    pub fn best_depth(&self) -> Depth {
        self.pool
            .iter()
            .map(|&g| svb_depth(self.gap, g))
            .min()
            .unwrap_or(Depth::Unbounded)
    }
}
