//! Best-bound branch and bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use super::branching::{select_branching_variable, BranchContext, ChildOutcome, Pseudocosts};
use super::lp::{solve_lp, LpStatus};
use super::{MiniMip, MipError};
use crate::gains::DEFAULT_EPSILON;
use crate::lookahead::{FixedLookaheadConfig, ProbLookaheadConfig, StopReason};

pub(crate) const INTEGRALITY_TOL: f64 = 1e-6;
const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveMode {
    /// Strong branching stopped by the fixed lookahead and the iteration budget only.
    Fixed,
    /// Additionally stopped by the probabilistic expected-size test.
    Dynamic,
}

impl SolveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMode::Fixed => "fixed",
            SolveMode::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(SolveMode::Fixed),
            "dynamic" => Ok(SolveMode::Dynamic),
            other => Err(format!("unknown mode `{other}` (expected fixed or dynamic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub mode: SolveMode,
    pub fixed: FixedLookaheadConfig,
    pub prob: ProbLookaheadConfig,
    /// Branchings per direction before a variable's pseudocosts are trusted.
    pub reliability: u32,
    /// Maximum unreliable candidates strong-branched per node.
    pub max_candidates: usize,
    /// Simplex iteration limit of each strong-branching child LP.
    pub sb_iteration_limit: u64,
    /// Simplex iteration limit of each node LP.
    pub node_iteration_limit: u64,
    pub node_limit: u64,
    /// Shift of the geometric mean of the two child gains.
    pub epsilon: f64,
    /// Known objective value (problem sense): only solutions at least this good are sought.
    pub cutoff: Option<f64>,
    /// Keep the per-node decision and pseudocost logs in the result.
    pub record_log: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            mode: SolveMode::Fixed,
            fixed: FixedLookaheadConfig::default(),
            prob: ProbLookaheadConfig::default(),
            reliability: 2,
            max_candidates: 100,
            sb_iteration_limit: 500,
            node_iteration_limit: 100_000,
            node_limit: 1_000_000,
            epsilon: DEFAULT_EPSILON,
            cutoff: None,
            record_log: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), MipError> {
        self.prob.validate().map_err(MipError::Invalid)?;
        if !(self.fixed.uninit_fraction >= 0.0) {
            return Err(MipError::Invalid("uninit_fraction must be nonnegative".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(MipError::Invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.cutoff.is_some_and(|c| !c.is_finite()) {
            return Err(MipError::Invalid("cutoff must be finite".into()));
        }
        if self.max_candidates == 0 || self.sb_iteration_limit == 0 || self.node_limit == 0 {
            return Err(MipError::Invalid(
                "candidate, iteration and node limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The root relaxation is unbounded.
    Unbounded,
    /// Stopped by the node limit; the bound is still valid.
    Limit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Nodes whose LP relaxation was solved.
    pub nodes: u64,
    pub sb_lps: u64,
    pub sb_iterations: u64,
    pub node_lp_iterations: u64,
    /// Nodes at which strong branching ran.
    pub sb_calls: u64,
    pub lookahead_stops: u64,
    pub budget_stops: u64,
    pub early_stops: u64,
    pub max_depth: u64,
}

impl SolveStats {
    /// Simplex iterations of every LP solved; a machine-independent time proxy.
    pub fn total_iterations(&self) -> u64 {
        self.sb_iterations + self.node_lp_iterations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecision {
    pub node: u64,
    pub var: usize,
    pub sb_candidates: usize,
    pub stop_reason: Option<StopReason>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudocostUpdate {
    pub var: usize,
    pub up: bool,
    pub per_unit_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Best solution found, in the problem's own objective sense.
    pub objective: Option<f64>,
    pub solution: Option<Vec<f64>>,
    /// Dual bound in the problem's own objective sense; infinite when nothing is left open
    /// and no solution was found.
    pub bound: f64,
    pub stats: SolveStats,
    pub decisions: Vec<NodeDecision>,
    pub pseudocost_log: Vec<PseudocostUpdate>,
}

struct Node {
    id: u64,
    depth: u64,
    bound: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Branching that created the node: variable, up side, distance moved, parent LP value.
    origin: Option<(usize, bool, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: lowest bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

fn fractional(x: f64) -> bool {
    (x - x.round()).abs() > INTEGRALITY_TOL
}

fn prunable(bound: f64, incumbent: f64) -> bool {
    bound >= incumbent - PRUNE_TOL * (1.0 + incumbent.abs())
}

/// Solves `mip` to optimality (or the node limit) by best-bound branch and bound.
pub fn solve(mip: &MiniMip, config: &SolveConfig) -> Result<SolveResult, MipError> {
    mip.validate()?;
    config.validate()?;
    let n = mip.num_vars();
    let mut stats = SolveStats::default();
    let mut pseudocosts = Pseudocosts::new(n);
    let mut decisions = Vec::new();
    let mut pc_log_raw: Vec<(usize, bool, f64)> = Vec::new();
    // a cutoff equal to the optimum must still admit the optimal solution
    let mut incumbent = config.cutoff.map_or(f64::INFINITY, |c| {
        let v = mip.from_user_objective(c);
        v + 1e-6 * (1.0 + v.abs())
    });
    let mut best_x: Option<Vec<f64>> = None;
    let mut open = BinaryHeap::new();
    let mut next_id = 0u64;
    open.push(Node {
        id: 0,
        depth: 0,
        bound: f64::NEG_INFINITY,
        lower: mip.lower.clone(),
        upper: mip.upper.clone(),
        origin: None,
    });
    next_id += 1;
    let mut status = SolveStatus::Optimal;

    while let Some(node) = open.pop() {
        if prunable(node.bound, incumbent) {
            continue;
        }
        if stats.nodes >= config.node_limit {
            open.push(node);
            status = SolveStatus::Limit;
            break;
        }
        stats.nodes += 1;
        stats.max_depth = stats.max_depth.max(node.depth);
        let lp = solve_lp(mip, &node.lower, &node.upper, config.node_iteration_limit)?;
        stats.node_lp_iterations += lp.iterations;
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded if node.id == 0 => {
                return Ok(SolveResult {
                    status: SolveStatus::Unbounded,
                    objective: None,
                    solution: None,
                    bound: mip.to_user_objective(f64::NEG_INFINITY),
                    stats,
                    decisions,
                    pseudocost_log: Vec::new(),
                });
            }
            LpStatus::Unbounded => {
                return Err(MipError::Numerical("node LP unbounded below a bounded root".into()))
            }
            LpStatus::IterationLimit => {
                return Err(MipError::Numerical(format!(
                    "node LP hit the iteration limit of {}",
                    config.node_iteration_limit
                )))
            }
        }
        if let Some((var, up, dist, parent)) = node.origin {
            let per_unit = (lp.objective - parent).max(0.0) / dist;
            pseudocosts.update(var, up, per_unit);
            if config.record_log {
                pc_log_raw.push((var, up, per_unit));
            }
        }
        if prunable(lp.objective, incumbent) {
            continue;
        }
        let candidates: Vec<usize> = (0..n)
            .filter(|&j| mip.integer[j] && fractional(lp.x[j]))
            .collect();
        if candidates.is_empty() {
            incumbent = lp.objective;
            best_x = Some(lp.x.clone());
            continue;
        }

        let mut ctx = BranchContext {
            mip,
            lower: &node.lower,
            upper: &node.upper,
            x: &lp.x,
            objective: lp.objective,
            incumbent,
            pseudocosts: &mut pseudocosts,
            config,
            sb_iterations: stats.sb_iterations,
            node_iterations: stats.node_lp_iterations,
            pc_log: config.record_log.then_some(&mut pc_log_raw),
        };
        let choice = select_branching_variable(&mut ctx, &candidates)?;
        if let Some((obj, x)) = &choice.incumbent {
            if *obj < incumbent {
                incumbent = *obj;
                best_x = Some(x.clone());
            }
        }
        stats.sb_lps += choice.sb_lps;
        stats.sb_iterations += choice.sb_iterations;
        if choice.sb_candidates > 0 {
            stats.sb_calls += 1;
        }
        match choice.stop_reason {
            Some(StopReason::LookaheadExhausted) => stats.lookahead_stops += 1,
            Some(StopReason::BudgetExhausted) => stats.budget_stops += 1,
            Some(StopReason::NoExpectedImprovement) => stats.early_stops += 1,
            _ => {}
        }
        if config.record_log {
            decisions.push(NodeDecision {
                node: node.id,
                var: choice.var,
                sb_candidates: choice.sb_candidates,
                stop_reason: choice.stop_reason,
            });
        }
        if choice.prune_node {
            continue;
        }

        let j = choice.var;
        let value = choice.value;
        let frac = value - value.floor();
        for (up, child) in [(false, choice.down), (true, choice.up)] {
            let bound = match child {
                Some(ChildOutcome::Infeasible | ChildOutcome::Cutoff) => continue,
                Some(ChildOutcome::Bound(obj)) => obj.max(lp.objective),
                Some(ChildOutcome::Limit) | None => lp.objective,
            };
            if prunable(bound, incumbent) {
                continue;
            }
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            if up {
                lower[j] = value.ceil();
            } else {
                upper[j] = value.floor();
            }
            open.push(Node {
                id: next_id,
                depth: node.depth + 1,
                bound,
                lower,
                upper,
                origin: Some((j, up, if up { 1.0 - frac } else { frac }, lp.objective)),
            });
            next_id += 1;
        }
    }

    let open_bound = open
        .iter()
        .map(|nd| nd.bound)
        .fold(f64::INFINITY, f64::min);
    let bound = if best_x.is_some() {
        open_bound.min(incumbent)
    } else {
        open_bound
    };
    if status == SolveStatus::Optimal && best_x.is_none() {
        status = SolveStatus::Infeasible;
    }
    Ok(SolveResult {
        status,
        objective: best_x.as_ref().map(|_| mip.to_user_objective(incumbent)),
        solution: best_x,
        bound: mip.to_user_objective(bound),
        stats,
        decisions,
        pseudocost_log: pc_log_raw
            .into_iter()
            .map(|(var, up, per_unit_gain)| PseudocostUpdate {
                var,
                up,
                per_unit_gain,
            })
            .collect(),
    })
}
