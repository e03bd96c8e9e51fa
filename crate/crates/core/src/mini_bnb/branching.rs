//! Reliability pseudocost branching with a stoppable strong-branching scan.

use super::lp::{solve_lp, LpStatus};
use super::solver::{SolveConfig, SolveMode, INTEGRALITY_TOL};
use super::{MiniMip, MipError};
use crate::gains::{shifted_geomean, GainPair};
use crate::lookahead::{
    iteration_budget, should_continue, Decision, FixedLookaheadConfig, SbSession, StopReason,
};

/// Per-variable running sums of per-unit dual gains, by direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Pseudocosts {
    down_sum: Vec<f64>,
    down_count: Vec<u32>,
    up_sum: Vec<f64>,
    up_count: Vec<u32>,
}

impl Pseudocosts {
    pub fn new(n: usize) -> Self {
        Self {
            down_sum: vec![0.0; n],
            down_count: vec![0; n],
            up_sum: vec![0.0; n],
            up_count: vec![0; n],
        }
    }

    pub fn update(&mut self, j: usize, up: bool, per_unit_gain: f64) {
        if up {
            self.up_sum[j] += per_unit_gain;
            self.up_count[j] += 1;
        } else {
            self.down_sum[j] += per_unit_gain;
            self.down_count[j] += 1;
        }
    }

    pub fn counts(&self, j: usize) -> (u32, u32) {
        (self.down_count[j], self.up_count[j])
    }

    pub fn mean(&self, j: usize, up: bool) -> Option<f64> {
        let (sum, count) = if up {
            (self.up_sum[j], self.up_count[j])
        } else {
            (self.down_sum[j], self.down_count[j])
        };
        (count > 0).then(|| sum / count as f64)
    }

    pub fn is_reliable(&self, j: usize, threshold: u32) -> bool {
        self.down_count[j].min(self.up_count[j]) >= threshold
    }

    /// No recorded gain in at least one direction.
    pub fn is_uninitialized(&self, j: usize) -> bool {
        self.down_count[j] == 0 || self.up_count[j] == 0
    }

    /// Mean over the variables with a recorded gain in that direction; 1 if there are none.
    fn direction_average(&self, up: bool) -> f64 {
        let (sum, count) = (0..self.down_sum.len())
            .filter_map(|j| self.mean(j, up))
            .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    }

    /// Predicted down and up gains of branching on `j` at `value`.
    pub fn predicted_gains(&self, j: usize, value: f64) -> (f64, f64) {
        let frac = value - value.floor();
        let down = self.mean(j, false).unwrap_or_else(|| self.direction_average(false));
        let up = self.mean(j, true).unwrap_or_else(|| self.direction_average(true));
        (down * frac, up * (1.0 - frac))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChildOutcome {
    /// Child LP optimum (minimisation form).
    Bound(f64),
    Infeasible,
    /// Child LP bound reaches the incumbent.
    Cutoff,
    /// Child LP stopped at the per-candidate iteration limit.
    Limit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SbOutcome {
    pub down: ChildOutcome,
    pub up: ChildOutcome,
    /// `+∞` marks an infeasible or cut-off child; a child stopped by the limit gains 0.
    pub down_gain: f64,
    pub up_gain: f64,
    pub iterations: u64,
    /// Best child LP optimum that is integral, with its objective.
    pub integral_solution: Option<(f64, Vec<f64>)>,
}

fn child_gain(child: ChildOutcome, node_objective: f64) -> f64 {
    match child {
        ChildOutcome::Bound(obj) => (obj - node_objective).max(0.0),
        ChildOutcome::Infeasible | ChildOutcome::Cutoff => f64::INFINITY,
        ChildOutcome::Limit => 0.0,
    }
}

/// Solves the two children `x_j <= ⌊value⌋` and `x_j >= ⌈value⌉` of a node.
#[allow(clippy::too_many_arguments)]
pub fn strong_branch_candidate(
    mip: &MiniMip,
    lower: &[f64],
    upper: &[f64],
    node_objective: f64,
    j: usize,
    value: f64,
    cutoff: f64,
    iteration_limit: u64,
) -> Result<SbOutcome, MipError> {
    let mut iterations = 0;
    let mut integral_solution: Option<(f64, Vec<f64>)> = None;
    let mut solve_child = |lo: &[f64], up: &[f64]| -> Result<ChildOutcome, MipError> {
        let r = solve_lp(mip, lo, up, iteration_limit)?;
        iterations += r.iterations;
        Ok(match r.status {
            LpStatus::Optimal if r.objective >= cutoff => ChildOutcome::Cutoff,
            LpStatus::Optimal => {
                let integral = (0..mip.num_vars())
                    .all(|k| !mip.integer[k] || (r.x[k] - r.x[k].round()).abs() <= INTEGRALITY_TOL);
                if integral && integral_solution.as_ref().is_none_or(|(o, _)| r.objective < *o) {
                    integral_solution = Some((r.objective, r.x.clone()));
                }
                ChildOutcome::Bound(r.objective)
            }
            LpStatus::Infeasible => ChildOutcome::Infeasible,
            LpStatus::IterationLimit => ChildOutcome::Limit,
            LpStatus::Unbounded => {
                return Err(MipError::Numerical("child LP of a bounded node is unbounded".into()))
            }
        })
    };
    let mut down_upper = upper.to_vec();
    down_upper[j] = value.floor();
    let down = solve_child(lower, &down_upper)?;
    let mut up_lower = lower.to_vec();
    up_lower[j] = value.ceil();
    let up = solve_child(&up_lower, upper)?;
    Ok(SbOutcome {
        down,
        up,
        down_gain: child_gain(down, node_objective),
        up_gain: child_gain(up, node_objective),
        iterations,
        integral_solution,
    })
}

/// Node state handed to the branching rule.
pub(crate) struct BranchContext<'a> {
    pub mip: &'a MiniMip,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub x: &'a [f64],
    pub objective: f64,
    pub incumbent: f64,
    pub pseudocosts: &'a mut Pseudocosts,
    pub config: &'a SolveConfig,
    /// Strong-branching simplex iterations so far in this solve.
    pub sb_iterations: u64,
    /// Node LP simplex iterations so far in this solve.
    pub node_iterations: u64,
    pub pc_log: Option<&'a mut Vec<(usize, bool, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchChoice {
    pub var: usize,
    pub value: f64,
    /// Child bounds learned by strong branching on the chosen variable.
    pub down: Option<ChildOutcome>,
    pub up: Option<ChildOutcome>,
    /// Both children of some candidate are infeasible or cut off: the node can be pruned.
    pub prune_node: bool,
    pub sb_candidates: usize,
    pub sb_lps: u64,
    pub sb_iterations: u64,
    pub stop_reason: Option<StopReason>,
    /// Improving integral solution found among the strong-branching children.
    pub incumbent: Option<(f64, Vec<f64>)>,
}

fn pc_score(pc: &Pseudocosts, j: usize, value: f64, epsilon: f64) -> f64 {
    let (down, up) = pc.predicted_gains(j, value);
    score(down, up, epsilon)
}

fn score(down: f64, up: f64, epsilon: f64) -> f64 {
    GainPair::new(down.max(0.0), up.max(0.0))
        .and_then(|p| shifted_geomean(p, epsilon))
        .map_or(0.0, |g| g.value())
}

/// Chooses the variable to branch on among the fractional `candidates`.
///
/// Unreliable candidates are scanned in decreasing pseudocost score and strong-branched
/// until the stopping rule fires; reliable ones are scored by their pseudocosts. The
/// best score wins, lowest index on ties.
pub(crate) fn select_branching_variable(
    ctx: &mut BranchContext<'_>,
    candidates: &[usize],
) -> Result<BranchChoice, MipError> {
    let cfg = ctx.config;
    let eps = cfg.epsilon;
    let mut choice = BranchChoice {
        var: candidates[0],
        value: ctx.x[candidates[0]],
        down: None,
        up: None,
        prune_node: false,
        sb_candidates: 0,
        sb_lps: 0,
        sb_iterations: 0,
        stop_reason: None,
        incumbent: None,
    };
    if candidates.len() == 1 {
        return Ok(choice);
    }

    let scored: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&j| (j, pc_score(ctx.pseudocosts, j, ctx.x[j], eps)))
        .collect();
    let by_score = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    let best_reliable = scored
        .iter()
        .filter(|(j, _)| ctx.pseudocosts.is_reliable(*j, cfg.reliability))
        .min_by(|a, b| by_score(a, b))
        .copied();
    let mut unreliable: Vec<(usize, f64)> = scored
        .iter()
        .filter(|(j, _)| !ctx.pseudocosts.is_reliable(*j, cfg.reliability))
        .copied()
        .collect();
    unreliable.sort_by(by_score);
    unreliable.truncate(cfg.max_candidates);

    let uninit = candidates
        .iter()
        .filter(|&&j| ctx.pseudocosts.is_uninitialized(j))
        .count();
    let fixed = FixedLookaheadConfig {
        uninit_fraction: uninit as f64 / candidates.len() as f64,
        ..cfg.fixed
    };
    let gap = ctx.incumbent - ctx.objective;
    let prob = (cfg.mode == SolveMode::Dynamic && gap.is_finite() && gap > 0.0).then_some(&cfg.prob);
    let mut session = SbSession::new(if prob.is_some() { gap } else { f64::MAX })
        .map_err(|e| MipError::Invalid(e.to_string()))?
        .with_work_limit(
            ctx.sb_iterations,
            iteration_budget(ctx.node_iterations, cfg.fixed.extra_iterations),
        )
        .with_candidates(unreliable.len());
    let mut outcomes = Vec::with_capacity(unreliable.len());

    for &(j, _) in &unreliable {
        let value = ctx.x[j];
        let sb = strong_branch_candidate(
            ctx.mip,
            ctx.lower,
            ctx.upper,
            ctx.objective,
            j,
            value,
            ctx.incumbent,
            cfg.sb_iteration_limit,
        )?;
        choice.sb_candidates += 1;
        choice.sb_lps += 2;
        choice.sb_iterations += sb.iterations;
        session.add_work(sb.iterations);
        if let Some((obj, x)) = &sb.integral_solution {
            if *obj < ctx.incumbent {
                ctx.incumbent = *obj;
                choice.incumbent = Some((*obj, x.clone()));
            }
        }
        let frac = value - value.floor();
        for (up, gain, dist) in [(false, sb.down_gain, frac), (true, sb.up_gain, 1.0 - frac)] {
            if let ChildOutcome::Bound(_) = if up { sb.up } else { sb.down } {
                let per_unit = gain / dist;
                ctx.pseudocosts.update(j, up, per_unit);
                if let Some(log) = ctx.pc_log.as_deref_mut() {
                    log.push((j, up, per_unit));
                }
            }
        }
        if sb.down_gain.is_infinite() && sb.up_gain.is_infinite() {
            choice.var = j;
            choice.value = value;
            choice.prune_node = true;
            return Ok(choice);
        }
        if sb.down_gain.is_infinite() || sb.up_gain.is_infinite() {
            choice.var = j;
            choice.value = value;
            choice.down = Some(sb.down);
            choice.up = Some(sb.up);
            return Ok(choice);
        }
        session.record(j, score(sb.down_gain, sb.up_gain, eps));
        outcomes.push((j, sb));
        let dist = prob.and_then(|p| p.fit(session.samples()).ok());
        if let Decision::Stop(reason) = should_continue(&session, &fixed, prob, dist.as_ref()) {
            choice.stop_reason = Some(reason);
            break;
        }
    }

    let best_sb = session.best();
    let winner = match (best_sb, best_reliable) {
        (Some((sj, ss)), Some((rj, rs))) => {
            if rs > ss || (rs == ss && rj < sj) {
                rj
            } else {
                sj
            }
        }
        (Some((sj, _)), None) => sj,
        (None, Some((rj, _))) => rj,
        (None, None) => candidates[0],
    };
    choice.var = winner;
    choice.value = ctx.x[winner];
    if let Some((_, sb)) = outcomes.into_iter().find(|(j, _)| *j == winner) {
        choice.down = Some(sb.down);
        choice.up = Some(sb.up);
    }
    Ok(choice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mini_bnb::{MiniMip, ObjSense, RowSense};

    #[test]
    fn pseudocost_means() {
        let mut pc = Pseudocosts::new(2);
        pc.update(0, false, 2.0);
        pc.update(0, false, 4.0);
        pc.update(0, true, 1.0);
        assert_eq!(pc.mean(0, false), Some(3.0));
        assert_eq!(pc.mean(0, true), Some(1.0));
        assert_eq!(pc.mean(1, true), None);
        assert!(pc.is_uninitialized(1));
        assert!(!pc.is_uninitialized(0));
        assert!(pc.is_reliable(0, 1));
        assert!(!pc.is_reliable(0, 2));
        // variable 1 borrows the per-direction averages
        let (d, u) = pc.predicted_gains(1, 2.25);
        assert!((d - 3.0 * 0.25).abs() < 1e-12 && (u - 1.0 * 0.75).abs() < 1e-12);
    }

    fn knapsack() -> MiniMip {
        // max 5a + 4b + 3c, 2a + 3b + c <= 4, binaries
        let mut mip = MiniMip::new("k", ObjSense::Maximize, vec![5.0, 4.0, 3.0]);
        mip.add_row(vec![2.0, 3.0, 1.0], RowSense::Le, 4.0);
        for j in 0..3 {
            mip.set_binary(j);
        }
        mip
    }

    #[test]
    fn gains_match_independent_child_solves() {
        let mip = {
            let mut m = knapsack();
            m.rows[0].coeffs = vec![2.0, 3.0, 2.0];
            m.rows[0].rhs = 5.0;
            m
        };
        let root = solve_lp(&mip, &mip.lower, &mip.upper, 1000).unwrap();
        let j = (0..3)
            .find(|&j| (root.x[j] - root.x[j].round()).abs() > 1e-6)
            .unwrap();
        let sb = strong_branch_candidate(
            &mip,
            &mip.lower,
            &mip.upper,
            root.objective,
            j,
            root.x[j],
            f64::INFINITY,
            500,
        )
        .unwrap();
        let mut up = mip.upper.clone();
        up[j] = 0.0;
        let down = solve_lp(&mip, &mip.lower, &up, 1000).unwrap();
        let mut lo = mip.lower.clone();
        lo[j] = 1.0;
        let upc = solve_lp(&mip, &lo, &mip.upper, 1000).unwrap();
        assert_eq!(sb.down, ChildOutcome::Bound(down.objective));
        assert_eq!(sb.up, ChildOutcome::Bound(upc.objective));
        assert!((sb.down_gain - (down.objective - root.objective)).abs() < 1e-12);
        assert!((sb.up_gain - (upc.objective - root.objective)).abs() < 1e-12);
        assert_eq!(sb.iterations, down.iterations + upc.iterations);
    }

    #[test]
    fn infeasible_children_get_infinite_gain() {
        // x + y = 1.5 with x integer in [0, 1] and y in [0, 0.5]: x = 1 forced
        let mut mip = MiniMip::new("t", ObjSense::Minimize, vec![1.0, 0.0]);
        mip.add_row(vec![1.0, 1.0], RowSense::Eq, 1.5);
        mip.set_binary(0);
        mip.set_bounds(1, 0.0, 0.5);
        let sb = strong_branch_candidate(&mip, &mip.lower, &[1.0, 0.6], 0.9, 0, 0.9, f64::INFINITY, 500)
            .unwrap();
        assert_eq!(sb.down, ChildOutcome::Infeasible);
        assert!(sb.down_gain.is_infinite());
        assert!(sb.up_gain.is_finite());
    }
}
