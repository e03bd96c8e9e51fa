//! Dense bounded-variable primal simplex.
//!
//! Every row gets a slack, `a·x + s = b`, with the slack's bounds encoding the row sense.
//! Rows whose initial residual does not fit the slack bounds get an artificial variable,
//! removed in phase 1. The full tableau `B⁻¹[A I R]` is kept and refactorised from the
//! original columns periodically and before the solution is accepted.

use super::{MiniMip, MipError, RowSense};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PRIMAL_TOL: f64 = 1e-9;
const PHASE1_TOL: f64 = 1e-7;
const CHECK_TOL: f64 = 1e-6;
const STALL_ITERATIONS: u32 = 50;
const REFACTOR_EVERY: u64 = 50;
const MAX_REFINEMENTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// Structural values; meaningful for `Optimal` only.
    pub x: Vec<f64>,
    /// Minimisation-form objective `c_min·x`; meaningful for `Optimal` only.
    pub objective: f64,
    /// Simplex iterations (pivots and bound flips) over both phases.
    pub iterations: u64,
}

/// Solves the LP relaxation of `mip` under the bounds `lower`, `upper`.
pub fn solve_lp(
    mip: &MiniMip,
    lower: &[f64],
    upper: &[f64],
    iteration_limit: u64,
) -> Result<LpResult, MipError> {
    let n = mip.num_vars();
    if lower.len() != n || upper.len() != n {
        return Err(MipError::Invalid("bound vectors have the wrong length".into()));
    }
    let infeasible = |iterations| LpResult {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: f64::NAN,
        iterations,
    };
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return Ok(infeasible(0));
    }
    let mut sx = Simplex::new(mip, lower, upper);
    let phase1 = sx.run(iteration_limit)?;
    if phase1 == Outcome::Limit {
        return Ok(sx.result(LpStatus::IterationLimit, n));
    }
    if sx.artificial_sum() > PHASE1_TOL * (1.0 + sx.rhs_scale) {
        return Ok(infeasible(sx.iterations));
    }
    sx.start_phase2(&mip.min_objective());
    match sx.run(iteration_limit)? {
        Outcome::Optimal => Ok(sx.result(LpStatus::Optimal, n)),
        Outcome::Unbounded => Ok(sx.result(LpStatus::Unbounded, n)),
        Outcome::Limit => Ok(sx.result(LpStatus::IterationLimit, n)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

struct Simplex {
    m: usize,
    cols: usize,
    /// Original column matrix `[A I R]`, row-major.
    orig: Vec<f64>,
    /// Current tableau `B⁻¹ orig`, row-major.
    tab: Vec<f64>,
    b: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<Option<usize>>,
    first_artificial: usize,
    iterations: u64,
    pivots_since_refactor: u64,
    rhs_scale: f64,
}

impl Simplex {
    fn new(mip: &MiniMip, lower: &[f64], upper: &[f64]) -> Self {
        let n = mip.num_vars();
        let m = mip.num_rows();
        let mut x: Vec<f64> = (0..n)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    0.0
                }
            })
            .collect();
        let mut lo = lower.to_vec();
        let mut up = upper.to_vec();
        let mut basis = Vec::with_capacity(m);
        let mut artificials = Vec::new();
        for (i, row) in mip.rows.iter().enumerate() {
            let (sl, su) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lo.push(sl);
            up.push(su);
            let residual = row.rhs - row.activity(&x[..n]);
            let clamped = residual.clamp(sl, su);
            x.push(clamped);
            if residual == clamped {
                basis.push(n + i);
            } else {
                let sign = (residual - clamped).signum();
                artificials.push((i, sign));
                basis.push(usize::MAX);
            }
        }
        let first_artificial = n + m;
        let cols = first_artificial + artificials.len();
        let mut orig = vec![0.0; m * cols];
        for (i, row) in mip.rows.iter().enumerate() {
            orig[i * cols..i * cols + n].copy_from_slice(&row.coeffs);
            orig[i * cols + n + i] = 1.0;
        }
        for (k, &(i, sign)) in artificials.iter().enumerate() {
            let col = first_artificial + k;
            orig[i * cols + col] = sign;
            let residual = mip.rows[i].rhs - mip.rows[i].activity(&x[..n]) - x[n + i];
            x.push(residual * sign);
            lo.push(0.0);
            up.push(f64::INFINITY);
            basis[i] = col;
        }
        let mut tab = orig.clone();
        for &(i, sign) in &artificials {
            if sign < 0.0 {
                for v in &mut tab[i * cols..(i + 1) * cols] {
                    *v = -*v;
                }
            }
        }
        let mut basic_row = vec![None; cols];
        for (i, &j) in basis.iter().enumerate() {
            basic_row[j] = Some(i);
        }
        let mut cost = vec![0.0; cols];
        for c in &mut cost[first_artificial..] {
            *c = 1.0;
        }
        let rhs_scale = mip.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        Self {
            m,
            cols,
            orig,
            tab,
            b: mip.rows.iter().map(|r| r.rhs).collect(),
            lo,
            up,
            x,
            cost,
            basis,
            basic_row,
            first_artificial,
            iterations: 0,
            pivots_since_refactor: 0,
            rhs_scale,
        }
    }

    fn artificial_sum(&self) -> f64 {
        self.x[self.first_artificial..].iter().sum()
    }

    fn start_phase2(&mut self, c: &[f64]) {
        self.cost.iter_mut().for_each(|v| *v = 0.0);
        self.cost[..c.len()].copy_from_slice(c);
        for j in self.first_artificial..self.cols {
            self.up[j] = 0.0;
            if self.basic_row[j].is_none() {
                self.x[j] = 0.0;
            }
        }
    }

    fn objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, v)| c * v).sum()
    }

    fn result(&self, status: LpStatus, n: usize) -> LpResult {
        LpResult {
            status,
            x: self.x[..n].to_vec(),
            objective: self.objective(),
            iterations: self.iterations,
        }
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        let mut d = self.cost[j];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = self.cost[bj];
            if cb != 0.0 {
                d -= cb * self.tab[i * self.cols + j];
            }
        }
        d
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            if self.basic_row[j].is_some() || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.reduced_cost(j);
            let can_increase = self.x[j] < self.up[j] - PRIMAL_TOL;
            let can_decrease = self.x[j] > self.lo[j] + PRIMAL_TOL;
            let dir = if d < -DUAL_TOL && can_increase {
                1.0
            } else if d > DUAL_TOL && can_decrease {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, score)| d.abs() > score) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn run(&mut self, limit: u64) -> Result<Outcome, MipError> {
        let mut refinements = 0;
        let mut stall = 0u32;
        let mut bland = false;
        let mut last_obj = self.objective();
        loop {
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let Some((q, dir)) = self.entering(bland) else {
                self.refactor()?;
                if self.entering(bland).is_none() && self.primal_ok() {
                    return Ok(Outcome::Optimal);
                }
                refinements += 1;
                if refinements > MAX_REFINEMENTS {
                    return Err(MipError::Numerical(
                        "solution fails the residual check after refactorisation".into(),
                    ));
                }
                continue;
            };
            if self.iterations >= limit {
                return Ok(Outcome::Limit);
            }
            if !self.step(q, dir, bland)? {
                return Ok(Outcome::Unbounded);
            }
            self.iterations += 1;
            let obj = self.objective();
            if obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
                if stall >= STALL_ITERATIONS {
                    bland = true;
                }
            }
        }
    }

    /// One ratio test and update. Returns false when the direction is unbounded.
    fn step(&mut self, q: usize, dir: f64, bland: bool) -> Result<bool, MipError> {
        let cols = self.cols;
        let mut t_max = self.up[q] - self.lo[q];
        let mut leave: Option<(usize, f64)> = None;
        let mut leave_alpha = 0.0f64;
        for i in 0..self.m {
            let alpha = dir * self.tab[i * cols + q];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let bj = self.basis[i];
            let (bound, t) = if alpha > 0.0 {
                (self.lo[bj], (self.x[bj] - self.lo[bj]) / alpha)
            } else {
                (self.up[bj], (self.up[bj] - self.x[bj]) / -alpha)
            };
            if !bound.is_finite() {
                continue;
            }
            let t = t.max(0.0);
            let better = match leave {
                None => t < t_max,
                Some((r, _)) => {
                    if bland {
                        t < t_max - 1e-12 || (t <= t_max + 1e-12 && bj < self.basis[r])
                    } else {
                        t < t_max - 1e-12 || (t <= t_max + 1e-12 && alpha.abs() > leave_alpha)
                    }
                }
            };
            if better {
                t_max = t;
                leave = Some((i, bound));
                leave_alpha = alpha.abs();
            }
        }
        if t_max == f64::INFINITY {
            return Ok(false);
        }
        for i in 0..self.m {
            let alpha = self.tab[i * cols + q];
            if alpha != 0.0 {
                self.x[self.basis[i]] -= dir * t_max * alpha;
            }
        }
        self.x[q] += dir * t_max;
        match leave {
            None => {
                // bound flip
                self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
            }
            Some((r, bound)) => {
                let out = self.basis[r];
                self.x[out] = bound;
                self.pivot(r, q);
            }
        }
        Ok(true)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let piv = self.tab[r * cols + q];
        for v in &mut self.tab[r * cols..(r + 1) * cols] {
            *v /= piv;
        }
        let (before, rest) = self.tab.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let out = self.basis[r];
        self.basic_row[out] = None;
        self.basic_row[q] = Some(r);
        self.basis[r] = q;
        self.pivots_since_refactor += 1;
    }

    /// Rebuilds the tableau and the basic values from the original columns.
    fn refactor(&mut self) -> Result<(), MipError> {
        let (m, cols) = (self.m, self.cols);
        let mut tab = self.orig.clone();
        let mut rhs = self.b.clone();
        for j in 0..cols {
            if self.basic_row[j].is_none() && self.x[j] != 0.0 {
                for i in 0..m {
                    rhs[i] -= self.orig[i * cols + j] * self.x[j];
                }
            }
        }
        let mut new_basis = vec![usize::MAX; m];
        let mut assigned = vec![false; m];
        let mut order = self.basis.clone();
        order.sort_unstable();
        for &q in &order {
            let r = (0..m)
                .filter(|&i| !assigned[i])
                .max_by(|&a, &b| tab[a * cols + q].abs().total_cmp(&tab[b * cols + q].abs()))
                .ok_or_else(|| MipError::Numerical("basis has too many columns".into()))?;
            let piv = tab[r * cols + q];
            if piv.abs() < 1e-11 {
                return Err(MipError::Numerical("singular basis".into()));
            }
            for v in &mut tab[r * cols..(r + 1) * cols] {
                *v /= piv;
            }
            rhs[r] /= piv;
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = tab[i * cols + q];
                if f != 0.0 {
                    for k in 0..cols {
                        tab[i * cols + k] -= f * tab[r * cols + k];
                    }
                    tab[i * cols + q] = 0.0;
                    rhs[i] -= f * rhs[r];
                }
            }
            assigned[r] = true;
            new_basis[r] = q;
        }
        self.tab = tab;
        self.basis = new_basis;
        for (i, &q) in self.basis.iter().enumerate() {
            self.basic_row[q] = Some(i);
            self.x[q] = rhs[i];
        }
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn primal_ok(&self) -> bool {
        self.basis.iter().all(|&j| {
            let tol = CHECK_TOL * (1.0 + self.x[j].abs());
            self.x[j] >= self.lo[j] - tol && self.x[j] <= self.up[j] + tol
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mini_bnb::{MiniMip, ObjSense, RowSense};
    use proptest::prelude::*;

    fn lp(mip: &MiniMip) -> LpResult {
        solve_lp(mip, &mip.lower, &mip.upper, 10_000).unwrap()
    }

    #[test]
    fn two_variable_vertex() {
        let mut mip = MiniMip::new("t", ObjSense::Maximize, vec![2.0, 3.0]);
        mip.add_row(vec![1.0, 2.0], RowSense::Le, 3.0);
        mip.set_bounds(0, 0.0, 1.0);
        mip.set_bounds(1, 0.0, 1.0);
        let r = lp(&mip);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] - 1.0).abs() < 1e-9 && (r.x[1] - 1.0).abs() < 1e-9);
        assert!((r.objective + 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_bounds_and_rows() {
        let mut mip = MiniMip::new("t", ObjSense::Minimize, vec![1.0]);
        mip.add_row(vec![1.0], RowSense::Ge, 2.0);
        mip.add_row(vec![1.0], RowSense::Le, 1.0);
        assert_eq!(lp(&mip).status, LpStatus::Infeasible);
        let r = solve_lp(&mip, &[3.0], &[1.0], 100).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mip = MiniMip::new("t", ObjSense::Minimize, vec![-1.0]);
        assert_eq!(lp(&mip).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + y, x - y = 1, x free, y in [-2, 5]: y = -2, x = -1
        let mut mip = MiniMip::new("t", ObjSense::Minimize, vec![1.0, 1.0]);
        mip.add_row(vec![1.0, -1.0], RowSense::Eq, 1.0);
        mip.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
        mip.set_bounds(1, -2.0, 5.0);
        let r = lp(&mip);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.x[0] + 1.0).abs() < 1e-9 && (r.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn iteration_limit() {
        let mut mip = MiniMip::new("t", ObjSense::Maximize, vec![1.0; 6]);
        for j in 0..6 {
            let mut row = vec![1.0; 6];
            row[j] = 3.0;
            mip.add_row(row, RowSense::Le, 10.0);
        }
        let r = solve_lp(&mip, &mip.lower, &mip.upper, 1).unwrap();
        assert_eq!(r.status, LpStatus::IterationLimit);
        assert_eq!(r.iterations, 1);
    }

    /// All vertices of a box-bounded 2-D polygon `{x: a_i·x <= b_i}`.
    fn brute_force_2d(rows: &[(f64, f64, f64)], bound: f64, c: (f64, f64)) -> Option<f64> {
        let mut lines: Vec<(f64, f64, f64)> = rows.to_vec();
        lines.extend([(1.0, 0.0, bound), (-1.0, 0.0, 0.0), (0.0, 1.0, bound), (0.0, -1.0, 0.0)]);
        let mut best: Option<f64> = None;
        for i in 0..lines.len() {
            for k in i + 1..lines.len() {
                let (a1, b1, r1) = lines[i];
                let (a2, b2, r2) = lines[k];
                let det = a1 * b2 - a2 * b1;
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = (r1 * b2 - r2 * b1) / det;
                let y = (a1 * r2 - a2 * r1) / det;
                if lines.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9) {
                    let v = c.0 * x + c.1 * y;
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            rows in proptest::collection::vec((-5i32..=5, -5i32..=5, -4i32..=12), 1..6),
            c in (-5i32..=5, -5i32..=5),
        ) {
            let rows: Vec<(f64, f64, f64)> =
                rows.into_iter().map(|(a, b, r)| (a as f64, b as f64, r as f64)).collect();
            let c = (c.0 as f64, c.1 as f64);
            let mut mip = MiniMip::new("t", ObjSense::Minimize, vec![c.0, c.1]);
            for &(a, b, r) in &rows {
                mip.add_row(vec![a, b], RowSense::Le, r);
            }
            mip.set_bounds(0, 0.0, 4.0);
            mip.set_bounds(1, 0.0, 4.0);
            let r = lp(&mip);
            match brute_force_2d(&rows, 4.0, c) {
                Some(v) => {
                    prop_assert_eq!(r.status, LpStatus::Optimal);
                    prop_assert!((r.objective - v).abs() < 1e-7);
                    prop_assert!(mip.rows.iter().all(|row| row.is_satisfied(&r.x, 1e-7)));
                }
                None => prop_assert_eq!(r.status, LpStatus::Infeasible),
            }
        }
    }
}
