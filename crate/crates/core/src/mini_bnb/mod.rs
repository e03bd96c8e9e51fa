//! A small branch-and-bound solver for mixed-integer programs.
//!
//! The LP relaxations are solved by a dense bounded-variable primal simplex, nodes are
//! processed best-bound first, and branching uses reliability pseudocost branching with
//! strong branching on unreliable candidates, stopped by either the fixed lookahead rule
//! or the probabilistic rule. Meant for desk-scale instances (up to a few hundred rows
//! and columns).

mod branching;
pub mod generate;
mod lp;
pub mod mps;
mod solver;

use std::fmt;

use thiserror::Error;

pub use branching::{strong_branch_candidate, BranchChoice, ChildOutcome, Pseudocosts, SbOutcome};
pub use lp::{solve_lp, LpResult, LpStatus};
pub use solver::{
    solve, NodeDecision, PseudocostUpdate, SolveConfig, SolveMode, SolveResult, SolveStats,
    SolveStatus,
};

#[derive(Debug, Error, PartialEq)]
pub enum MipError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("LP solver failed: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    /// Dense coefficients, one per variable.
    pub coeffs: Vec<f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs = self.activity(x);
        let tol = tol * (1.0 + self.rhs.abs());
        match self.sense {
            RowSense::Le => lhs <= self.rhs + tol,
            RowSense::Ge => lhs >= self.rhs - tol,
            RowSense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// A mixed-integer program with dense rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniMip {
    pub name: String,
    pub sense: ObjSense,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub var_names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub rows: Vec<Row>,
}

impl MiniMip {
    /// Continuous variables named `x0, x1, ...` with bounds `[0, ∞)` and no rows.
    pub fn new(name: impl Into<String>, sense: ObjSense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            name: name.into(),
            sense,
            objective,
            objective_offset: 0.0,
            var_names: (0..n).map(|j| format!("x{j}")).collect(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            integer: vec![false; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) {
        let name = format!("c{}", self.rows.len());
        self.rows.push(Row {
            name,
            coeffs,
            sense,
            rhs,
        });
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Marks `j` as a 0/1 variable.
    pub fn set_binary(&mut self, j: usize) {
        self.integer[j] = true;
        self.set_bounds(j, 0.0, 1.0);
    }

    pub fn validate(&self) -> Result<(), MipError> {
        let n = self.num_vars();
        let bad = |msg: String| Err(MipError::Invalid(msg));
        if self.var_names.len() != n
            || self.lower.len() != n
            || self.upper.len() != n
            || self.integer.len() != n
        {
            return bad("variable vectors have inconsistent lengths".into());
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return bad(format!("objective coefficient of {} is not finite", self.var_names[j]));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("invalid bounds [{l}, {u}] on {}", self.var_names[j]));
            }
            if l > u {
                return bad(format!("lower bound {l} exceeds upper bound {u} on {}", self.var_names[j]));
            }
        }
        for row in &self.rows {
            if row.coeffs.len() != n {
                return bad(format!(
                    "row {} has {} coefficients, expected {n}",
                    row.name,
                    row.coeffs.len()
                ));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return bad(format!("row {} has a non-finite entry", row.name));
            }
        }
        Ok(())
    }

    /// Objective coefficients of the equivalent minimisation problem.
    pub fn min_objective(&self) -> Vec<f64> {
        match self.sense {
            ObjSense::Minimize => self.objective.clone(),
            ObjSense::Maximize => self.objective.iter().map(|c| -c).collect(),
        }
    }

    /// Converts a minimisation-form value `c_min·x` to the problem's own sense, offset included.
    pub fn to_user_objective(&self, min_value: f64) -> f64 {
        match self.sense {
            ObjSense::Minimize => min_value + self.objective_offset,
            ObjSense::Maximize => -min_value + self.objective_offset,
        }
    }

    /// Inverse of [`MiniMip::to_user_objective`].
    pub fn from_user_objective(&self, value: f64) -> f64 {
        match self.sense {
            ObjSense::Minimize => value - self.objective_offset,
            ObjSense::Maximize => -(value - self.objective_offset),
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_offset
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.num_vars()
            && x.iter().enumerate().all(|(j, &v)| {
                v >= self.lower[j] - tol
                    && v <= self.upper[j] + tol
                    && (!self.integer[j] || (v - v.round()).abs() <= tol)
            })
            && self.rows.iter().all(|r| r.is_satisfied(x, tol))
    }
}
