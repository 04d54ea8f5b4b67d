//! Discrete solvers: penalized semismooth Newton with an outer fixed point,
//! and constrained oracles for the variational-inequality case.

mod discrete;
mod newton;
mod oracle;

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};

pub use discrete::{residual_check, DiscreteProblem, ResidualReport};
pub(crate) use newton::check_smallness;
pub use newton::{solve_penalized, PenalizedSolver};
pub use oracle::{solve_constrained_activeset, solve_constrained_bruteforce, OracleSolution, MAX_BRUTEFORCE_POINTS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearch {
    None,
    Backtracking { contraction_factor: f64, min_step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Tolerance on the load-normalized dual norm of the residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Tolerance on the relative energy-norm update of the outer loop.
    pub fixedpoint_tol: f64,
    pub fixedpoint_max_iter: usize,
    pub line_search: LineSearch,
    /// Solve even when the smallness condition fails (the solution may then
    /// be any stationary point).
    pub override_smallness: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            newton_max_iter: 100,
            fixedpoint_tol: 1e-11,
            fixedpoint_max_iter: 500,
            line_search: LineSearch::Backtracking { contraction_factor: 0.5, min_step: 1e-10 },
            override_smallness: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(invalid("solver.newton_tol", "must be positive"));
        }
        if !(self.fixedpoint_tol > 0.0) {
            return Err(invalid("solver.fixedpoint_tol", "must be positive"));
        }
        if self.newton_max_iter == 0 {
            return Err(invalid("solver.newton_max_iter", "must be at least 1"));
        }
        if self.fixedpoint_max_iter == 0 {
            return Err(invalid("solver.fixedpoint_max_iter", "must be at least 1"));
        }
        if let LineSearch::Backtracking { contraction_factor, min_step } = self.line_search {
            if !(contraction_factor > 0.0 && contraction_factor < 1.0) {
                return Err(invalid("solver.contraction_factor", "must lie in (0, 1)"));
            }
            if !(min_step > 0.0 && min_step <= 1.0) {
                return Err(invalid("solver.min_step", "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Newton iterations summed over all outer iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    /// Final load-normalized residual dual norm.
    pub residual: f64,
    pub active_set_size: usize,
    pub converged: bool,
    /// Converged at the rounding-error floor of the residual evaluation
    /// rather than at `newton_tol`.
    pub roundoff_limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    /// Free-dof coefficient vector.
    pub coefficients: Vec<f64>,
    pub h: f64,
    pub epsilon: f64,
    pub level: usize,
    pub diagnostics: Diagnostics,
}

impl DiscreteSolution {
    pub fn to_text(&self) -> String {
        let mut s = format!("vhi-sol v1 h={:?} eps={:?}\n", self.h, self.epsilon);
        for c in &self.coefficients {
            let _ = writeln!(s, "{c:?}");
        }
        s
    }

    /// Parses the text format; returns `(h, eps, coefficients)`.
    pub fn parse_text(text: &str) -> Result<(f64, f64, Vec<f64>)> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty solution file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("vhi-sol") || parts.next() != Some("v1") {
            return Err(Error::Parse(format!("bad solution header `{header}`")));
        }
        let mut field = |key: &str| -> Result<f64> {
            let p = parts.next().and_then(|p| p.strip_prefix(key)).ok_or_else(|| Error::Parse(format!("missing `{key}`")))?;
            p.parse().map_err(|_| Error::Parse(format!("bad value in `{key}{p}`")))
        };
        let h = field("h=")?;
        let eps = field("eps=")?;
        let coefficients = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coefficient `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok((h, eps, coefficients))
    }
}
