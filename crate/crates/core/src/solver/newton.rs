//! Penalized solve: outer fixed point on the frozen arguments, inner
//! semismooth Newton on a strictly convex smooth problem.

use crate::error::{invalid, Error, Result};
use crate::fem::MaterialLaw;
use crate::lab::estimate_trace_eigenvalue;
use crate::linalg::{dot, sub, SpdSolver};
use crate::mesh::TriangulationLevel;
use crate::model::{report_constants, EigenEstimates, ProblemSpec, Verdict};

use super::{DiscreteProblem, DiscreteSolution, Diagnostics, LineSearch, SolverConfig};

/// Multiple of machine epsilon used for the residual rounding floor.
const ROUNDOFF_FACTOR: f64 = 64.0;
const LINE_SEARCH_SLOPE: f64 = 0.1;
const MAX_ZOOM: usize = 60;

/// A penalized solver bound to one problem and mesh level; assembly and the
/// smallness check happen once, solves for many `eps` reuse them.
pub struct PenalizedSolver<'a> {
    pub problem: DiscreteProblem<'a>,
    pub config: SolverConfig,
    level: usize,
}

struct InnerOutcome {
    iterations: usize,
    floor: f64,
    roundoff_limited: bool,
}

impl<'a> PenalizedSolver<'a> {
    pub fn new(spec: &'a ProblemSpec, mesh: &'a TriangulationLevel, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if !config.override_smallness {
            check_smallness(spec, mesh)?;
        }
        Ok(PenalizedSolver { problem: DiscreteProblem::new(spec, mesh)?, config, level: mesh.level })
    }

    /// Skips the smallness check (the caller has verified it already).
    pub fn new_unchecked(spec: &'a ProblemSpec, mesh: &'a TriangulationLevel, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(PenalizedSolver { problem: DiscreteProblem::new(spec, mesh)?, config, level: mesh.level })
    }

    pub fn solve(&self, epsilon: f64, warm_start: Option<&[f64]>) -> Result<DiscreteSolution> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("eps", "must be positive and finite"));
        }
        let p = &self.problem;
        let mut u = match warm_start {
            Some(w) => {
                p.dofmap.check_len(w)?;
                w.to_vec()
            }
            None => vec![0.0; p.len()],
        };
        let frozen = p.spec.has_frozen_terms();
        let mut w = u.clone();
        let mut total = 0;
        let mut last_update = f64::INFINITY;
        for outer in 1..=self.config.fixedpoint_max_iter {
            let inner = self.inner_solve(&mut u, &w, epsilon)?;
            total += inner.iterations;
            let mut done = !frozen;
            if frozen {
                let norm = p.energy_norm(&u);
                let diff = p.energy_norm(&sub(&u, &w));
                last_update = if diff == 0.0 { 0.0 } else { diff / norm.max(f64::MIN_POSITIVE) };
                w.copy_from_slice(&u);
                done = last_update <= self.config.fixedpoint_tol;
            }
            if done {
                let report = p.residual_check(&u, epsilon)?;
                let limit = self.config.newton_tol.max(inner.floor);
                if report.relative <= limit {
                    return Ok(DiscreteSolution {
                        h: p.mesh.h,
                        epsilon,
                        level: self.level,
                        diagnostics: Diagnostics {
                            iterations: total,
                            outer_iterations: outer,
                            residual: report.relative,
                            active_set_size: p.active_count(&u),
                            converged: true,
                            roundoff_limited: inner.roundoff_limited && report.relative > self.config.newton_tol,
                        },
                        coefficients: u,
                    });
                }
                if !frozen {
                    return Err(Error::NewtonNonconvergence { iterations: total, residual: report.relative });
                }
            }
        }
        Err(Error::FixedPointNonconvergence { iterations: self.config.fixedpoint_max_iter, update: last_update })
    }

    fn inner_solve(&self, u: &mut Vec<f64>, w: &[f64], epsilon: f64) -> Result<InnerOutcome> {
        let p = &self.problem;
        let scale = p.residual_scale();
        let mut prev_active: Option<Vec<bool>> = None;
        let mut last = f64::INFINITY;
        for k in 0..=self.config.newton_max_iter {
            let r = p.inner_residual(u, w, epsilon);
            let nr = p.dual_norm(&r) / scale;
            last = nr;
            let active: Vec<bool> = p.constraints.values(&p.dofmap, u).iter().map(|&q| q > 0.0).collect();
            if nr <= self.config.newton_tol {
                return Ok(InnerOutcome { iterations: k, floor: 0.0, roundoff_limited: false });
            }
            let jac = p.inner_jacobian(u, w, epsilon);
            let mut bound = jac.abs_mul_vec(u);
            for (b, f) in bound.iter_mut().zip(&p.load) {
                *b += f.abs();
            }
            let floor = ROUNDOFF_FACTOR * f64::EPSILON * p.dual_norm(&bound) / scale;
            if nr <= floor && prev_active.as_ref() == Some(&active) {
                return Ok(InnerOutcome { iterations: k, floor, roundoff_limited: true });
            }
            if k == self.config.newton_max_iter {
                break;
            }
            prev_active = Some(active);
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            let d = SpdSolver::factor(&jac)?.solve(&neg);
            let step = self.line_search(u, w, epsilon, &d, dot(&r, &d));
            for (ui, di) in u.iter_mut().zip(&d) {
                *ui += step * di;
            }
        }
        Err(Error::NewtonNonconvergence { iterations: self.config.newton_max_iter, residual: last })
    }

    /// Step along `d` for the convex inner energy.
    ///
    /// Backtracks until the directional derivative has dropped to
    /// `LINE_SEARCH_SLOPE * |slope0|`. If the accepted point is still far
    /// from the line minimizer, the bracket with the last rejected step is
    /// narrowed by regula falsi until `|slope| <= LINE_SEARCH_SLOPE * |slope0|`.
    /// The derivative is monotone along `d`, so the bracket always holds
    /// the minimizer.
    fn line_search(&self, u: &[f64], w: &[f64], epsilon: f64, d: &[f64], slope0: f64) -> f64 {
        let LineSearch::Backtracking { contraction_factor, min_step } = self.config.line_search else {
            return 1.0;
        };
        if slope0 >= 0.0 {
            return 1.0;
        }
        let tol = LINE_SEARCH_SLOPE * slope0.abs();
        let mut trial = vec![0.0; u.len()];
        let mut slope_at = |s: f64| {
            for i in 0..u.len() {
                trial[i] = u[i] + s * d[i];
            }
            dot(&self.problem.inner_residual(&trial, w, epsilon), d)
        };
        let mut s = 1.0;
        let mut rejected: Option<(f64, f64)> = None;
        let (lo, g_lo) = loop {
            let g = slope_at(s);
            if g <= tol {
                break (s, g);
            }
            if s * contraction_factor < min_step {
                return min_step;
            }
            rejected = Some((s, g));
            s *= contraction_factor;
        };
        let Some((mut hi, mut w_hi)) = rejected else { return lo };
        if g_lo >= -tol {
            return lo;
        }
        let (mut lo, mut w_lo) = (lo, g_lo);
        // Illinois variant: halve the weight of an end that is kept twice.
        let mut side = 0i8;
        for _ in 0..MAX_ZOOM {
            if hi - lo <= min_step * hi {
                break;
            }
            let s = lo - w_lo * (hi - lo) / (w_hi - w_lo);
            let g = slope_at(s);
            if g.abs() <= tol {
                return s;
            }
            if g < 0.0 {
                (lo, w_lo) = (s, g);
                if side == -1 {
                    w_hi *= 0.5;
                }
                side = -1;
            } else {
                (hi, w_hi) = (s, g);
                if side == 1 {
                    w_lo *= 0.5;
                }
                side = 1;
            }
        }
        lo
    }
}

/// Trace eigenvalues needed by the smallness condition of `spec` on `mesh`.
pub(crate) fn required_estimates(spec: &ProblemSpec, mesh: &TriangulationLevel) -> Result<EigenEstimates> {
    let mut est = EigenEstimates::default();
    for (mode, region) in spec.required_eigenproblems() {
        est.insert(mode, region, estimate_trace_eigenvalue(mesh, mode, MaterialLaw::energy_norm_law(), region)?);
    }
    Ok(est)
}

pub(crate) fn check_smallness(spec: &ProblemSpec, mesh: &TriangulationLevel) -> Result<()> {
    if spec.required_eigenproblems().is_empty() {
        return Ok(());
    }
    let report = report_constants(spec, &required_estimates(spec, mesh)?)?;
    if report.verdict == Verdict::Violated {
        return Err(Error::SmallnessViolation { inequality: report.inequality.to_string(), margin: report.smallness_margin });
    }
    Ok(())
}

/// Solves the penalized discrete problem on `mesh` for one `eps`.
pub fn solve_penalized(
    spec: &ProblemSpec,
    mesh: &TriangulationLevel,
    epsilon: f64,
    config: &SolverConfig,
    warm_start: Option<&[f64]>,
) -> Result<DiscreteSolution> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("eps", "must be positive and finite"));
    }
    PenalizedSolver::new(spec, mesh, *config)?.solve(epsilon, warm_start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::LoadSpec;
    use crate::model::{ProblemLabel, ProblemSpec};

    fn signorini() -> (ProblemSpec, TriangulationLevel) {
        let spec = ProblemSpec::default_for(ProblemLabel::ScalarSignorini1D);
        let mesh = spec.mesh_at(0).unwrap();
        (spec, mesh)
    }

    #[test]
    fn one_dimensional_penalized_solution_is_nodally_exact() {
        let (spec, mesh) = signorini();
        let eps = 0.1;
        let s = solve_penalized(&spec, &mesh, eps, &SolverConfig::default(), None).unwrap();
        let a = (2.0 * eps + 1.0) / (2.0 * (eps + 1.0));
        let exact = |x: f64| -0.5 * x * x + a * x;
        assert!((s.coefficients[0] - exact(0.5)).abs() < 1e-10);
        assert!((s.coefficients[1] - exact(1.0)).abs() < 1e-10);
        assert!(s.diagnostics.converged && s.diagnostics.residual <= 1e-10);
        assert_eq!(s.diagnostics.active_set_size, 1);
    }

    #[test]
    fn small_penalty_parameter() {
        let (spec, mesh) = signorini();
        let eps = 1e-8;
        let s = solve_penalized(&spec, &mesh, eps, &SolverConfig::default(), None).unwrap();
        assert!((s.coefficients[1] - eps / (2.0 * (eps + 1.0))).abs() < 1e-12);
        assert!((s.coefficients[0] - 0.125).abs() < 2.0 * eps);
    }

    #[test]
    fn zero_load_gives_zero_without_iterations() {
        for label in ProblemLabel::ALL {
            let mut spec = ProblemSpec::default_for(label);
            spec.loads = LoadSpec::zero();
            let mesh = spec.mesh_at(0).unwrap();
            let s = solve_penalized(&spec, &mesh, 1e-3, &SolverConfig::default(), None).unwrap();
            assert!(s.coefficients.iter().all(|&c| c == 0.0), "{label}");
            assert_eq!(s.diagnostics.iterations, 0);
        }
    }

    #[test]
    fn rejects_nonpositive_eps() {
        let (spec, mesh) = signorini();
        for eps in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                solve_penalized(&spec, &mesh, eps, &SolverConfig::default(), None),
                Err(Error::InvalidParameter { .. })
            ));
        }
    }
}
