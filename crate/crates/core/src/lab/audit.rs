//! Checks run on finished sweeps and on the special-case solve paths.

use crate::error::{invalid, Result};
use crate::linalg::sub;
use crate::model::{ConvexPhiSpec, JKind, NonconvexJSpec, PhiKind, ProblemSpec, ScalarField};
use crate::solver::{DiscreteProblem, PenalizedSolver, SolverConfig};

use super::ConvergenceReport;

/// Largest accepted norm ratio between successive `eps` at a fixed level.
pub const MAX_NORM_RATIO: f64 = 1.05;

const REDUCTION_LEVEL: usize = 2;
const REDUCTION_EPS: f64 = 1e-3;
const REDUCTION_TOL: f64 = 1e-12;
const DEGENERATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundednessAudit {
    pub max_norm: f64,
    /// Largest successive-`eps` norm ratio; `None` when no level has two rows.
    pub worst_ratio: Option<f64>,
    pub monotone: bool,
}

/// Maximum solution norm of the sweep, and whether the norm grows by more
/// than [`MAX_NORM_RATIO`] between successive `eps` at any level.
pub fn boundedness_audit(report: &ConvergenceReport) -> BoundednessAudit {
    let max_norm = report.rows.iter().map(|r| r.norm).fold(0.0, f64::max);
    let mut worst_ratio: Option<f64> = None;
    let mut levels: Vec<usize> = report.rows.iter().map(|r| r.level).collect();
    levels.dedup();
    for level in levels {
        for w in report.level_rows(level).windows(2) {
            let ratio = match (w[0].norm, w[1].norm) {
                (a, b) if a == 0.0 && b == 0.0 => 1.0,
                (a, b) => b / a,
            };
            let ratio = if ratio.is_nan() { f64::INFINITY } else { ratio };
            worst_ratio = Some(worst_ratio.map_or(ratio, |w: f64| w.max(ratio)));
        }
    }
    BoundednessAudit { max_norm, worst_ratio, monotone: max_norm.is_finite() && worst_ratio.map_or(true, |w| w <= MAX_NORM_RATIO) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    /// `j = Zero`: an explicit vanishing `j` against the solve without it.
    VariationalInequality,
    /// `phi = Zero`: an explicit vanishing Tresca term against the solve without it.
    Hemivariational,
    /// Slip weakening with `mu_s = mu_d` against the Tresca reformulation.
    DegenerateSlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionCheck {
    pub kind: ReductionKind,
    /// Energy norm of the difference, relative to the solution norm (absolute
    /// for a zero solution).
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<(Vec<f64>, f64, f64)> {
    let mesh = spec.mesh_at(REDUCTION_LEVEL)?;
    let solver = PenalizedSolver::new(spec, &mesh, *config)?;
    let u = solver.solve(REDUCTION_EPS, None)?.coefficients;
    let norm = solver.problem.energy_norm(&u);
    Ok((u, norm, solver.problem.delta))
}

fn difference(spec: &ProblemSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    let mesh = spec.mesh_at(REDUCTION_LEVEL)?;
    let p = DiscreteProblem::new_allow_unconstrained(spec, &mesh)?;
    let norm = p.energy_norm(b);
    let diff = p.energy_norm(&sub(a, b));
    Ok(if norm > 0.0 { diff / norm } else { diff })
}

/// Compares the general solve path with its reduced form on a level-2 mesh.
///
/// For `j = Zero` or `phi = Zero` the general path carries an explicit
/// vanishing term through quadrature; slip weakening with `mu_s = mu_d` is
/// compared with the equivalent Tresca functional.
pub fn special_case_reduction_check(spec: &ProblemSpec, config: &SolverConfig) -> Result<ReductionCheck> {
    let (kind, general, reduced, tolerance) = if let JKind::SlipWeakeningTangential { mu_s, mu_d, .. } = spec.j.kind {
        if mu_s != mu_d {
            return Err(invalid("j", "the slip reduction needs mu_s = mu_d"));
        }
        let PhiKind::GivenBoundTresca { normal_bound, tangential_bound } = &spec.phi.kind else {
            return Err(invalid("phi", "the slip reduction needs a Tresca phi"));
        };
        if spec.phi.region != spec.j.region || tangential_bound.as_constant() != Some(0.0) {
            return Err(invalid("phi", "the slip reduction needs phi on the j region without a tangential bound"));
        }
        let mut tresca = spec.clone();
        tresca.phi = ConvexPhiSpec {
            smoothing_delta: spec.phi.smoothing_delta,
            ..ConvexPhiSpec::tresca(spec.phi.region, normal_bound.clone(), ScalarField::constant(mu_s))?
        };
        tresca.j = NonconvexJSpec::zero();
        (ReductionKind::DegenerateSlip, spec.clone(), tresca, DEGENERATE_TOL)
    } else if spec.j.is_zero() {
        let mut general = spec.clone();
        general.j = NonconvexJSpec::descending_normal(spec.penalty.region, 0.0, 0.0, 1.0, 1.0)?;
        (ReductionKind::VariationalInequality, general, spec.clone(), REDUCTION_TOL)
    } else if spec.phi.is_zero() {
        let mut general = spec.clone();
        let zero = ScalarField::constant(0.0);
        general.phi = ConvexPhiSpec { smoothing_delta: spec.phi.smoothing_delta, ..ConvexPhiSpec::tresca(spec.j.region, zero.clone(), zero)? };
        (ReductionKind::Hemivariational, general, spec.clone(), REDUCTION_TOL)
    } else {
        return Err(invalid("spec", "needs j = Zero, phi = Zero or slip weakening with mu_s = mu_d"));
    };
    let (u_general, _, delta_general) = solve(&general, config)?;
    let (u_reduced, _, delta_reduced) = solve(&reduced, config)?;
    debug_assert_eq!(delta_general, delta_reduced);
    let difference = difference(&reduced, &u_general, &u_reduced)?;
    Ok(ReductionCheck { kind, difference, tolerance, passed: difference <= tolerance })
}
