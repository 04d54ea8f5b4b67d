//! `(h, eps)` sweeps of the penalized solver against a reference solution.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_boundary_mass, energy_matrix, DofMap, TraceMode};
use crate::mesh::{refine_uniform, TriangulationLevel};
use crate::model::{ProblemLabel, ProblemSpec};
use crate::solver::{check_smallness, solve_constrained_activeset, PenalizedSolver, SolverConfig};

pub const CSV_HEADER: &str = "h,eps,energy_err,trace_err,violation,norm,iters";

/// Rates are fitted over this many of the finest points.
const RATE_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    /// Every level is paired with every penalty parameter.
    IndependentGrid,
    /// One penalty parameter per level, `eps = c * h^p`.
    Diagonal { c: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// Closed-form solution; available for `ScalarSignorini1D` with unit load.
    Analytic,
    /// Penalized solve with `epsilon` on `level` (default: two levels past
    /// the finest sweep level).
    FineOracle { level: Option<usize>, epsilon: f64 },
    /// Active-set solution of the constrained problem on the finest level.
    ConstrainedOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub refinement_levels: Vec<usize>,
    /// Ignored by the diagonal coupling.
    pub epsilons: Vec<f64>,
    pub coupling: Coupling,
    pub reference: Reference,
    /// Concurrent cells; 0 uses the rayon default.
    pub workers: usize,
}

impl SweepPlan {
    pub fn diagonal(levels: Vec<usize>, c: f64, p: f64, reference: Reference) -> Self {
        SweepPlan { refinement_levels: levels, epsilons: Vec::new(), coupling: Coupling::Diagonal { c, p }, reference, workers: 0 }
    }

    pub fn grid(levels: Vec<usize>, epsilons: Vec<f64>, reference: Reference) -> Self {
        SweepPlan { refinement_levels: levels, epsilons, coupling: Coupling::IndependentGrid, reference, workers: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let levels = &self.refinement_levels;
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sweep.levels", "must be nonempty and strictly increasing"));
        }
        match self.coupling {
            Coupling::IndependentGrid => {
                let e = &self.epsilons;
                if e.is_empty() || e.iter().any(|x| !(*x > 0.0 && x.is_finite())) || e.windows(2).any(|w| w[0] <= w[1]) {
                    return Err(invalid("sweep.epsilons", "must be positive, finite and strictly decreasing"));
                }
            }
            Coupling::Diagonal { c, p } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(invalid("sweep.c", "must be positive and finite"));
                }
                if !(p > 0.0 && p.is_finite()) {
                    return Err(invalid("sweep.p", "must be positive and finite"));
                }
            }
        }
        if let Reference::FineOracle { level, epsilon } = self.reference {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(invalid("sweep.reference_eps", "must be positive and finite"));
            }
            if level.is_some_and(|l| l < *levels.last().expect("nonempty")) {
                return Err(invalid("sweep.reference_level", "must not be coarser than the finest sweep level"));
            }
        }
        Ok(())
    }

    /// `(level, eps, on_diagonal)` for every cell, given the mesh size of
    /// each level. For a grid, the diagonal pairs the i-th level with the
    /// i-th penalty parameter.
    pub fn cells(&self, h: impl Fn(usize) -> f64) -> Vec<(usize, f64, bool)> {
        match self.coupling {
            Coupling::Diagonal { c, p } => self.refinement_levels.iter().map(|&l| (l, c * h(l).powf(p), true)).collect(),
            Coupling::IndependentGrid => {
                let mut out = Vec::new();
                for (i, &l) in self.refinement_levels.iter().enumerate() {
                    for (k, &e) in self.epsilons.iter().enumerate() {
                        out.push((l, e, i == k));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub level: usize,
    pub h: f64,
    pub epsilon: f64,
    /// Energy norm of the difference to the reference.
    pub energy_err: f64,
    /// L2 norm of the trace difference on the constraint region.
    pub trace_err: f64,
    /// `int (constraint quantity)_+^2 ds`.
    pub violation: f64,
    pub norm: f64,
    pub iterations: usize,
    pub on_diagonal: bool,
}

/// Least-squares log-log slopes over the finest diagonal points.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObservedRates {
    pub energy_vs_h: Option<f64>,
    pub energy_vs_eps: Option<f64>,
    pub trace_vs_h: Option<f64>,
    pub violation_vs_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub label: ProblemLabel,
    /// Sorted by level, then by decreasing `eps`.
    pub rows: Vec<SweepRow>,
    pub observed_rates: ObservedRates,
    /// False when a cell failed; `rows` then holds the cells that converged.
    pub complete: bool,
    pub failure: Option<String>,
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx)
}

impl ConvergenceReport {
    fn fit(rows: &[SweepRow]) -> ObservedRates {
        let diag: Vec<&SweepRow> = rows.iter().filter(|r| r.on_diagonal).collect();
        let tail = &diag[diag.len().saturating_sub(RATE_POINTS)..];
        let fit = |x: fn(&SweepRow) -> f64, y: fn(&SweepRow) -> f64| slope(&tail.iter().map(|r| (x(r), y(r))).collect::<Vec<_>>());
        ObservedRates {
            energy_vs_h: fit(|r| r.h, |r| r.energy_err),
            energy_vs_eps: fit(|r| r.epsilon, |r| r.energy_err),
            trace_vs_h: fit(|r| r.h, |r| r.trace_err),
            violation_vs_eps: fit(|r| r.epsilon, |r| r.violation),
        }
    }

    /// Rows of one mesh level, by decreasing `eps`.
    pub fn level_rows(&self, level: usize) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.level == level).collect()
    }

    pub fn diagonal_rows(&self) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.on_diagonal).collect()
    }

    /// Slope of `column` against `eps` over the smallest penalty parameters
    /// at a fixed level.
    pub fn rate_vs_eps(&self, level: usize, column: fn(&SweepRow) -> f64) -> Option<f64> {
        let rows = self.level_rows(level);
        let tail = &rows[rows.len().saturating_sub(RATE_POINTS)..];
        slope(&tail.iter().map(|r| (r.epsilon, column(r))).collect::<Vec<_>>())
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.h, r.epsilon, r.energy_err, r.trace_err, r.violation, r.norm, r.iterations
            );
        }
        s
    }

    pub fn summary_line(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
        let r = &self.observed_rates;
        format!(
            "rates: energy_vs_h={} energy_vs_eps={} trace_vs_h={} violation_vs_eps={}",
            f(r.energy_vs_h),
            f(r.energy_vs_eps),
            f(r.trace_vs_h),
            f(r.violation_vs_eps)
        )
    }
}

/// Reference coefficients (all nodal dofs) on a chain level.
enum RefSolution {
    Analytic,
    Discrete { level: usize, full: Vec<f64> },
}

/// Energy error of a 1D P1 field against `(x - x^2) / 2`, exact per segment.
fn analytic_signorini_errors(mesh: &TriangulationLevel, full: &[f64]) -> (f64, f64) {
    let mut e2 = 0.0;
    for &[a, b] in &mesh.segments {
        let (xa, xb) = (mesh.vertices[a][0], mesh.vertices[b][0]);
        let s = (full[b] - full[a]) / (xb - xa);
        // The integrand (s - 1/2 + x)^2 is quadratic: Simpson is exact.
        let g = |x: f64| (s - 0.5 + x).powi(2);
        e2 += (xb - xa) / 6.0 * (g(xa) + 4.0 * g(0.5 * (xa + xb)) + g(xb));
    }
    let end = mesh.vertices.iter().enumerate().max_by(|x, y| x.1[0].total_cmp(&y.1[0])).map_or(0, |v| v.0);
    (e2.sqrt(), full[end].abs())
}

fn has_unit_load(spec: &ProblemSpec) -> bool {
    [[0.0, 0.0], [0.3, 0.0], [1.0, 0.0]].iter().all(|&x| (spec.loads.body_force)(x) == [1.0, 0.0])
}

struct Context<'a> {
    spec: &'a ProblemSpec,
    chain: Vec<TriangulationLevel>,
    config: SolverConfig,
    reference: RefSolution,
    ref_energy: Option<(DofMap, crate::linalg::CsrMatrix, crate::linalg::CsrMatrix)>,
}

impl Context<'_> {
    fn prolong(&self, from: usize, to: usize, mut full: Vec<f64>) -> Result<Vec<f64>> {
        for k in from + 1..=to {
            full = self.chain[k].prolong_from_coarse(&full, self.spec.components)?;
        }
        Ok(full)
    }

    fn run_cell(&self, level: usize, epsilon: f64, on_diagonal: bool) -> Result<SweepRow> {
        let mesh = &self.chain[level];
        let solver = PenalizedSolver::new_unchecked(self.spec, mesh, self.config)?;
        let sol = solver.solve(epsilon, None)?;
        let p = &solver.problem;
        let u = &sol.coefficients;
        let full = p.dofmap.extend(u);
        let (energy_err, trace_err) = match (&self.reference, &self.ref_energy) {
            (RefSolution::Analytic, _) => analytic_signorini_errors(mesh, &full),
            (RefSolution::Discrete { level: rl, full: rf }, Some((dofmap, energy, mass))) => {
                let fine = self.prolong(level, *rl, full)?;
                let diff: Vec<f64> = dofmap.restrict(&fine).iter().zip(dofmap.restrict(rf)).map(|(a, b)| a - b).collect();
                (energy.quad_form(&diff).max(0.0).sqrt(), mass.quad_form(&diff).max(0.0).sqrt())
            }
            _ => unreachable!("discrete references carry their norms"),
        };
        Ok(SweepRow {
            level,
            h: mesh.h,
            epsilon,
            energy_err,
            trace_err,
            violation: p.constraints.violation(&p.dofmap, u),
            norm: p.energy_norm(u),
            iterations: sol.diagnostics.iterations,
            on_diagonal,
        })
    }
}

fn resolve_reference(spec: &ProblemSpec, plan: &SweepPlan, chain: &[TriangulationLevel], config: &SolverConfig) -> Result<RefSolution> {
    let finest = *plan.refinement_levels.last().expect("validated");
    match plan.reference {
        Reference::Analytic => {
            if spec.label == ProblemLabel::ScalarSignorini1D && has_unit_load(spec) {
                Ok(RefSolution::Analytic)
            } else {
                Err(Error::ReferenceUnavailable(format!("no closed-form solution for {}", spec.label)))
            }
        }
        Reference::ConstrainedOracle => {
            if !spec.j.is_zero() {
                return Err(Error::ReferenceUnavailable("the constrained oracle requires j = Zero".into()));
            }
            let mesh = &chain[finest];
            let sol = solve_constrained_activeset(spec, mesh, config)?;
            let dofmap = DofMap::new(mesh, spec.components)?;
            Ok(RefSolution::Discrete { level: finest, full: dofmap.extend(&sol.coefficients) })
        }
        Reference::FineOracle { level, epsilon } => {
            let level = level.unwrap_or(finest + 2);
            let mesh = &chain[level];
            let solver = PenalizedSolver::new_unchecked(spec, mesh, *config)?;
            let sol = solver.solve(epsilon, None)?;
            Ok(RefSolution::Discrete { level, full: solver.problem.dofmap.extend(&sol.coefficients) })
        }
    }
}

/// Solves every cell of `plan` from a zero initial guess and tabulates the
/// errors against the plan's reference.
///
/// Cells run concurrently; the table does not depend on the worker count.
/// A failing cell marks the report incomplete instead of aborting it.
pub fn run_sweep(spec: &ProblemSpec, plan: &SweepPlan, config: &SolverConfig) -> Result<ConvergenceReport> {
    plan.validate()?;
    config.validate()?;
    let finest = *plan.refinement_levels.last().expect("validated");
    let top = match plan.reference {
        Reference::FineOracle { level, .. } => level.unwrap_or(finest + 2),
        _ => finest,
    };
    let mut chain = vec![spec.base_mesh.clone()];
    while chain.len() <= top {
        let next = refine_uniform(chain.last().expect("nonempty"))?;
        chain.push(next);
    }
    if !config.override_smallness {
        check_smallness(spec, &chain[finest])?;
    }
    let reference = resolve_reference(spec, plan, &chain, config)?;
    let ref_energy = match &reference {
        RefSolution::Analytic => None,
        RefSolution::Discrete { level, .. } => {
            let mesh = &chain[*level];
            let dofmap = DofMap::new(mesh, spec.components)?;
            let energy = energy_matrix(mesh, &dofmap)?;
            let mode = spec.vector_mode(TraceMode::FullVector);
            let mass = assemble_boundary_mass(mesh, &dofmap, spec.penalty.region, mode)?;
            Some((dofmap, energy, mass))
        }
    };
    let ctx = Context { spec, chain, config: *config, reference, ref_energy };
    let cells = plan.cells(|l| ctx.chain[l].h);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let results: Vec<Result<SweepRow>> = pool.install(|| cells.par_iter().map(|&(l, e, d)| ctx.run_cell(l, e, d)).collect());

    let mut rows = Vec::new();
    let mut failure = None;
    for ((l, e, _), r) in cells.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(err) if failure.is_none() => failure = Some(format!("level {l}, eps {e:e}: {err}")),
            Err(_) => {}
        }
    }
    rows.sort_by(|a, b| a.level.cmp(&b.level).then(b.epsilon.total_cmp(&a.epsilon)));
    Ok(ConvergenceReport {
        label: spec.label,
        observed_rates: ConvergenceReport::fit(&rows),
        complete: failure.is_none(),
        failure,
        rows,
    })
}
