//! Constrained oracles for `min Pi(u)` subject to `normal . u <= gap` at the
//! constraint points: primal-dual active set, and exhaustive enumeration.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, CsrMatrix, SpdSolver, TripletBuilder};
use crate::mesh::TriangulationLevel;
use crate::model::ProblemSpec;

use super::{DiscreteProblem, LineSearch, SolverConfig};

pub const MAX_BRUTEFORCE_POINTS: usize = 12;

/// Slack used when classifying feasibility and multiplier signs.
const KKT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub coefficients: Vec<f64>,
    /// Indices into the constraint set that hold with equality.
    pub active_set: Vec<usize>,
    /// Reaction for each entry of `active_set`.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
}

/// Affine parametrization `u = T z + u0` of the dofs that satisfy the active
/// constraints with equality.
struct Reduction {
    /// For each free dof, its `(reduced index, coefficient)` pairs.
    map: Vec<Vec<(usize, f64)>>,
    offset: Vec<f64>,
    m: usize,
}

impl Reduction {
    fn new(p: &DiscreteProblem, active: &[bool]) -> Self {
        let n = p.len();
        let mut map = vec![Vec::new(); n];
        let mut offset = vec![0.0; n];
        let mut taken = vec![false; n];
        let mut m = 0;
        for (c, point) in p.constraints.points.iter().enumerate() {
            if !active[c] {
                continue;
            }
            let dofs: Vec<Option<usize>> = (0..p.dofmap.dimension).map(|k| p.dofmap.dof(point.vertex, k)).collect();
            let n = point.normal;
            if p.dofmap.dimension == 1 {
                let d = dofs[0].expect("constraint vertices are free");
                offset[d] = point.gap;
                taken[d] = true;
            } else {
                let t = [-n[1], n[0]];
                for (k, d) in dofs.iter().enumerate() {
                    let d = d.expect("constraint vertices are free");
                    offset[d] = point.gap * n[k];
                    if t[k] != 0.0 {
                        map[d].push((m, t[k]));
                    }
                    taken[d] = true;
                }
                m += 1;
            }
        }
        for d in 0..n {
            if !taken[d] {
                map[d].push((m, 1.0));
                m += 1;
            }
        }
        Reduction { map, offset, m }
    }

    fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.map
            .iter()
            .zip(&self.offset)
            .map(|(entries, o)| o + entries.iter().map(|&(a, c)| c * z[a]).sum::<f64>())
            .collect()
    }

    fn restrict_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (d, entries) in self.map.iter().enumerate() {
            for &(a, c) in entries {
                out[a] += c * r[d];
            }
        }
        out
    }

    /// Least-squares coordinates of `u` (exact for the tangential complement).
    fn project(&self, u: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.m];
        for (d, entries) in self.map.iter().enumerate() {
            for &(a, c) in entries {
                z[a] += c * (u[d] - self.offset[d]);
            }
        }
        z
    }

    fn restrict_mat(&self, j: &CsrMatrix) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.m);
        for (i, k, v) in j.triplets() {
            for &(a, ca) in &self.map[i] {
                for &(b, cb) in &self.map[k] {
                    t.push(a, b, ca * cb * v);
                }
            }
        }
        t.build()
    }
}

/// Minimizes the (smooth, strictly convex) energy over the face where the
/// `active` constraints hold with equality.
fn solve_on_face(p: &DiscreteProblem, active: &[bool], start: &[f64], config: &SolverConfig) -> Result<Vec<f64>> {
    let red = Reduction::new(p, active);
    if red.m == 0 {
        return Ok(red.expand(&[]));
    }
    let mut z = red.project(start);
    let tol = 1e-13 * norm2(&p.load).max(1.0);
    for k in 0..=config.newton_max_iter {
        let u = red.expand(&z);
        let g = red.restrict_vec(&p.inner_residual(&u, &u, f64::INFINITY));
        if norm2(&g) <= tol || (k > 0 && p.phi_quad.is_none()) {
            return Ok(u);
        }
        if k == config.newton_max_iter {
            break;
        }
        let h = red.restrict_mat(&p.inner_jacobian(&u, &u, f64::INFINITY));
        let d = SpdSolver::factor(&h)?.solve(&g.iter().map(|x| -x).collect::<Vec<_>>());
        let mut s = 1.0;
        if let LineSearch::Backtracking { contraction_factor, min_step } = config.line_search {
            let slope0 = dot(&g, &d);
            while s > min_step && slope0 < 0.0 {
                let zt: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + s * b).collect();
                let ut = red.expand(&zt);
                let gt = red.restrict_vec(&p.inner_residual(&ut, &ut, f64::INFINITY));
                if dot(&gt, &d) <= 0.1 * slope0.abs() {
                    break;
                }
                s *= contraction_factor;
            }
        }
        for (zi, di) in z.iter_mut().zip(&d) {
            *zi += s * di;
        }
    }
    Err(Error::NewtonNonconvergence { iterations: config.newton_max_iter, residual: f64::NAN })
}

/// Reactions `lambda_c = -grad Pi(u) . normal_c` at every constraint point.
fn reactions(p: &DiscreteProblem, u: &[f64]) -> Vec<f64> {
    let g = p.inner_residual(u, u, f64::INFINITY);
    (0..p.constraints.len())
        .map(|c| -p.constraints.row(c, &p.dofmap).iter().map(|&(d, v)| g[d] * v).sum::<f64>())
        .collect()
}

fn finish(p: &DiscreteProblem, u: Vec<f64>, active: &[bool], iterations: usize) -> OracleSolution {
    let lambda = reactions(p, &u);
    let active_set: Vec<usize> = (0..active.len()).filter(|&c| active[c]).collect();
    let multipliers = active_set.iter().map(|&c| lambda[c]).collect();
    OracleSolution { coefficients: u, active_set, multipliers, iterations }
}

fn check_oracle_spec(spec: &ProblemSpec, allow_phi: bool) -> Result<()> {
    if !spec.material.is_linear() {
        return Err(invalid("material", "constrained oracles require a linear material"));
    }
    if !spec.j.is_zero() {
        return Err(invalid("j", "constrained oracles require j = Zero"));
    }
    if spec.phi.has_frozen_argument() || (!allow_phi && !spec.phi.is_zero()) {
        return Err(invalid("phi", "unsupported convex term for this oracle"));
    }
    Ok(())
}

/// Primal-dual active set iteration on the constraint points.
pub fn solve_constrained_activeset(spec: &ProblemSpec, mesh: &TriangulationLevel, config: &SolverConfig) -> Result<OracleSolution> {
    check_oracle_spec(spec, true)?;
    config.validate()?;
    let p = DiscreteProblem::new_allow_unconstrained(spec, mesh)?;
    let m = p.constraints.len();
    let mut active = vec![false; m];
    let mut history: Vec<Vec<bool>> = vec![active.clone()];
    let mut u = vec![0.0; p.len()];
    let max_iter = config.newton_max_iter + m;
    for it in 1..=max_iter {
        u = solve_on_face(&p, &active, &u, config)?;
        let lambda = reactions(&p, &u);
        let q = p.constraints.values(&p.dofmap, &u);
        let next: Vec<bool> = (0..m).map(|c| if active[c] { lambda[c] > 0.0 } else { q[c] > 1e-12 }).collect();
        if next == active {
            return Ok(finish(&p, u, &active, it));
        }
        if history.contains(&next) {
            return Err(Error::CycleDetected { iterations: it });
        }
        history.push(next.clone());
        active = next;
    }
    Err(Error::CycleDetected { iterations: max_iter })
}

/// Enumerates every active subset of at most [`MAX_BRUTEFORCE_POINTS`]
/// constraint points and returns the one satisfying the KKT conditions.
pub fn solve_constrained_bruteforce(spec: &ProblemSpec, mesh: &TriangulationLevel, config: &SolverConfig) -> Result<OracleSolution> {
    check_oracle_spec(spec, false)?;
    let p = DiscreteProblem::new_allow_unconstrained(spec, mesh)?;
    let m = p.constraints.len();
    if m > MAX_BRUTEFORCE_POINTS {
        return Err(Error::TooManyConstraints { count: m, max: MAX_BRUTEFORCE_POINTS });
    }
    let zeros = vec![0.0; p.len()];
    for mask in 0u32..(1u32 << m) {
        let active: Vec<bool> = (0..m).map(|c| mask & (1 << c) != 0).collect();
        let u = solve_on_face(&p, &active, &zeros, config)?;
        let lambda = reactions(&p, &u);
        let q = p.constraints.values(&p.dofmap, &u);
        let ok = (0..m).all(|c| if active[c] { lambda[c] >= -KKT_SLACK } else { q[c] <= KKT_SLACK });
        if ok {
            return Ok(finish(&p, u, &active, mask as usize + 1));
        }
    }
    Err(Error::NoFeasibleSubset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::LoadSpec;
    use crate::model::{ProblemLabel, ProblemSpec};

    #[test]
    fn one_dimensional_kkt() {
        let spec = ProblemSpec::default_for(ProblemLabel::ScalarSignorini1D);
        let mesh = spec.mesh_at(0).unwrap();
        for sol in [
            solve_constrained_activeset(&spec, &mesh, &SolverConfig::default()).unwrap(),
            solve_constrained_bruteforce(&spec, &mesh, &SolverConfig::default()).unwrap(),
        ] {
            assert!((sol.coefficients[0] - 0.125).abs() < 1e-14);
            assert_eq!(sol.coefficients[1], 0.0);
            assert_eq!(sol.active_set, vec![0]);
            assert!((sol.multipliers[0] - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn slack_constraint_gives_unconstrained_solution() {
        let mut spec = ProblemSpec::default_for(ProblemLabel::ScalarSignorini1D);
        spec.loads = LoadSpec::constant([-1.0, 0.0], [0.0, 0.0]);
        let mesh = spec.mesh_at(0).unwrap();
        let sol = solve_constrained_activeset(&spec, &mesh, &SolverConfig::default()).unwrap();
        assert!(sol.active_set.is_empty());
        // -u'' = -1, u(0) = 0, u'(1) = 0: u = x^2/2 - x.
        assert!((sol.coefficients[0] - (0.125 - 0.5)).abs() < 1e-14);
        assert!((sol.coefficients[1] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_unsupported_specs() {
        let p2 = ProblemSpec::default_for(ProblemLabel::P2Contact);
        let mesh = p2.mesh_at(0).unwrap();
        assert!(solve_constrained_activeset(&p2, &mesh, &SolverConfig::default()).is_err());
        let vi = ProblemSpec::default_for(ProblemLabel::ViOnly);
        let fine = vi.mesh_at(3).unwrap();
        assert!(matches!(
            solve_constrained_bruteforce(&vi, &fine, &SolverConfig::default()),
            Err(Error::TooManyConstraints { count: 16, max: 12 })
        ));
    }
}
