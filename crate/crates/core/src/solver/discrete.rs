//! Assembled penalized problem on one mesh level: residuals, generalized
//! Jacobians and dual norms.

use crate::error::{Error, Result};
use crate::fem::{assemble_load, assemble_stiffness_action, energy_matrix, DofMap, StiffnessOperator, TraceQuadrature};
use crate::linalg::{dot, CsrMatrix, SpdSolver, TripletBuilder};
use crate::mesh::TriangulationLevel;
use crate::model::{penalty_jacobian, penalty_residual, ConstraintSet, PointDerivs, ProblemSpec};

/// Per-term dual norms of the stationarity residual
/// `A u + P u / eps + D phi(u, u) + D j(u) - f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub total: f64,
    /// `total` divided by the load dual norm (or by 1 for zero loads).
    pub relative: f64,
    pub a_term: f64,
    pub penalty_term: f64,
    pub phi_term: f64,
    pub j_term: f64,
    pub load_term: f64,
}

pub struct DiscreteProblem<'a> {
    pub spec: &'a ProblemSpec,
    pub mesh: &'a TriangulationLevel,
    pub dofmap: DofMap,
    pub stiffness: StiffnessOperator,
    pub load: Vec<f64>,
    pub constraints: ConstraintSet,
    pub phi_quad: Option<TraceQuadrature>,
    pub j_quad: Option<TraceQuadrature>,
    pub delta: f64,
    pub energy: CsrMatrix,
    energy_solver: SpdSolver,
    pub load_norm: f64,
}

impl<'a> DiscreteProblem<'a> {
    pub fn new(spec: &'a ProblemSpec, mesh: &'a TriangulationLevel) -> Result<Self> {
        Self::build(spec, mesh, false)
    }

    /// Like [`DiscreteProblem::new`], but a missing constraint region gives
    /// an empty constraint set instead of an error.
    pub fn new_allow_unconstrained(spec: &'a ProblemSpec, mesh: &'a TriangulationLevel) -> Result<Self> {
        Self::build(spec, mesh, true)
    }

    fn build(spec: &'a ProblemSpec, mesh: &'a TriangulationLevel, allow_empty: bool) -> Result<Self> {
        let dofmap = DofMap::new(mesh, spec.components)?;
        if dofmap.is_empty() {
            return Err(Error::InvalidMesh("no free degrees of freedom".into()));
        }
        let stiffness = assemble_stiffness_action(mesh, spec.material, &dofmap)?;
        let load = dofmap.restrict(&assemble_load(mesh, &spec.loads, &dofmap)?);
        let constraints = match ConstraintSet::new(&spec.penalty, mesh, &dofmap) {
            Err(Error::EmptyRegion(tag)) if allow_empty && tag == spec.penalty.region => ConstraintSet::empty(spec.components),
            other => other?,
        };
        let phi_quad = if spec.phi.is_zero() { None } else { Some(TraceQuadrature::new(mesh, &dofmap, spec.phi.region)?) };
        let j_quad = if spec.j.is_zero() { None } else { Some(TraceQuadrature::new(mesh, &dofmap, spec.j.region)?) };
        let energy = energy_matrix(mesh, &dofmap)?;
        let energy_solver = SpdSolver::factor(&energy)?;
        let mut p = DiscreteProblem {
            spec,
            mesh,
            dofmap,
            stiffness,
            load,
            constraints,
            phi_quad,
            j_quad,
            delta: spec.phi.delta(mesh.h),
            energy,
            energy_solver,
            load_norm: 0.0,
        };
        p.load_norm = p.dual_norm(&p.load);
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.dofmap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofmap.is_empty()
    }

    /// `sqrt(r^T E^{-1} r)`, the norm of a residual in the dual of the energy space.
    pub fn dual_norm(&self, r: &[f64]) -> f64 {
        dot(r, &self.energy_solver.solve(r)).max(0.0).sqrt()
    }

    pub fn energy_norm(&self, u: &[f64]) -> f64 {
        self.energy.quad_form(u).max(0.0).sqrt()
    }

    pub fn residual_scale(&self) -> f64 {
        if self.load_norm > 0.0 {
            self.load_norm
        } else {
            1.0
        }
    }

    fn phi_terms(&self, u: &[f64], w: &[f64], out: &mut [f64], mut jac: Option<&mut TripletBuilder>) {
        let Some(q) = &self.phi_quad else { return };
        let us = q.samples(&self.dofmap, u);
        let ws = q.samples(&self.dofmap, w);
        for (k, p) in q.points.iter().enumerate() {
            let d = self.spec.phi.point_derivs(p.x, ws[k], us[k], self.delta);
            self.scatter(q, k, p.weight, d, out, jac.as_deref_mut());
        }
    }

    fn j_terms(&self, u: &[f64], w: &[f64], out: &mut [f64], mut jac: Option<&mut TripletBuilder>) {
        let Some(q) = &self.j_quad else { return };
        let us = q.samples(&self.dofmap, u);
        let ws = q.samples(&self.dofmap, w);
        for (k, p) in q.points.iter().enumerate() {
            let c = self.spec.j.convex_point_derivs(us[k], self.delta);
            let e = self.spec.j.explicit_point_derivs(ws[k]);
            let d = PointDerivs {
                normal: (c.normal.0 + e.normal.0, c.normal.1),
                tangential: (c.tangential.0 + e.tangential.0, c.tangential.1),
            };
            self.scatter(q, k, p.weight, d, out, jac.as_deref_mut());
        }
    }

    fn scatter(&self, q: &TraceQuadrature, k: usize, wt: f64, d: PointDerivs, out: &mut [f64], jac: Option<&mut TripletBuilder>) {
        if d.normal.0 != 0.0 {
            q.scatter(&self.dofmap, out, k, false, wt * d.normal.0);
        }
        if d.tangential.0 != 0.0 {
            q.scatter(&self.dofmap, out, k, true, wt * d.tangential.0);
        }
        if let Some(t) = jac {
            q.scatter_outer(&self.dofmap, t, k, false, wt * d.normal.1);
            q.scatter_outer(&self.dofmap, t, k, true, wt * d.tangential.1);
        }
    }

    /// Residual of the smooth problem with `phi`'s first argument and the
    /// explicit part of `j` frozen at `w`.
    pub fn inner_residual(&self, u: &[f64], w: &[f64], epsilon: f64) -> Vec<f64> {
        let mut r = self.stiffness.residual(u);
        if epsilon.is_finite() {
            let p = penalty_residual(&self.constraints, &self.dofmap, u).expect("sized");
            crate::linalg::axpy(&mut r, 1.0 / epsilon, &p);
        }
        self.phi_terms(u, w, &mut r, None);
        self.j_terms(u, w, &mut r, None);
        crate::linalg::axpy(&mut r, -1.0, &self.load);
        r
    }

    /// Generalized Jacobian of [`DiscreteProblem::inner_residual`] in `u`.
    pub fn inner_jacobian(&self, u: &[f64], w: &[f64], epsilon: f64) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.len());
        let mut scratch = vec![0.0; self.len()];
        self.phi_terms(u, w, &mut scratch, Some(&mut t));
        self.j_terms(u, w, &mut scratch, Some(&mut t));
        let mut jac = self.stiffness.tangent(u).add_scaled(&t.build(), 1.0);
        if epsilon.is_finite() {
            let pj = penalty_jacobian(&self.constraints, &self.dofmap, u).expect("sized");
            jac = jac.add_scaled(&pj, 1.0 / epsilon);
        }
        jac
    }

    pub fn residual_check(&self, u: &[f64], epsilon: f64) -> Result<ResidualReport> {
        self.dofmap.check_len(u)?;
        if !(epsilon > 0.0) {
            return Err(crate::error::invalid("eps", "must be positive"));
        }
        let a = self.stiffness.residual(u);
        let mut pen = penalty_residual(&self.constraints, &self.dofmap, u)?;
        pen.iter_mut().for_each(|x| *x /= epsilon);
        let mut phi = vec![0.0; self.len()];
        self.phi_terms(u, u, &mut phi, None);
        let mut j = vec![0.0; self.len()];
        self.j_terms(u, u, &mut j, None);
        let total: Vec<f64> = (0..self.len()).map(|i| a[i] + pen[i] + phi[i] + j[i] - self.load[i]).collect();
        let total = self.dual_norm(&total);
        Ok(ResidualReport {
            total,
            relative: total / self.residual_scale(),
            a_term: self.dual_norm(&a),
            penalty_term: self.dual_norm(&pen),
            phi_term: self.dual_norm(&phi),
            j_term: self.dual_norm(&j),
            load_term: self.load_norm,
        })
    }

    /// Number of constraint points with positive constraint quantity.
    pub fn active_count(&self, u: &[f64]) -> usize {
        self.constraints.values(&self.dofmap, u).iter().filter(|&&q| q > 0.0).count()
    }
}

/// Residual breakdown of `u` for the penalized problem on `mesh`.
pub fn residual_check(spec: &ProblemSpec, mesh: &TriangulationLevel, u: &[f64], epsilon: f64) -> Result<ResidualReport> {
    DiscreteProblem::new(spec, mesh)?.residual_check(u, epsilon)
}
