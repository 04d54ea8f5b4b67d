//! Penalty operators `P` with `Ker(P) = K` for unilateral trace constraints.

use crate::error::{invalid, Error, Result};
use crate::fem::{BoundaryTraceData, DofMap};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{RegionTag, TriangulationLevel};

use super::ScalarField;

#[derive(Debug, Clone)]
pub enum PenaltyKind {
    /// `<Pu, v> = int (u_nu)_+ v_nu ds`.
    NormalPositivePart,
    /// `<Pu, v> = int (u_nu - g)_+ v_nu ds` with `g >= 0`.
    GapPositivePart { gap: ScalarField },
    /// 1D endpoint: `(u(1))_+ v(1)`.
    PointConstraint,
}

#[derive(Debug, Clone)]
pub struct PenaltyOpSpec {
    pub kind: PenaltyKind,
    pub region: RegionTag,
}

impl PenaltyOpSpec {
    pub fn normal(region: RegionTag) -> Self {
        PenaltyOpSpec { kind: PenaltyKind::NormalPositivePart, region }
    }

    pub fn gap(region: RegionTag, gap: ScalarField) -> Result<Self> {
        if let Some(g) = gap.as_constant() {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(invalid("penalty.gap", "must be nonnegative and finite"));
            }
        }
        Ok(PenaltyOpSpec { kind: PenaltyKind::GapPositivePart { gap }, region })
    }

    pub fn point() -> Self {
        PenaltyOpSpec { kind: PenaltyKind::PointConstraint, region: RegionTag::Contact1 }
    }
}

/// A constrained vertex: the constraint reads `normal . u(vertex) <= gap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintPoint {
    pub vertex: usize,
    pub normal: [f64; 2],
    /// Trapezoidal weight (sum of half lengths of the adjacent region edges).
    pub weight: f64,
    pub gap: f64,
}

/// Discrete constraint set `K^h`, sampled at the region vertices.
///
/// For piecewise linear traces and piecewise linear gaps, the constraint at
/// the vertices is equivalent to the constraint along every region edge.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub points: Vec<ConstraintPoint>,
    dimension: usize,
}

impl ConstraintSet {
    pub fn new(spec: &PenaltyOpSpec, mesh: &TriangulationLevel, dofmap: &DofMap) -> Result<Self> {
        if matches!(spec.kind, PenaltyKind::PointConstraint) && mesh.dim != 1 {
            return Err(Error::RegionMismatch("point constraint requires a 1D mesh".into()));
        }
        if mesh.dim == 1 && !matches!(spec.kind, PenaltyKind::PointConstraint) {
            return Err(Error::RegionMismatch("1D meshes use the point constraint".into()));
        }
        let traces = BoundaryTraceData::new(mesh, spec.region)?;
        let mut weights = std::collections::BTreeMap::<usize, f64>::new();
        for e in &traces.contact_edges {
            let [a, b] = e.vertices;
            if a == b {
                *weights.entry(a).or_default() += 1.0;
            } else {
                *weights.entry(a).or_default() += 0.5 * e.length;
                *weights.entry(b).or_default() += 0.5 * e.length;
            }
        }
        let mut points = Vec::new();
        for &(vertex, nu) in &traces.node_normals {
            if (0..dofmap.dimension).all(|c| dofmap.dof(vertex, c).is_none()) {
                continue;
            }
            let gap = match &spec.kind {
                PenaltyKind::GapPositivePart { gap } => {
                    let g = gap.eval(mesh.vertices[vertex]);
                    if !(g >= 0.0 && g.is_finite()) {
                        return Err(invalid("penalty.gap", "must be nonnegative and finite"));
                    }
                    g
                }
                _ => 0.0,
            };
            let normal = if dofmap.dimension == 1 { [1.0, 0.0] } else { nu };
            points.push(ConstraintPoint { vertex, normal, weight: weights[&vertex], gap });
        }
        Ok(ConstraintSet { points, dimension: dofmap.dimension })
    }

    /// A set without constraint points (unconstrained problem).
    pub fn empty(dimension: usize) -> Self {
        ConstraintSet { points: Vec::new(), dimension }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(free dof, coefficient)` pairs of the linear form `u -> normal . u(vertex)`.
    pub fn row(&self, c: usize, dofmap: &DofMap) -> Vec<(usize, f64)> {
        let p = &self.points[c];
        (0..self.dimension)
            .filter_map(|k| dofmap.dof(p.vertex, k).map(|d| (d, p.normal[k])))
            .filter(|&(_, v)| v != 0.0)
            .collect()
    }

    /// Constraint quantities `normal . u - gap` (feasible when `<= 0`).
    pub fn values(&self, dofmap: &DofMap, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|c| self.row(c, dofmap).iter().map(|&(d, v)| v * u[d]).sum::<f64>() - self.points[c].gap)
            .collect()
    }

    /// `int (constraint quantity)_+^2 ds` under the vertex rule.
    pub fn violation(&self, dofmap: &DofMap, u: &[f64]) -> f64 {
        self.values(dofmap, u)
            .iter()
            .zip(&self.points)
            .map(|(q, p)| p.weight * q.max(0.0).powi(2))
            .sum()
    }
}

/// Dual representation of `P u`.
pub fn penalty_residual(set: &ConstraintSet, dofmap: &DofMap, u: &[f64]) -> Result<Vec<f64>> {
    dofmap.check_len(u)?;
    let mut r = vec![0.0; dofmap.len()];
    for (c, q) in set.values(dofmap, u).into_iter().enumerate() {
        if q > 0.0 {
            for (d, v) in set.row(c, dofmap) {
                r[d] += set.points[c].weight * q * v;
            }
        }
    }
    Ok(r)
}

/// Element of the generalized Jacobian of `P` at `u` (slope 0 at the kink).
pub fn penalty_jacobian(set: &ConstraintSet, dofmap: &DofMap, u: &[f64]) -> Result<CsrMatrix> {
    dofmap.check_len(u)?;
    let mut t = TripletBuilder::new(dofmap.len());
    for (c, q) in set.values(dofmap, u).into_iter().enumerate() {
        if q > 0.0 {
            let row = set.row(c, dofmap);
            for &(i, vi) in &row {
                for &(j, vj) in &row {
                    t.push(i, j, set.points[c].weight * vi * vj);
                }
            }
        }
    }
    Ok(t.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, sub};
    use crate::mesh::{build_interval_mesh, build_rectangle_mesh, SideTags};
    use proptest::prelude::*;

    fn plate() -> (TriangulationLevel, DofMap) {
        let tags = SideTags {
            bottom: RegionTag::Contact1,
            right: RegionTag::Neumann,
            top: RegionTag::Neumann,
            left: RegionTag::Dirichlet,
        };
        let m = build_rectangle_mesh(1.0, 1.0, 4, 2, tags).unwrap();
        let d = DofMap::new(&m, 2).unwrap();
        (m, d)
    }

    #[test]
    fn point_constraint_residual() {
        let m = build_interval_mesh(2).unwrap();
        let dm = DofMap::new(&m, 1).unwrap();
        let set = ConstraintSet::new(&PenaltyOpSpec::point(), &m, &dm).unwrap();
        assert_eq!(set.len(), 1);
        let r = penalty_residual(&set, &dm, &[0.1, 0.3]).unwrap();
        assert_eq!(r, vec![0.0, 0.3]);
        assert!(penalty_residual(&set, &dm, &[0.1, -0.3]).unwrap().iter().all(|&x| x == 0.0));
        assert!(penalty_residual(&set, &dm, &[0.1]).is_err());
    }

    #[test]
    fn fixed_corner_is_dropped_and_weights_sum_to_length() {
        let (m, dm) = plate();
        let set = ConstraintSet::new(&PenaltyOpSpec::normal(RegionTag::Contact1), &m, &dm).unwrap();
        assert_eq!(set.len(), 4);
        let total: f64 = set.points.iter().map(|p| p.weight).sum();
        assert!((total - (1.0 - 0.125)).abs() < 1e-15);
        for p in &set.points {
            assert_eq!(p.normal, [0.0, -1.0]);
        }
    }

    #[test]
    fn region_mismatches() {
        let (m, dm) = plate();
        assert!(matches!(ConstraintSet::new(&PenaltyOpSpec::point(), &m, &dm), Err(Error::RegionMismatch(_))));
        assert!(matches!(
            ConstraintSet::new(&PenaltyOpSpec::normal(RegionTag::Contact2), &m, &dm),
            Err(Error::EmptyRegion(RegionTag::Contact2))
        ));
        assert!(PenaltyOpSpec::gap(RegionTag::Contact1, ScalarField::constant(-1.0)).is_err());
    }

    #[test]
    fn jacobian_when_fully_active_and_inactive() {
        let (m, dm) = plate();
        let set = ConstraintSet::new(&PenaltyOpSpec::normal(RegionTag::Contact1), &m, &dm).unwrap();
        // Uniform downward displacement: u_nu = 1 everywhere.
        let u: Vec<f64> = dm.free_dofs.iter().map(|&g| if g % 2 == 1 { -1.0 } else { 0.0 }).collect();
        let jac = penalty_jacobian(&set, &dm, &u).unwrap();
        let mn = crate::fem::assemble_boundary_mass(&m, &dm, RegionTag::Contact1, crate::fem::TraceMode::Normal).unwrap();
        // Vertex-rule (lumped) mass: same row sums as the consistent one, apart from
        // rows coupled to the fixed corner.
        for p in &set.points {
            let i = dm.dof(p.vertex, 1).unwrap();
            assert!((jac.get(i, i) - p.weight).abs() < 1e-15);
            if m.vertices[p.vertex][0] > 0.3 {
                let rs: f64 = mn.row(i).map(|(_, v)| v).sum();
                assert!((rs - p.weight).abs() < 1e-15);
            }
        }
        assert_eq!(penalty_jacobian(&set, &dm, &vec![0.0; dm.len()]).unwrap().nnz(), 0);
    }

    #[test]
    fn directional_consistency() {
        let (m, dm) = plate();
        let set = ConstraintSet::new(&PenaltyOpSpec::gap(RegionTag::Contact1, ScalarField::constant(0.05)).unwrap(), &m, &dm)
            .unwrap();
        let u: Vec<f64> = (0..dm.len()).map(|i| 0.3 * ((i as f64) * 1.7).sin()).collect();
        let d: Vec<f64> = (0..dm.len()).map(|i| ((i as f64) * 0.9).cos()).collect();
        let jd = penalty_jacobian(&set, &dm, &u).unwrap().mul_vec(&d);
        let r0 = penalty_residual(&set, &dm, &u).unwrap();
        for t in [1e-4, 1e-6] {
            let ut: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let fd: Vec<f64> = sub(&penalty_residual(&set, &dm, &ut).unwrap(), &r0).iter().map(|x| x / t).collect();
            assert!(sub(&fd, &jd).iter().all(|e| e.abs() < 1e-8));
        }
    }

    proptest! {
        #[test]
        fn monotone_and_kernel(u in prop::collection::vec(-1.0f64..1.0, 24), w in prop::collection::vec(-1.0f64..1.0, 24)) {
            let (m, dm) = plate();
            let set = ConstraintSet::new(&PenaltyOpSpec::gap(RegionTag::Contact1, ScalarField::constant(0.2)).unwrap(), &m, &dm).unwrap();
            assert_eq!(dm.len(), 24);
            let pu = penalty_residual(&set, &dm, &u).unwrap();
            let pw = penalty_residual(&set, &dm, &w).unwrap();
            prop_assert!(dot(&sub(&pu, &pw), &sub(&u, &w)) >= -1e-12);
            let feasible = set.values(&dm, &u).iter().all(|&q| q <= 0.0);
            prop_assert_eq!(feasible, pu.iter().all(|x| x.abs() < 1e-14));
        }
    }
}
