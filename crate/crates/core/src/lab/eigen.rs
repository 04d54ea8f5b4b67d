//! Smallest eigenvalue of `int eps(u) . eps(v) dx = lambda int_region (P u) . v ds`.

use faer::{Mat, Side};

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_boundary_mass, assemble_stiffness_action, DofMap, MaterialLaw, TraceMode};
use crate::linalg::SpdSolver;
use crate::mesh::{RegionTag, TriangulationLevel};

/// Relative cutoff separating the range of the boundary mass from its kernel.
const RANGE_TOL: f64 = 1e-12;

/// Smallest generalized eigenvalue of the stiffness of `material` against
/// the boundary mass of `mode` on `region`.
///
/// Only trace-carrying directions have finite eigenvalues. With `B` the dofs
/// touched by the boundary mass `M`, `G = (K^{-1})_BB` and `M_BB = R R^T` on
/// its range, the answer is `1 / lambda_max(R^T G R)`.
pub fn estimate_trace_eigenvalue(
    mesh: &TriangulationLevel,
    mode: TraceMode,
    material: MaterialLaw,
    region: RegionTag,
) -> Result<f64> {
    if !material.is_linear() {
        return Err(invalid("material", "trace eigenvalues use a linear material"));
    }
    let components = if mode == TraceMode::Scalar || mesh.dim == 1 { 1 } else { 2 };
    let dofmap = DofMap::new(mesh, components)?;
    let mode = if components == 1 { TraceMode::Scalar } else { mode };
    let mass = assemble_boundary_mass(mesh, &dofmap, region, mode)?;
    let stiffness = assemble_stiffness_action(mesh, material, &dofmap)?;
    let k = stiffness.matrix().expect("linear law");
    let boundary: Vec<usize> = (0..dofmap.len()).filter(|&i| mass.row(i).any(|(_, v)| v != 0.0)).collect();
    let nb = boundary.len();
    if nb == 0 {
        return Err(Error::EmptyRegion(region));
    }
    let solver = SpdSolver::factor(k)?;
    let rhs = Mat::<f64>::from_fn(dofmap.len(), nb, |i, j| if i == boundary[j] { 1.0 } else { 0.0 });
    let x = solver.solve_many(rhs);
    let g = Mat::<f64>::from_fn(nb, nb, |i, j| 0.5 * (x[(boundary[i], j)] + x[(boundary[j], i)]));
    let mbb = Mat::<f64>::from_fn(nb, nb, |i, j| mass.get(boundary[i], boundary[j]));
    let eig = mbb
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenNonconvergence(format!("boundary mass: {e:?}")))?;
    let s = eig.S().column_vector();
    let smax = (0..nb).map(|i| s[i]).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..nb).filter(|&i| s[i] > RANGE_TOL * smax).collect();
    if keep.is_empty() {
        return Err(Error::EigenNonconvergence("boundary mass has no range".into()));
    }
    let u = eig.U();
    let r = Mat::<f64>::from_fn(nb, keep.len(), |i, j| u[(i, keep[j])] * s[keep[j]].sqrt());
    let c = r.transpose() * &g * &r;
    let c = Mat::<f64>::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let mu = c
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigenNonconvergence(format!("reduced problem: {e:?}")))?;
    let mu_max = *mu.last().expect("nonempty");
    if !(mu_max > 0.0 && mu_max.is_finite()) {
        return Err(Error::EigenNonconvergence(format!("largest reduced eigenvalue {mu_max}")));
    }
    Ok(1.0 / mu_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::linalg::solvers::DenseSolveCore;
    use crate::mesh::{build_interval_mesh, build_rectangle_mesh, SideTags};

    #[test]
    fn interval_endpoint_eigenvalue_is_one() {
        for n in [1, 2, 5] {
            let m = build_interval_mesh(n).unwrap();
            let lam = estimate_trace_eigenvalue(&m, TraceMode::Scalar, MaterialLaw::energy_norm_law(), RegionTag::Contact1).unwrap();
            assert!((lam - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_under_refinement() {
        let tags = SideTags {
            bottom: RegionTag::Contact1,
            right: RegionTag::Neumann,
            top: RegionTag::Neumann,
            left: RegionTag::Dirichlet,
        };
        let base = build_rectangle_mesh(1.0, 1.0, 2, 2, tags).unwrap();
        for mode in [TraceMode::FullVector, TraceMode::Normal, TraceMode::Tangential] {
            let mut prev = f64::INFINITY;
            for level in 0..3 {
                let m = base.refined(level).unwrap();
                let lam = estimate_trace_eigenvalue(&m, mode, MaterialLaw::energy_norm_law(), RegionTag::Contact1).unwrap();
                assert!(lam > 0.0 && lam <= prev * (1.0 + 1e-12), "{mode:?} level {level}");
                prev = lam;
            }
        }
    }

    #[test]
    fn matches_dense_generalized_problem() {
        // Brute force: minimize the Rayleigh quotient by a dense reduction with a
        // tiny regularization of the boundary mass kernel.
        let tags = SideTags {
            bottom: RegionTag::Contact1,
            right: RegionTag::Neumann,
            top: RegionTag::Dirichlet,
            left: RegionTag::Neumann,
        };
        let m = build_rectangle_mesh(1.0, 1.0, 2, 2, tags).unwrap();
        let dm = DofMap::new(&m, 1).unwrap();
        let k = assemble_stiffness_action(&m, MaterialLaw::energy_norm_law(), &dm).unwrap().matrix().unwrap().to_dense();
        let mass = assemble_boundary_mass(&m, &dm, RegionTag::Contact1, TraceMode::Scalar).unwrap().to_dense();
        // lambda_min(K, M) = 1 / lambda_max(K^{-1} M) for M semidefinite.
        let kinv = k.llt(Side::Lower).unwrap().inverse();
        let a = &kinv * &mass;
        let ev = a.eigenvalues().unwrap();
        let mu = ev.iter().map(|z| z.re).fold(0.0, f64::max);
        let lam = estimate_trace_eigenvalue(&m, TraceMode::Scalar, MaterialLaw::energy_norm_law(), RegionTag::Contact1).unwrap();
        assert!((lam - 1.0 / mu).abs() < 1e-10 * lam);
    }

    #[test]
    fn errors() {
        let m = build_interval_mesh(2).unwrap();
        assert!(estimate_trace_eigenvalue(&m, TraceMode::Scalar, MaterialLaw::hencky(1.0, 0.1, 1.0).unwrap(), RegionTag::Contact1).is_err());
        assert!(matches!(
            estimate_trace_eigenvalue(&m, TraceMode::Scalar, MaterialLaw::energy_norm_law(), RegionTag::Contact2),
            Err(Error::EmptyRegion(RegionTag::Contact2))
        ));
    }
}
