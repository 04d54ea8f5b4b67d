//! Nonconvex, locally Lipschitz boundary potentials `j` and their Clarke
//! directional derivatives.

use crate::error::{invalid, Result};
use crate::fem::{DofMap, TraceQuadrature, TraceSample};
use crate::mesh::RegionTag;

use super::{huber, PointDerivs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JKind {
    Zero,
    /// `j_tau(xi) = rho(|xi|)` with
    /// `rho'(s) = mu_s - (mu_s - mu_d) min(s / slip_length, 1)`.
    SlipWeakeningTangential { mu_s: f64, mu_d: f64, slip_length: f64 },
    /// `j_nu(r) = int_0^r p`, `p` rising with slope `mu1` up to `r0`, then
    /// falling with slope `mu2` up to `r1`, then constant.
    DescendingNormal { mu1: f64, mu2: f64, r0: f64, r1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonconvexJSpec {
    pub kind: JKind,
    pub region: RegionTag,
}

impl NonconvexJSpec {
    pub fn zero() -> Self {
        NonconvexJSpec { kind: JKind::Zero, region: RegionTag::Contact1 }
    }

    pub fn slip_weakening(region: RegionTag, mu_s: f64, mu_d: f64, slip_length: f64) -> Result<Self> {
        if !(mu_d >= 0.0 && mu_s >= mu_d && mu_s.is_finite()) {
            return Err(invalid("j.mu_s", "requires mu_s >= mu_d >= 0"));
        }
        if !(slip_length > 0.0 && slip_length.is_finite()) {
            return Err(invalid("j.slip_length", "must be positive and finite"));
        }
        Ok(NonconvexJSpec { kind: JKind::SlipWeakeningTangential { mu_s, mu_d, slip_length }, region })
    }

    pub fn descending_normal(region: RegionTag, mu1: f64, mu2: f64, r0: f64, r1: f64) -> Result<Self> {
        if !(mu1 >= 0.0 && mu2 >= 0.0 && mu1.is_finite() && mu2.is_finite()) {
            return Err(invalid("j.mu1", "mu1 and mu2 must be nonnegative and finite"));
        }
        if !(r0 > 0.0 && r1 >= r0 && r1.is_finite()) {
            return Err(invalid("j.r0", "requires 0 < r0 <= r1"));
        }
        if mu2 * (r1 - r0) > mu1 * r0 {
            return Err(invalid("j.mu2", "requires mu2 * (r1 - r0) <= mu1 * r0 so that p stays nonnegative"));
        }
        Ok(NonconvexJSpec { kind: JKind::DescendingNormal { mu1, mu2, r0, r1 }, region })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, JKind::Zero)
    }

    pub fn acts_on_tangential(&self) -> bool {
        matches!(self.kind, JKind::SlipWeakeningTangential { .. })
    }

    /// Relaxed monotonicity constant.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            JKind::Zero => 0.0,
            JKind::SlipWeakeningTangential { mu_s, mu_d, slip_length } => (mu_s - mu_d) / slip_length,
            JKind::DescendingNormal { mu2, .. } => mu2,
        }
    }

    /// Growth constants `(c0, c1)` with `|dj(r)| <= c0 + c1 |r|`.
    pub fn growth(&self) -> (f64, f64) {
        match self.kind {
            JKind::Zero => (0.0, 0.0),
            JKind::SlipWeakeningTangential { mu_s, .. } => (mu_s, 0.0),
            JKind::DescendingNormal { mu1, r0, .. } => (mu1 * r0, 0.0),
        }
    }

    /// `p(r)` for the normal potential, `rho'(|r|)` for the slip potential.
    pub fn density_derivative(&self, r: f64) -> f64 {
        match self.kind {
            JKind::Zero => 0.0,
            JKind::SlipWeakeningTangential { mu_s, mu_d, slip_length } => {
                mu_s - (mu_s - mu_d) * (r.abs() / slip_length).min(1.0)
            }
            JKind::DescendingNormal { mu1, mu2, r0, r1 } => {
                if r < 0.0 {
                    0.0
                } else if r <= r0 {
                    mu1 * r
                } else {
                    mu1 * r0 - mu2 * (r.min(r1) - r0)
                }
            }
        }
    }

    /// The potential density itself.
    pub fn density(&self, r: f64) -> f64 {
        match self.kind {
            JKind::Zero => 0.0,
            JKind::SlipWeakeningTangential { mu_s, mu_d, slip_length } => {
                let a = (mu_s - mu_d) / slip_length;
                let s = r.abs();
                if s <= slip_length {
                    mu_s * s - 0.5 * a * s * s
                } else {
                    mu_s * slip_length - 0.5 * a * slip_length * slip_length + mu_d * (s - slip_length)
                }
            }
            JKind::DescendingNormal { mu1, mu2, r0, r1 } => {
                if r <= 0.0 {
                    0.0
                } else if r <= r0 {
                    0.5 * mu1 * r * r
                } else {
                    let s = r.min(r1) - r0;
                    let top = 0.5 * mu1 * r0 * r0 + mu1 * r0 * s - 0.5 * mu2 * s * s;
                    top + self.density_derivative(r1) * (r - r.min(r1))
                }
            }
        }
    }

    fn trace_component(&self, s: TraceSample) -> f64 {
        if self.acts_on_tangential() {
            s.tangential
        } else {
            s.normal
        }
    }

    /// Pointwise Clarke derivative `j0(arg; dir)`; the maximal branch is
    /// taken at kinks.
    pub fn point_directional(&self, arg: TraceSample, dir: TraceSample) -> f64 {
        let (r, d) = (self.trace_component(arg), self.trace_component(dir));
        match self.kind {
            JKind::Zero => 0.0,
            JKind::SlipWeakeningTangential { mu_s, .. } => {
                if r == 0.0 {
                    mu_s * d.abs()
                } else {
                    self.density_derivative(r) * r.signum() * d
                }
            }
            JKind::DescendingNormal { .. } => self.density_derivative(r) * d,
        }
    }

    /// Derivatives of the convex part `j + alpha r^2 / 2` (Huber-smoothed
    /// in the slip case), which is treated implicitly by the solver.
    pub fn convex_point_derivs(&self, arg: TraceSample, delta: f64) -> PointDerivs {
        match self.kind {
            JKind::Zero => PointDerivs::default(),
            JKind::SlipWeakeningTangential { mu_s, mu_d, slip_length } => {
                let a = self.alpha();
                let (hv, h1, h2) = huber(arg.tangential, delta);
                let (g1, g2) = if hv <= slip_length { (mu_s, 0.0) } else { (mu_d + a * hv, a) };
                PointDerivs { normal: (0.0, 0.0), tangential: (g1 * h1, g2 * h1 * h1 + g1 * h2) }
            }
            JKind::DescendingNormal { mu1, mu2, r0, r1 } => {
                let r = arg.normal;
                let slope = if r < 0.0 {
                    mu2
                } else if r <= r0 {
                    mu1 + mu2
                } else if r <= r1 {
                    0.0
                } else {
                    mu2
                };
                PointDerivs { normal: (self.density_derivative(r) + mu2 * r, slope), tangential: (0.0, 0.0) }
            }
        }
    }

    /// First derivative of the concave part `-alpha r^2 / 2` at the frozen trace.
    pub fn explicit_point_derivs(&self, frozen: TraceSample) -> PointDerivs {
        let a = self.alpha();
        match self.kind {
            JKind::Zero => PointDerivs::default(),
            JKind::SlipWeakeningTangential { .. } => {
                PointDerivs { normal: (0.0, 0.0), tangential: (-a * frozen.tangential, 0.0) }
            }
            JKind::DescendingNormal { .. } => PointDerivs { normal: (-a * frozen.normal, 0.0), tangential: (0.0, 0.0) },
        }
    }
}

/// `j0(gamma u; gamma v)` integrated over the region.
pub fn j_directional(
    spec: &NonconvexJSpec,
    quad: &TraceQuadrature,
    dofmap: &DofMap,
    base: &[f64],
    direction: &[f64],
) -> Result<f64> {
    dofmap.check_len(base)?;
    dofmap.check_len(direction)?;
    if spec.is_zero() {
        return Ok(0.0);
    }
    let b = quad.samples(dofmap, base);
    let d = quad.samples(dofmap, direction);
    Ok(quad.points.iter().zip(b.iter().zip(&d)).map(|(p, (b, d))| p.weight * spec.point_directional(*b, *d)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normal_sample(r: f64) -> TraceSample {
        TraceSample { normal: r, tangential: 0.0 }
    }

    fn tangential_sample(t: f64) -> TraceSample {
        TraceSample { normal: 0.0, tangential: t }
    }

    fn descending() -> NonconvexJSpec {
        NonconvexJSpec::descending_normal(RegionTag::Contact1, 2.0, 0.5, 0.01, 0.03).unwrap()
    }

    fn slip() -> NonconvexJSpec {
        NonconvexJSpec::slip_weakening(RegionTag::Contact2, 0.3, 0.1, 0.5).unwrap()
    }

    #[test]
    fn smooth_branch_is_classical() {
        let j = descending();
        let v = j.point_directional(normal_sample(0.004), normal_sample(1.5));
        assert!((v - 2.0 * 0.004 * 1.5).abs() < 1e-15);
        assert_eq!(NonconvexJSpec::zero().point_directional(normal_sample(1.0), normal_sample(1.0)), 0.0);
    }

    #[test]
    fn slip_kink_uses_maximal_branch() {
        let j = slip();
        assert_eq!(j.point_directional(tangential_sample(0.0), tangential_sample(-2.0)), 0.6);
        assert_eq!(j.point_directional(tangential_sample(0.0), tangential_sample(2.0)), 0.6);
        assert!((j.point_directional(tangential_sample(-0.25), tangential_sample(1.0)) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters() {
        assert!(NonconvexJSpec::slip_weakening(RegionTag::Contact2, 0.1, 0.3, 0.5).is_err());
        assert!(NonconvexJSpec::slip_weakening(RegionTag::Contact2, 0.3, 0.1, 0.0).is_err());
        assert!(NonconvexJSpec::descending_normal(RegionTag::Contact1, 1.0, 10.0, 0.01, 0.03).is_err());
        assert!(NonconvexJSpec::descending_normal(RegionTag::Contact1, 1.0, 0.1, 0.03, 0.01).is_err());
    }

    #[test]
    fn density_is_antiderivative() {
        let h = 1e-7;
        for j in [descending(), slip()] {
            for r in [-0.2, 0.003, 0.02, 0.05, 0.3, 0.7] {
                let fd = (j.density(r + h) - j.density(r - h)) / (2.0 * h);
                let expect = if j.acts_on_tangential() { j.density_derivative(r) * r.signum() } else { j.density_derivative(r) };
                assert!((fd - expect).abs() < 1e-6, "r = {r}");
            }
        }
    }

    #[test]
    fn convex_split_recovers_derivative() {
        for r in [-0.1, 0.005, 0.02, 0.2] {
            let j = descending();
            let s = normal_sample(r);
            let total = j.convex_point_derivs(s, 0.0).normal.0 + j.explicit_point_derivs(s).normal.0;
            assert!((total - j.density_derivative(r)).abs() < 1e-15);
        }
        let j = slip();
        for t in [-0.8, -0.2, 0.3, 0.9] {
            let s = tangential_sample(t);
            let total = j.convex_point_derivs(s, 0.0).tangential.0 + j.explicit_point_derivs(s).tangential.0;
            assert!((total - j.density_derivative(t) * t.signum()).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn relaxed_monotonicity(r1 in -0.1f64..0.1, r2 in -0.1f64..0.1, t1 in -1.5f64..1.5, t2 in -1.5f64..1.5) {
            let j = descending();
            let lhs = j.point_directional(normal_sample(r1), normal_sample(r2 - r1))
                + j.point_directional(normal_sample(r2), normal_sample(r1 - r2));
            prop_assert!(lhs <= j.alpha() * (r1 - r2).powi(2) + 1e-12);
            let j = slip();
            let lhs = j.point_directional(tangential_sample(t1), tangential_sample(t2 - t1))
                + j.point_directional(tangential_sample(t2), tangential_sample(t1 - t2));
            prop_assert!(lhs <= j.alpha() * (t1 - t2).powi(2) + 1e-12);
        }

        #[test]
        fn convex_part_is_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            for j in [descending(), slip()] {
                let ga = j.convex_point_derivs(TraceSample { normal: a, tangential: a }, 1e-3);
                let gb = j.convex_point_derivs(TraceSample { normal: b, tangential: b }, 1e-3);
                let d = (ga.normal.0 + ga.tangential.0) - (gb.normal.0 + gb.tangential.0);
                prop_assert!(d * (a - b) >= -1e-14);
            }
        }
    }
}
