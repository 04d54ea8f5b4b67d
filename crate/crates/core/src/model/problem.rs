//! Labelled problem instances: the data tuple `(A, phi, j, P, f, K)` on a
//! base mesh together with consistency rules between the ingredients.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::fem::{LoadSpec, MaterialLaw, TraceMode};
use crate::mesh::{build_interval_mesh, build_rectangle_mesh, RegionTag, SideTags, TriangulationLevel};

use super::{ConvexPhiSpec, JKind, NonconvexJSpec, PenaltyKind, PenaltyOpSpec, PhiKind, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemLabel {
    P1Contact,
    P2Contact,
    ScalarSignorini1D,
    ScalarObstacle2D,
    ViOnly,
    HviOnly,
}

impl ProblemLabel {
    pub const ALL: [ProblemLabel; 6] = [
        ProblemLabel::P1Contact,
        ProblemLabel::P2Contact,
        ProblemLabel::ScalarSignorini1D,
        ProblemLabel::ScalarObstacle2D,
        ProblemLabel::ViOnly,
        ProblemLabel::HviOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemLabel::P1Contact => "P1_contact",
            ProblemLabel::P2Contact => "P2_contact",
            ProblemLabel::ScalarSignorini1D => "ScalarSignorini1D",
            ProblemLabel::ScalarObstacle2D => "ScalarObstacle2D",
            ProblemLabel::ViOnly => "VI_only",
            ProblemLabel::HviOnly => "HVI_only",
        }
    }

    pub fn is_scalar(self) -> bool {
        matches!(self, ProblemLabel::ScalarSignorini1D | ProblemLabel::ScalarObstacle2D)
    }

    pub fn side_tags(self) -> SideTags {
        use RegionTag::*;
        match self {
            ProblemLabel::ScalarObstacle2D => SideTags { bottom: Contact1, right: Neumann, top: Dirichlet, left: Neumann },
            ProblemLabel::P1Contact => SideTags { bottom: Contact1, right: Contact2, top: Neumann, left: Dirichlet },
            _ => SideTags { bottom: Contact1, right: Neumann, top: Neumann, left: Dirichlet },
        }
    }
}

impl fmt::Display for ProblemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemLabel::ALL
            .into_iter()
            .find(|l| l.name() == s.trim())
            .ok_or_else(|| invalid("problem.label", format!("unknown label `{}`", s.trim())))
    }
}

/// Rectangle `[0, width] x [0, height]` split into `nx x ny` cells (the
/// unit interval with `nx` elements for 1D labels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { width: 1.0, height: 1.0, nx: 2, ny: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub label: ProblemLabel,
    pub geometry: Geometry,
    pub base_mesh: TriangulationLevel,
    /// 1 for scalar fields, 2 for displacements.
    pub components: usize,
    pub material: MaterialLaw,
    pub loads: LoadSpec,
    pub phi: ConvexPhiSpec,
    pub j: NonconvexJSpec,
    pub penalty: PenaltyOpSpec,
}

impl ProblemSpec {
    pub fn new(
        label: ProblemLabel,
        geometry: Geometry,
        material: MaterialLaw,
        loads: LoadSpec,
        phi: ConvexPhiSpec,
        j: NonconvexJSpec,
        penalty: PenaltyOpSpec,
    ) -> Result<Self> {
        let base_mesh = if label == ProblemLabel::ScalarSignorini1D {
            build_interval_mesh(geometry.nx)?
        } else {
            build_rectangle_mesh(geometry.width, geometry.height, geometry.nx, geometry.ny, label.side_tags())?
        };
        let components = if label.is_scalar() { 1 } else { 2 };
        let spec = ProblemSpec { label, geometry, base_mesh, components, material, loads, phi, j, penalty };
        spec.validate()?;
        Ok(spec)
    }

    /// Shipped default instance for a label.
    pub fn default_for(label: ProblemLabel) -> Self {
        ProblemParams::default_for(label).build().expect("shipped defaults are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let mismatch = |msg: &str| Err(Error::RegionMismatch(format!("{}: {msg}", self.label)));
        match self.label {
            ProblemLabel::ViOnly if !self.j.is_zero() => return mismatch("requires j = Zero"),
            ProblemLabel::HviOnly if !self.phi.is_zero() => return mismatch("requires phi = Zero"),
            ProblemLabel::P1Contact => {
                if !matches!(self.penalty.kind, PenaltyKind::NormalPositivePart)
                    || !matches!(self.phi.kind, PhiKind::GivenBoundTresca { .. })
                    || !matches!(self.j.kind, JKind::SlipWeakeningTangential { .. })
                {
                    return mismatch("pairs the normal penalty with a Tresca bound and slip weakening");
                }
            }
            ProblemLabel::P2Contact => {
                if !matches!(self.penalty.kind, PenaltyKind::GapPositivePart { .. })
                    || !matches!(self.phi.kind, PhiKind::CoulombBound { .. })
                    || !matches!(self.j.kind, JKind::DescendingNormal { .. })
                {
                    return mismatch("pairs the gap penalty with a Coulomb bound and descending normal compliance");
                }
            }
            ProblemLabel::ScalarSignorini1D => {
                if !matches!(self.penalty.kind, PenaltyKind::PointConstraint) {
                    return mismatch("uses the point constraint");
                }
            }
            _ => {}
        }
        if self.label.is_scalar() && (self.j.acts_on_tangential() || !matches!(self.phi.kind, PhiKind::Zero | PhiKind::GivenBoundTresca { .. })) {
            return mismatch("scalar problems have no tangential trace");
        }
        Ok(())
    }

    pub fn mesh_at(&self, level: usize) -> Result<TriangulationLevel> {
        self.base_mesh.refined(level)
    }

    /// Monotonicity constant `m_A` of the operator.
    pub fn m_a(&self) -> f64 {
        self.material.monotonicity_constant()
    }

    /// Whether the solver needs an outer fixed point (a frozen argument in
    /// `phi` or an explicitly treated part of `j`).
    pub fn has_frozen_terms(&self) -> bool {
        self.phi.has_frozen_argument() || self.j.alpha() > 0.0
    }

    /// Trace eigenproblems whose constants enter the smallness condition.
    pub fn required_eigenproblems(&self) -> Vec<(TraceMode, RegionTag)> {
        let mut out = Vec::new();
        if self.phi.alpha() > 0.0 {
            out.push((self.vector_mode(TraceMode::FullVector), self.phi.region));
        }
        if self.j.alpha() > 0.0 {
            let mode = if self.j.acts_on_tangential() { TraceMode::Tangential } else { TraceMode::Normal };
            out.push((self.vector_mode(mode), self.j.region));
        }
        out
    }

    /// Scalar problems use the scalar trace for every mode.
    pub fn vector_mode(&self, mode: TraceMode) -> TraceMode {
        if self.components == 1 {
            TraceMode::Scalar
        } else {
            mode
        }
    }

    /// Same problem data with `j` replaced (relabelled when needed).
    pub fn with_j(&self, j: NonconvexJSpec) -> Result<Self> {
        let mut s = self.clone();
        s.j = j;
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_consistent() {
        for label in ProblemLabel::ALL {
            let s = ProblemSpec::default_for(label);
            assert_eq!(s.label, label);
            assert!(s.validate().is_ok());
            assert_eq!(label.name().parse::<ProblemLabel>().unwrap(), label);
        }
        assert!("bogus".parse::<ProblemLabel>().is_err());
    }

    #[test]
    fn label_rules() {
        let vi = ProblemSpec::default_for(ProblemLabel::ViOnly);
        let j = NonconvexJSpec::descending_normal(RegionTag::Contact1, 1.0, 0.1, 0.01, 0.02).unwrap();
        assert!(matches!(vi.with_j(j), Err(Error::RegionMismatch(_))));
        let p1 = ProblemSpec::default_for(ProblemLabel::P1Contact);
        assert!(p1.with_j(NonconvexJSpec::zero()).is_err());
        let mut hvi = ProblemSpec::default_for(ProblemLabel::HviOnly);
        hvi.phi = ConvexPhiSpec::coulomb(RegionTag::Contact1, 0.1, 0.1).unwrap();
        assert!(hvi.validate().is_err());
    }

    #[test]
    fn eigenproblems_needed() {
        let p2 = ProblemSpec::default_for(ProblemLabel::P2Contact);
        assert_eq!(
            p2.required_eigenproblems(),
            vec![(TraceMode::FullVector, RegionTag::Contact1), (TraceMode::Normal, RegionTag::Contact1)]
        );
        let p1 = ProblemSpec::default_for(ProblemLabel::P1Contact);
        assert_eq!(p1.required_eigenproblems(), vec![(TraceMode::Tangential, RegionTag::Contact2)]);
        assert!(ProblemSpec::default_for(ProblemLabel::ViOnly).required_eigenproblems().is_empty());
        assert!(!ProblemSpec::default_for(ProblemLabel::ScalarObstacle2D).has_frozen_terms());
    }
}
