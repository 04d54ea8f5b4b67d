//! Problem ingredients: the convex functional `phi`, the nonconvex potential
//! `j`, the penalty operator, labelled problem instances and their constants.

mod constants;
mod penalty;
mod phi;
mod potential;
mod params;
mod problem;

use std::fmt;
use std::sync::Arc;

pub use constants::{report_constants, ConstantsReport, EigenEstimates, Verdict};
pub use penalty::{penalty_jacobian, penalty_residual, ConstraintPoint, ConstraintSet, PenaltyKind, PenaltyOpSpec};
pub use phi::{phi_value, ConvexPhiSpec, PhiKind};
pub use potential::{j_directional, JKind, NonconvexJSpec};
pub(crate) use params::{parse_f64, parse_usize};
pub use params::{JChoice, MaterialKind, PenaltyChoice, PhiChoice, ProblemParams};
pub use problem::{Geometry, ProblemLabel, ProblemSpec};

/// A real function of position, evaluated at quadrature points or vertices.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>,
    constant: Option<f64>,
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField { f: Arc::new(move |_| c), constant: Some(c) }
    }

    pub fn new(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField { f: Arc::new(f), constant: None }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        (self.f)(x)
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(c) => write!(f, "ScalarField::constant({c})"),
            None => f.write_str("ScalarField(<fn>)"),
        }
    }
}

/// Huber surrogate `sqrt(r^2 + delta^2) - delta` of `|r|` with its first
/// and second derivatives. `delta = 0` gives `|r|` (derivative `sign(r)`).
pub fn huber(r: f64, delta: f64) -> (f64, f64, f64) {
    if delta <= 0.0 {
        return (r.abs(), if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 }, 0.0);
    }
    let s = r.hypot(delta);
    (s - delta, r / s, delta * delta / (s * s * s))
}

/// Pointwise derivative data of a trace functional: first and second
/// derivatives with respect to the normal and the tangential trace.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointDerivs {
    pub normal: (f64, f64),
    pub tangential: (f64, f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huber_limits() {
        let delta = 1e-3;
        assert_eq!(huber(0.0, delta).0, 0.0);
        for r in [0.5, -2.0, 10.0] {
            let v = huber(r, delta).0;
            let gap = v - (r.abs() - delta);
            assert!(gap > 0.0 && gap <= delta * delta / (2.0 * r.abs()) + 4.0 * f64::EPSILON * r.abs());
        }
        assert_eq!(huber(-3.0, 0.0), (3.0, -1.0, 0.0));
        let (v0, d0, dd0) = huber(0.2, 0.1);
        let h = 1e-6;
        let (v1, d1, _) = huber(0.2 + h, 0.1);
        assert!(((v1 - v0) / h - d0).abs() < 1e-5);
        assert!(((d1 - d0) / h - dd0).abs() < 1e-4);
    }

    #[test]
    fn scalar_field_constant() {
        let f = ScalarField::constant(2.5);
        assert_eq!(f.eval([3.0, 1.0]), 2.5);
        assert_eq!(f.as_constant(), Some(2.5));
        assert_eq!(ScalarField::new(|x| x[0]).as_constant(), None);
    }
}
