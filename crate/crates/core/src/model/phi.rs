//! Convex, possibly nonsmooth boundary functional `phi(w, v)`.

use crate::error::{invalid, Result};
use crate::fem::{DofMap, TraceQuadrature, TraceSample};
use crate::mesh::RegionTag;

use super::{huber, PointDerivs, ScalarField};

#[derive(Debug, Clone)]
pub enum PhiKind {
    Zero,
    /// `int F |v_nu| + F_tau |v_tau| ds` with given bounds `F, F_tau >= 0`.
    GivenBoundTresca { normal_bound: ScalarField, tangential_bound: ScalarField },
    /// `int F_b(w_nu) |v_tau| ds`, `F_b(r) = friction_mu * min(max(r, 0), r_max)`.
    CoulombBound { friction_mu: f64, r_max: f64 },
}

#[derive(Debug, Clone)]
pub struct ConvexPhiSpec {
    pub kind: PhiKind,
    pub region: RegionTag,
    /// Huber radius; `None` means `h^2` on each mesh level.
    pub smoothing_delta: Option<f64>,
}

impl ConvexPhiSpec {
    pub fn zero() -> Self {
        ConvexPhiSpec { kind: PhiKind::Zero, region: RegionTag::Contact1, smoothing_delta: None }
    }

    pub fn tresca(region: RegionTag, normal_bound: ScalarField, tangential_bound: ScalarField) -> Result<Self> {
        for (name, f) in [("phi.normal_bound", &normal_bound), ("phi.tangential_bound", &tangential_bound)] {
            if let Some(c) = f.as_constant() {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(invalid(name, "must be nonnegative and finite"));
                }
            }
        }
        Ok(ConvexPhiSpec {
            kind: PhiKind::GivenBoundTresca { normal_bound, tangential_bound },
            region,
            smoothing_delta: None,
        })
    }

    pub fn coulomb(region: RegionTag, friction_mu: f64, r_max: f64) -> Result<Self> {
        if !(friction_mu >= 0.0 && friction_mu.is_finite()) {
            return Err(invalid("phi.friction_mu", "must be nonnegative and finite"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(invalid("phi.r_max", "must be positive and finite"));
        }
        Ok(ConvexPhiSpec { kind: PhiKind::CoulombBound { friction_mu, r_max }, region, smoothing_delta: None })
    }

    pub fn with_smoothing(mut self, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(invalid("phi.smoothing_delta", "must be nonnegative and finite"));
        }
        self.smoothing_delta = Some(delta);
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PhiKind::Zero)
    }

    /// Constant in `phi(z1,z4) - phi(z1,z3) + phi(z2,z3) - phi(z2,z4) <= alpha |z1-z2| |z3-z4|`.
    pub fn alpha(&self) -> f64 {
        match self.kind {
            PhiKind::CoulombBound { friction_mu, .. } => friction_mu,
            _ => 0.0,
        }
    }

    /// Whether `phi` depends on its first argument.
    pub fn has_frozen_argument(&self) -> bool {
        self.alpha() > 0.0
    }

    pub fn delta(&self, h: f64) -> f64 {
        self.smoothing_delta.unwrap_or(h * h)
    }

    pub fn coulomb_bound(friction_mu: f64, r_max: f64, r: f64) -> f64 {
        friction_mu * r.clamp(0.0, r_max)
    }

    pub fn point_value(&self, x: [f64; 2], frozen: TraceSample, arg: TraceSample, delta: f64) -> f64 {
        match &self.kind {
            PhiKind::Zero => 0.0,
            PhiKind::GivenBoundTresca { normal_bound, tangential_bound } => {
                normal_bound.eval(x) * huber(arg.normal, delta).0 + tangential_bound.eval(x) * huber(arg.tangential, delta).0
            }
            PhiKind::CoulombBound { friction_mu, r_max } => {
                Self::coulomb_bound(*friction_mu, *r_max, frozen.normal) * huber(arg.tangential, delta).0
            }
        }
    }

    /// Derivatives of `point_value` in the second argument.
    pub fn point_derivs(&self, x: [f64; 2], frozen: TraceSample, arg: TraceSample, delta: f64) -> PointDerivs {
        let scaled = |c: f64, r: f64| {
            let (_, d1, d2) = huber(r, delta);
            (c * d1, c * d2)
        };
        match &self.kind {
            PhiKind::Zero => PointDerivs::default(),
            PhiKind::GivenBoundTresca { normal_bound, tangential_bound } => PointDerivs {
                normal: scaled(normal_bound.eval(x), arg.normal),
                tangential: scaled(tangential_bound.eval(x), arg.tangential),
            },
            PhiKind::CoulombBound { friction_mu, r_max } => PointDerivs {
                normal: (0.0, 0.0),
                tangential: scaled(Self::coulomb_bound(*friction_mu, *r_max, frozen.normal), arg.tangential),
            },
        }
    }
}

/// `phi(gamma w, gamma v)` by Gauss quadrature over the region.
pub fn phi_value(
    spec: &ConvexPhiSpec,
    quad: &TraceQuadrature,
    dofmap: &DofMap,
    frozen: &[f64],
    arg: &[f64],
    delta: f64,
) -> Result<f64> {
    dofmap.check_len(frozen)?;
    dofmap.check_len(arg)?;
    if spec.is_zero() {
        return Ok(0.0);
    }
    let ws = quad.samples(dofmap, frozen);
    let vs = quad.samples(dofmap, arg);
    Ok(quad
        .points
        .iter()
        .zip(ws.iter().zip(&vs))
        .map(|(p, (w, v))| p.weight * spec.point_value(p.x, *w, *v, delta))
        .sum())
}
