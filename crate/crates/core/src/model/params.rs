//! Plain-data problem parameters: every field is a label, a kind name or a
//! scalar, so a problem round-trips through flat `section.key = value` text.

use crate::error::{invalid, Error, Result};
use crate::fem::{LoadSpec, MaterialLaw};
use crate::mesh::RegionTag;

use super::{ConvexPhiSpec, Geometry, NonconvexJSpec, PenaltyOpSpec, ProblemLabel, ProblemSpec, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialKind {
    Linear,
    Hencky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiChoice {
    Zero,
    Tresca,
    Coulomb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JChoice {
    Zero,
    SlipWeakening,
    DescendingNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyChoice {
    Normal,
    Gap,
    Point,
}

/// Fields that do not belong to the selected kind are ignored when building
/// a `ProblemSpec` and omitted when writing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    pub label: ProblemLabel,
    pub geometry: Geometry,

    pub material: MaterialKind,
    pub lame_lambda: f64,
    pub lame_mu: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub saturation: f64,

    /// Body force `body + body_slope * x + body_sine * sin(2 pi x)`.
    pub body: [f64; 2],
    pub body_slope: [f64; 2],
    pub body_sine: [f64; 2],
    pub traction: [f64; 2],

    pub phi: PhiChoice,
    pub phi_region: RegionTag,
    pub normal_bound: f64,
    pub tangential_bound: f64,
    pub friction_mu: f64,
    pub r_max: f64,
    /// `None` selects `h^2` per level.
    pub smoothing_delta: Option<f64>,

    pub j: JChoice,
    pub j_region: RegionTag,
    pub mu_s: f64,
    pub mu_d: f64,
    pub slip_length: f64,
    pub j_mu1: f64,
    pub j_mu2: f64,
    pub r0: f64,
    pub r1: f64,

    pub penalty: PenaltyChoice,
    pub penalty_region: RegionTag,
    pub gap: f64,
}

impl ProblemParams {
    fn blank(label: ProblemLabel) -> Self {
        ProblemParams {
            label,
            geometry: Geometry::default(),
            material: MaterialKind::Linear,
            lame_lambda: 0.0,
            lame_mu: 0.5,
            mu0: 1.0,
            mu1: 0.0,
            saturation: 0.0,
            body: [0.0; 2],
            body_slope: [0.0; 2],
            body_sine: [0.0; 2],
            traction: [0.0; 2],
            phi: PhiChoice::Zero,
            phi_region: RegionTag::Contact1,
            normal_bound: 0.0,
            tangential_bound: 0.0,
            friction_mu: 0.0,
            r_max: 1.0,
            smoothing_delta: None,
            j: JChoice::Zero,
            j_region: RegionTag::Contact1,
            mu_s: 0.0,
            mu_d: 0.0,
            slip_length: 1.0,
            j_mu1: 0.0,
            j_mu2: 0.0,
            r0: 1.0,
            r1: 1.0,
            penalty: PenaltyChoice::Normal,
            penalty_region: RegionTag::Contact1,
            gap: 0.0,
        }
    }

    /// Parameters of the shipped default instance for `label`.
    pub fn default_for(label: ProblemLabel) -> Self {
        let mut p = Self::blank(label);
        match label {
            ProblemLabel::ScalarSignorini1D => {
                p.body = [1.0, 0.0];
                p.penalty = PenaltyChoice::Point;
            }
            ProblemLabel::ScalarObstacle2D => {
                p.body_sine = [10.0, 0.0];
            }
            ProblemLabel::ViOnly => {
                p.lame_lambda = 1.0;
                p.lame_mu = 1.0;
                p.body = [0.0, -1.0];
                p.traction = [0.0, 0.4];
            }
            ProblemLabel::P1Contact => {
                p.lame_lambda = 1.0;
                p.lame_mu = 1.0;
                p.body = [0.0, -1.0];
                p.traction = [0.5, 0.0];
                p.phi = PhiChoice::Tresca;
                p.phi_region = RegionTag::Contact2;
                p.normal_bound = 0.2;
                p.j = JChoice::SlipWeakening;
                p.j_region = RegionTag::Contact2;
                p.mu_s = 0.3;
                p.mu_d = 0.1;
                p.slip_length = 1.0;
            }
            ProblemLabel::P2Contact | ProblemLabel::HviOnly => {
                p.material = MaterialKind::Hencky;
                p.mu0 = 1.0;
                p.mu1 = 0.5;
                p.saturation = 1.0;
                p.body = [0.0, -1.0];
                p.traction = [0.5, 0.0];
                if label == ProblemLabel::P2Contact {
                    p.phi = PhiChoice::Coulomb;
                    p.friction_mu = 0.2;
                    p.r_max = 0.05;
                }
                p.j = JChoice::DescendingNormal;
                p.j_mu1 = 100.0;
                p.j_mu2 = 0.5;
                p.r0 = 0.01;
                p.r1 = 0.03;
                p.penalty = PenaltyChoice::Gap;
                p.gap = 0.04;
            }
        }
        p
    }

    pub fn build(&self) -> Result<ProblemSpec> {
        let material = match self.material {
            MaterialKind::Linear => MaterialLaw::linear(self.lame_lambda, self.lame_mu)?,
            MaterialKind::Hencky => MaterialLaw::hencky(self.mu0, self.mu1, self.saturation)?,
        };
        let loads = LoadSpec::affine_sine_in_x(self.body, self.body_slope, self.body_sine, self.traction);
        let mut phi = match self.phi {
            PhiChoice::Zero => ConvexPhiSpec::zero(),
            PhiChoice::Tresca => ConvexPhiSpec::tresca(
                self.phi_region,
                ScalarField::constant(self.normal_bound),
                ScalarField::constant(self.tangential_bound),
            )?,
            PhiChoice::Coulomb => ConvexPhiSpec::coulomb(self.phi_region, self.friction_mu, self.r_max)?,
        };
        if let Some(delta) = self.smoothing_delta {
            phi = phi.with_smoothing(delta)?;
        }
        let j = match self.j {
            JChoice::Zero => NonconvexJSpec::zero(),
            JChoice::SlipWeakening => NonconvexJSpec::slip_weakening(self.j_region, self.mu_s, self.mu_d, self.slip_length)?,
            JChoice::DescendingNormal => NonconvexJSpec::descending_normal(self.j_region, self.j_mu1, self.j_mu2, self.r0, self.r1)?,
        };
        let penalty = match self.penalty {
            PenaltyChoice::Normal => PenaltyOpSpec::normal(self.penalty_region),
            PenaltyChoice::Gap => PenaltyOpSpec::gap(self.penalty_region, ScalarField::constant(self.gap))?,
            PenaltyChoice::Point => PenaltyOpSpec::point(),
        };
        ProblemSpec::new(self.label, self.geometry, material, loads, phi, j, penalty)
    }

    /// Entries describing these parameters, in a fixed order.
    pub fn to_entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        let num = |x: f64| format!("{x:?}");
        put("problem.label", self.label.to_string());
        put("geometry.width", num(self.geometry.width));
        put("geometry.height", num(self.geometry.height));
        put("geometry.nx", self.geometry.nx.to_string());
        put("geometry.ny", self.geometry.ny.to_string());
        match self.material {
            MaterialKind::Linear => {
                put("material.kind", "linear".into());
                put("material.lambda", num(self.lame_lambda));
                put("material.mu", num(self.lame_mu));
            }
            MaterialKind::Hencky => {
                put("material.kind", "hencky".into());
                put("material.mu0", num(self.mu0));
                put("material.mu1", num(self.mu1));
                put("material.saturation", num(self.saturation));
            }
        }
        for (name, v) in [("body", self.body), ("body_slope", self.body_slope), ("body_sine", self.body_sine), ("traction", self.traction)] {
            put(&format!("load.{name}_x"), num(v[0]));
            put(&format!("load.{name}_y"), num(v[1]));
        }
        match self.phi {
            PhiChoice::Zero => put("phi.kind", "zero".into()),
            PhiChoice::Tresca => {
                put("phi.kind", "tresca".into());
                put("phi.region", self.phi_region.to_string());
                put("phi.normal_bound", num(self.normal_bound));
                put("phi.tangential_bound", num(self.tangential_bound));
            }
            PhiChoice::Coulomb => {
                put("phi.kind", "coulomb".into());
                put("phi.region", self.phi_region.to_string());
                put("phi.friction_mu", num(self.friction_mu));
                put("phi.r_max", num(self.r_max));
            }
        }
        put("phi.smoothing_delta", self.smoothing_delta.map_or_else(|| "auto".to_string(), num));
        match self.j {
            JChoice::Zero => put("j.kind", "zero".into()),
            JChoice::SlipWeakening => {
                put("j.kind", "slip_weakening".into());
                put("j.region", self.j_region.to_string());
                put("j.mu_s", num(self.mu_s));
                put("j.mu_d", num(self.mu_d));
                put("j.slip_length", num(self.slip_length));
            }
            JChoice::DescendingNormal => {
                put("j.kind", "descending_normal".into());
                put("j.region", self.j_region.to_string());
                put("j.mu1", num(self.j_mu1));
                put("j.mu2", num(self.j_mu2));
                put("j.r0", num(self.r0));
                put("j.r1", num(self.r1));
            }
        }
        match self.penalty {
            PenaltyChoice::Normal => {
                put("penalty.kind", "normal".into());
                put("penalty.region", self.penalty_region.to_string());
            }
            PenaltyChoice::Gap => {
                put("penalty.kind", "gap".into());
                put("penalty.region", self.penalty_region.to_string());
                put("penalty.gap", num(self.gap));
            }
            PenaltyChoice::Point => put("penalty.kind", "point".into()),
        }
        out
    }

    /// Applies one entry. Returns `Ok(false)` for keys outside the problem
    /// sections. `problem.label` is not settable here.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let v = value.trim();
        let f = || parse_f64(key, v);
        let region = || v.parse::<RegionTag>().map_err(|_| invalid(key, format!("unknown region `{v}`")));
        match key {
            "geometry.width" => self.geometry.width = f()?,
            "geometry.height" => self.geometry.height = f()?,
            "geometry.nx" => self.geometry.nx = parse_usize(key, v)?,
            "geometry.ny" => self.geometry.ny = parse_usize(key, v)?,
            "material.kind" => {
                self.material = match v {
                    "linear" => MaterialKind::Linear,
                    "hencky" => MaterialKind::Hencky,
                    _ => return Err(unknown_kind(key, v)),
                }
            }
            "material.lambda" => self.lame_lambda = f()?,
            "material.mu" => self.lame_mu = f()?,
            "material.mu0" => self.mu0 = f()?,
            "material.mu1" => self.mu1 = f()?,
            "material.saturation" => self.saturation = f()?,
            "load.body_x" => self.body[0] = f()?,
            "load.body_y" => self.body[1] = f()?,
            "load.body_slope_x" => self.body_slope[0] = f()?,
            "load.body_slope_y" => self.body_slope[1] = f()?,
            "load.body_sine_x" => self.body_sine[0] = f()?,
            "load.body_sine_y" => self.body_sine[1] = f()?,
            "load.traction_x" => self.traction[0] = f()?,
            "load.traction_y" => self.traction[1] = f()?,
            "phi.kind" => {
                self.phi = match v {
                    "zero" => PhiChoice::Zero,
                    "tresca" => PhiChoice::Tresca,
                    "coulomb" => PhiChoice::Coulomb,
                    _ => return Err(unknown_kind(key, v)),
                }
            }
            "phi.region" => self.phi_region = region()?,
            "phi.normal_bound" => self.normal_bound = f()?,
            "phi.tangential_bound" => self.tangential_bound = f()?,
            "phi.friction_mu" => self.friction_mu = f()?,
            "phi.r_max" => self.r_max = f()?,
            "phi.smoothing_delta" => self.smoothing_delta = if v == "auto" { None } else { Some(f()?) },
            "j.kind" => {
                self.j = match v {
                    "zero" => JChoice::Zero,
                    "slip_weakening" => JChoice::SlipWeakening,
                    "descending_normal" => JChoice::DescendingNormal,
                    _ => return Err(unknown_kind(key, v)),
                }
            }
            "j.region" => self.j_region = region()?,
            "j.mu_s" => self.mu_s = f()?,
            "j.mu_d" => self.mu_d = f()?,
            "j.slip_length" => self.slip_length = f()?,
            "j.mu1" => self.j_mu1 = f()?,
            "j.mu2" => self.j_mu2 = f()?,
            "j.r0" => self.r0 = f()?,
            "j.r1" => self.r1 = f()?,
            "penalty.kind" => {
                self.penalty = match v {
                    "normal" => PenaltyChoice::Normal,
                    "gap" => PenaltyChoice::Gap,
                    "point" => PenaltyChoice::Point,
                    _ => return Err(unknown_kind(key, v)),
                }
            }
            "penalty.region" => self.penalty_region = region()?,
            "penalty.gap" => self.gap = f()?,
            _ => {
                let section = key.split('.').next().unwrap_or("");
                if ["geometry", "material", "load", "phi", "j", "penalty"].contains(&section) {
                    return Err(Error::Parse(format!("unknown key `{key}`")));
                }
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn unknown_kind(key: &str, v: &str) -> Error {
    invalid(key, format!("unknown kind `{v}`"))
}

pub(crate) fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| invalid(key, format!("`{v}` is not a number")))
}

pub(crate) fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| invalid(key, format!("`{v}` is not a nonnegative integer")))
}
