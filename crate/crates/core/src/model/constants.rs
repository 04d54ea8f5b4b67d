//! Smallness condition `alpha_phi c_phi^2 + alpha_j c_j^2 < m_A` and its
//! contact-problem forms, evaluated from trace eigenvalue estimates.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::TraceMode;
use crate::mesh::RegionTag;

use super::{ProblemLabel, ProblemSpec};

/// Smallest trace eigenvalues, keyed by mode and region.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EigenEstimates {
    pub entries: Vec<(TraceMode, RegionTag, f64)>,
}

impl EigenEstimates {
    pub fn insert(&mut self, mode: TraceMode, region: RegionTag, lambda: f64) {
        self.entries.retain(|e| (e.0, e.1) != (mode, region));
        self.entries.push((mode, region, lambda));
    }

    pub fn get(&self, mode: TraceMode, region: RegionTag) -> Option<f64> {
        self.entries.iter().find(|e| (e.0, e.1) == (mode, region)).map(|e| e.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub label: ProblemLabel,
    /// Full-trace eigenvalue on the contact region.
    pub lambda_1v: Option<f64>,
    /// Normal-trace eigenvalue on the contact region.
    pub lambda_1nuv: Option<f64>,
    /// Tangential-trace eigenvalue on the `j` region (slip problems).
    pub lambda_1tauv: Option<f64>,
    pub c_phi: Option<f64>,
    pub c_j: Option<f64>,
    pub m_a: f64,
    pub alpha_phi: f64,
    pub alpha_j: f64,
    pub smallness_margin: f64,
    pub verdict: Verdict,
    pub inequality: &'static str,
}

impl ConstantsReport {
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.12e}"));
        let mut s = String::new();
        let _ = writeln!(s, "label={}", self.label);
        let _ = writeln!(s, "lambda_1V={}", opt(self.lambda_1v));
        let _ = writeln!(s, "lambda_1nuV={}", opt(self.lambda_1nuv));
        let _ = writeln!(s, "lambda_1tauV={}", opt(self.lambda_1tauv));
        let _ = writeln!(s, "c_phi={}", opt(self.c_phi));
        let _ = writeln!(s, "c_j={}", opt(self.c_j));
        let _ = writeln!(s, "m_A={:.12e}", self.m_a);
        let _ = writeln!(s, "alpha_phi={:.12e}", self.alpha_phi);
        let _ = writeln!(s, "alpha_j={:.12e}", self.alpha_j);
        let _ = writeln!(s, "smallness_margin={:.12e}", self.smallness_margin);
        let _ = writeln!(s, "inequality={}", self.inequality);
        let _ = writeln!(s, "verdict={}", self.verdict.name());
        s
    }
}

/// Evaluates the smallness condition of `spec` with estimated eigenvalues.
///
/// `c = lambda^{-1/2}` for the trace map of each term; terms with a zero
/// constant do not need an estimate.
pub fn report_constants(spec: &ProblemSpec, est: &EigenEstimates) -> Result<ConstantsReport> {
    let region = spec.penalty.region;
    let full = est.get(spec.vector_mode(TraceMode::FullVector), region);
    let normal = est.get(spec.vector_mode(TraceMode::Normal), region);
    let tangential = if spec.components == 2 { est.get(TraceMode::Tangential, spec.j.region) } else { None };

    let phi_lambda = est.get(spec.vector_mode(TraceMode::FullVector), spec.phi.region);
    let j_mode = if spec.j.acts_on_tangential() { TraceMode::Tangential } else { TraceMode::Normal };
    let j_lambda = est.get(spec.vector_mode(j_mode), spec.j.region);
    let alpha_phi = spec.phi.alpha();
    let alpha_j = spec.j.alpha();
    if alpha_phi > 0.0 && phi_lambda.is_none() {
        return Err(Error::MissingEigenvalue("full trace eigenvalue for the phi term"));
    }
    if alpha_j > 0.0 && j_lambda.is_none() {
        return Err(Error::MissingEigenvalue("trace eigenvalue for the j term"));
    }
    for lam in [phi_lambda, j_lambda].into_iter().flatten() {
        if !(lam > 0.0) {
            return Err(Error::EigenNonconvergence(format!("nonpositive eigenvalue estimate {lam}")));
        }
    }
    let c_phi = phi_lambda.map(|l| l.powf(-0.5));
    let c_j = j_lambda.map(|l| l.powf(-0.5));
    let term = |alpha: f64, lam: Option<f64>| if alpha > 0.0 { alpha / lam.expect("checked") } else { 0.0 };
    let lhs = term(alpha_phi, phi_lambda) + term(alpha_j, j_lambda);
    let m_a = spec.m_a();
    let margin = m_a - lhs;
    let inequality = match spec.label {
        ProblemLabel::P1Contact => "alpha_jtau * c_j^2 < m_F",
        ProblemLabel::P2Contact | ProblemLabel::HviOnly => "L_Fb / lambda_1V + alpha_jnu / lambda_1nuV < m_F",
        _ => "alpha_phi * c_phi^2 + alpha_j * c_j^2 < m_A",
    };
    Ok(ConstantsReport {
        label: spec.label,
        lambda_1v: full,
        lambda_1nuv: normal,
        lambda_1tauv: tangential,
        c_phi,
        c_j,
        m_a,
        alpha_phi,
        alpha_j,
        smallness_margin: margin,
        verdict: if margin > 0.0 { Verdict::Satisfied } else { Verdict::Violated },
        inequality,
    })
}
