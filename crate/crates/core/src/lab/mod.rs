//! Convergence experiments: trace eigenvalue estimates, `(h, eps)` sweeps
//! against reference solutions, and audits of the resulting tables.

mod audit;
mod eigen;
mod sweep;

pub use audit::{boundedness_audit, special_case_reduction_check, BoundednessAudit, ReductionCheck, ReductionKind, MAX_NORM_RATIO};
pub use eigen::estimate_trace_eigenvalue;
pub use sweep::{run_sweep, Coupling, ConvergenceReport, ObservedRates, Reference, SweepPlan, SweepRow, CSV_HEADER};

use crate::error::Result;
use crate::fem::{MaterialLaw, TraceMode};
use crate::model::{report_constants, ConstantsReport, EigenEstimates, ProblemSpec};

/// Estimates every eigenvalue reported for `spec` on mesh `level` and
/// evaluates its smallness condition.
///
/// The full and normal trace eigenvalues on the constraint region are always
/// reported; the tangential one only for slip problems.
pub fn compute_constants(spec: &ProblemSpec, level: usize) -> Result<ConstantsReport> {
    let mesh = spec.mesh_at(level)?;
    let law = MaterialLaw::energy_norm_law();
    let mut est = EigenEstimates::default();
    let region = spec.penalty.region;
    let mut wanted = vec![(spec.vector_mode(TraceMode::FullVector), region), (spec.vector_mode(TraceMode::Normal), region)];
    if spec.components == 2 && spec.j.acts_on_tangential() {
        wanted.push((TraceMode::Tangential, spec.j.region));
    }
    wanted.extend(spec.required_eigenproblems());
    for (mode, region) in wanted {
        if est.get(mode, region).is_none() {
            est.insert(mode, region, estimate_trace_eigenvalue(&mesh, mode, law, region)?);
        }
    }
    report_constants(spec, &est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProblemLabel, Verdict};

    #[test]
    fn signorini_constants() {
        let spec = ProblemSpec::default_for(ProblemLabel::ScalarSignorini1D);
        let r = compute_constants(&spec, 2).unwrap();
        assert!((r.lambda_1nuv.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.smallness_margin, spec.m_a());
    }

    #[test]
    fn shipped_defaults_satisfy_smallness() {
        for label in ProblemLabel::ALL {
            let spec = ProblemSpec::default_for(label);
            let r = compute_constants(&spec, 3).unwrap();
            assert_eq!(r.verdict, Verdict::Satisfied, "{label}: {}", r.to_key_value());
            assert!(r.lambda_1v.unwrap() > 0.0 && r.lambda_1nuv.unwrap() > 0.0);
        }
    }
}
