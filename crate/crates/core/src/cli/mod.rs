//! Batch commands behind the `vhi` binary: `solve`, `sweep` and `constants`.
//!
//! Results go to files under the output directory and summaries to the given
//! writer; progress and errors go to standard error.

mod config;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::fem::DofMap;
use crate::lab::{boundedness_audit, compute_constants, run_sweep};
use crate::model::Verdict;
use crate::solver::{residual_check, solve_penalized};

pub use config::{parse_entries, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_SMALLNESS: i32 = 4;
pub const EXIT_INCOMPLETE: i32 = 5;

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub level: Option<usize>,
    pub eps: Option<f64>,
    pub force: bool,
    pub dry_run: bool,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidGeometry(_)
        | Error::InvalidMesh(_)
        | Error::RegionMismatch(_)
        | Error::EmptyRegion(_)
        | Error::SizeMismatch { .. }
        | Error::ReferenceUnavailable(_) => EXIT_PARSE,
        Error::NewtonNonconvergence { .. }
        | Error::FixedPointNonconvergence { .. }
        | Error::LinearSolveFailure(_)
        | Error::CycleDetected { .. }
        | Error::NoFeasibleSubset
        | Error::EigenNonconvergence(_) => EXIT_NONCONVERGENCE,
        Error::SmallnessViolation { .. } => EXIT_SMALLNESS,
        _ => EXIT_FAILURE,
    }
}

fn load(path: &Path, ov: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(level) = ov.level {
        cfg.solve_level = level;
    }
    if let Some(eps) = ov.eps {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid("eps", format!("must be positive and finite, got {eps}")));
        }
        cfg.solve_eps = eps;
    }
    if let Some(workers) = ov.workers {
        if workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        cfg.workers = workers;
    }
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &ov.out {
        cfg.output_dir = out.clone();
    }
    if ov.force {
        cfg.solver.override_smallness = true;
    }
    cfg.sweep.workers = cfg.workers;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    eprintln!("vhi: wrote {}", path.display());
    Ok(())
}

fn log_config(cfg: &ExperimentConfig) {
    eprintln!("vhi: {} (seed {}, {} worker(s))", cfg.problem.label, cfg.seed, cfg.workers);
}

/// Solves once at the configured (or overridden) level and `eps`; writes
/// nodal values and the residual breakdown.
pub fn cmd_solve(path: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<i32> {
    let cfg = load(path, ov)?;
    log_config(&cfg);
    let spec = cfg.spec()?;
    let mesh = spec.mesh_at(cfg.solve_level)?;
    let eps = cfg.solve_eps;
    eprintln!("vhi: solving on level {} (h = {:e}) with eps = {eps:e}", cfg.solve_level, mesh.h);
    let sol = solve_penalized(&spec, &mesh, eps, &cfg.solver, None)?;
    let res = residual_check(&spec, &mesh, &sol.coefficients, eps)?;

    let dofmap = DofMap::new(&mesh, spec.components)?;
    let mut text = format!("# label={} level={} h={:?} eps={:?}\n", spec.label, cfg.solve_level, mesh.h, eps);
    text += if spec.components == 1 { "# x y u\n" } else { "# x y u_x u_y\n" };
    for (v, x) in mesh.vertices.iter().enumerate() {
        let u = dofmap.vertex_value(&sol.coefficients, v);
        let _ = write!(text, "{:?} {:?} {:?}", x[0], x[1], u[0]);
        if spec.components == 2 {
            let _ = write!(text, " {:?}", u[1]);
        }
        text.push('\n');
    }
    write_file(&cfg.output_path(&cfg.solution_file), &text)?;

    let d = &sol.diagnostics;
    let mut kv = String::new();
    let _ = writeln!(kv, "converged={}", d.converged);
    let _ = writeln!(kv, "iterations={}", d.iterations);
    let _ = writeln!(kv, "outer_iterations={}", d.outer_iterations);
    let _ = writeln!(kv, "active_set_size={}", d.active_set_size);
    let _ = writeln!(kv, "roundoff_limited={}", d.roundoff_limited);
    for (k, v) in [
        ("residual_relative", res.relative),
        ("residual_total", res.total),
        ("residual_a", res.a_term),
        ("residual_penalty", res.penalty_term),
        ("residual_phi", res.phi_term),
        ("residual_j", res.j_term),
        ("residual_load", res.load_term),
    ] {
        let _ = writeln!(kv, "{k}={v:.12e}");
    }
    write_file(&cfg.output_path(&cfg.residual_file), &kv)?;
    writeln!(out, "converged: iterations={} residual={:.3e} active={}", d.iterations, d.residual, d.active_set_size)?;
    Ok(EXIT_OK)
}

/// Runs the configured sweep, writing the CSV table and the constants report.
pub fn cmd_sweep(path: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = load(path, ov)?;
    log_config(&cfg);
    let spec = cfg.spec()?;
    let plan = cfg.sweep.clone();
    if ov.dry_run {
        let mut h = Vec::new();
        for level in 0..=cfg.finest_level() {
            h.push(spec.mesh_at(level)?.h);
        }
        let cells = plan.cells(|l| h[l]);
        writeln!(out, "level,h,eps,diagonal")?;
        for (l, e, d) in &cells {
            writeln!(out, "{l},{:.6e},{e:.6e},{d}", h[*l])?;
        }
        eprintln!("vhi: dry run, {} cell(s) planned", cells.len());
        return Ok(EXIT_OK);
    }
    let constants = compute_constants(&spec, cfg.finest_level())?;
    write_file(&cfg.output_path(&cfg.constants_file), &constants.to_key_value())?;
    let smallness = match constants.verdict {
        Verdict::Satisfied => "satisfied",
        Verdict::Violated if cfg.solver.override_smallness => {
            eprintln!("vhi: warning: {} fails with margin {:e}; continuing under --force", constants.inequality, constants.smallness_margin);
            "violated (forced)"
        }
        Verdict::Violated => {
            return Err(Error::SmallnessViolation { inequality: constants.inequality.to_string(), margin: constants.smallness_margin });
        }
    };
    // The verdict above was evaluated on the finest level already.
    cfg.solver.override_smallness = true;
    eprintln!("vhi: running {} cell(s)", plan.cells(|_| 1.0).len());
    let report = run_sweep(&spec, &plan, &cfg.solver)?;
    write_file(&cfg.output_path(&cfg.csv_file), &report.to_csv())?;
    let audit = boundedness_audit(&report);
    writeln!(
        out,
        "{}: {} boundedness: {} max_norm={:.6e} worst_ratio={} smallness: {smallness}",
        report.label,
        report.summary_line(),
        if audit.monotone { "bounded" } else { "unbounded" },
        audit.max_norm,
        audit.worst_ratio.map_or_else(|| "n/a".to_string(), |w| format!("{w:.4}")),
    )?;
    if !report.complete {
        eprintln!("vhi: error: incomplete sweep: {}", report.failure.as_deref().unwrap_or("unknown failure"));
        return Ok(EXIT_INCOMPLETE);
    }
    Ok(EXIT_OK)
}

/// Estimates the trace eigenvalues on the `--level` (default: finest sweep)
/// mesh and evaluates the smallness condition.
pub fn cmd_constants(path: &Path, ov: &Overrides, out: &mut dyn Write) -> Result<i32> {
    let cfg = load(path, ov)?;
    log_config(&cfg);
    let spec = cfg.spec()?;
    let level = ov.level.unwrap_or_else(|| cfg.finest_level());
    let report = compute_constants(&spec, level)?;
    let text = report.to_key_value();
    write_file(&cfg.output_path(&cfg.constants_file), &text)?;
    out.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

/// Runs `command` and maps errors to exit codes, reporting them on stderr.
pub fn run(command: fn(&Path, &Overrides, &mut dyn Write) -> Result<i32>, path: &Path, ov: &Overrides, out: &mut dyn Write) -> i32 {
    match command(path, ov, out) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("vhi: error: {err}");
            exit_code(&err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes() {
        assert_eq!(exit_code(&invalid("eps", "bad")), EXIT_PARSE);
        assert_eq!(exit_code(&Error::NewtonNonconvergence { iterations: 1, residual: 1.0 }), EXIT_NONCONVERGENCE);
        assert_eq!(exit_code(&Error::EigenNonconvergence("x".into())), EXIT_NONCONVERGENCE);
        assert_eq!(exit_code(&Error::SmallnessViolation { inequality: "x".into(), margin: -1.0 }), EXIT_SMALLNESS);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_FAILURE);
    }

    #[test]
    fn nonpositive_eps_override_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ini");
        std::fs::write(&path, "problem.label = ScalarSignorini1D\n").unwrap();
        let ov = Overrides { eps: Some(0.0), ..Default::default() };
        match cmd_solve(&path, &ov, &mut Vec::new()) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "eps"),
            other => panic!("{other:?}"),
        }
    }
}
