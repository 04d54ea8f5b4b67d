//! Experiment configs in flat `section.key = value` form.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::lab::{Coupling, Reference, SweepPlan};
use crate::model::{parse_f64, parse_usize, JChoice, ProblemLabel, ProblemParams, ProblemSpec};
use crate::solver::{LineSearch, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemParams,
    pub sweep: SweepPlan,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    pub csv_file: PathBuf,
    pub constants_file: PathBuf,
    pub solution_file: PathBuf,
    pub residual_file: PathBuf,
    pub workers: usize,
    pub seed: u64,
    /// Level and penalty parameter used by `solve` without overrides.
    pub solve_level: usize,
    pub solve_eps: f64,
}

/// Splits config text into entries; rejects malformed lines and duplicates.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected `section.key = value`", n + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if !k.contains('.') || k.contains(char::is_whitespace) || v.is_empty() {
            return Err(Error::Parse(format!("line {}: expected `section.key = value`", n + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(out)
}

fn parse_list(key: &str, v: &str, parse: impl Fn(&str, &str) -> Result<f64>) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse(key, x)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, format!("`{v}` is not true or false"))),
    }
}

fn default_reference(p: &ProblemParams) -> Reference {
    if p.label == ProblemLabel::ScalarSignorini1D {
        Reference::Analytic
    } else if p.j == JChoice::Zero {
        Reference::ConstrainedOracle
    } else {
        Reference::FineOracle { level: None, epsilon: 1e-10 }
    }
}

impl ExperimentConfig {
    /// Config for the shipped defaults of `label`.
    pub fn default_for(label: ProblemLabel) -> Self {
        let problem = ProblemParams::default_for(label);
        let reference = default_reference(&problem);
        ExperimentConfig {
            problem,
            sweep: SweepPlan::diagonal(vec![0, 1, 2, 3], 1.0, 1.0, reference),
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
            csv_file: PathBuf::from("report.csv"),
            constants_file: PathBuf::from("constants.txt"),
            solution_file: PathBuf::from("solution.txt"),
            residual_file: PathBuf::from("residual.txt"),
            workers: 1,
            seed: 0,
            solve_level: 2,
            solve_eps: 1e-3,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let label = entries.get("problem.label").ok_or_else(|| invalid("problem.label", "is required"))?.parse::<ProblemLabel>()?;
        let mut cfg = Self::default_for(label);
        let mut levels: Option<Vec<usize>> = None;
        let mut coupling = "diagonal".to_string();
        let (mut c, mut p) = (1.0, 1.0);
        let mut epsilons = Vec::new();
        let mut reference: Option<String> = None;
        let mut reference_level = None;
        let mut reference_eps = 1e-10;
        let mut line_search = "backtracking".to_string();
        let (mut contraction, mut min_step) = (0.5, 1e-10);
        for (k, v) in &entries {
            let (k, v) = (k.as_str(), v.as_str());
            if k == "problem.label" || cfg.problem.set(k, v)? {
                continue;
            }
            let s = &mut cfg.solver;
            match k {
                "sweep.levels" => levels = Some(v.split(',').map(|x| parse_usize(k, x)).collect::<Result<_>>()?),
                "sweep.coupling" => coupling = v.to_string(),
                "sweep.c" => c = parse_f64(k, v)?,
                "sweep.p" => p = parse_f64(k, v)?,
                "sweep.epsilons" => epsilons = parse_list(k, v, parse_f64)?,
                "sweep.reference" => reference = Some(v.to_string()),
                "sweep.reference_level" => reference_level = if v == "auto" { None } else { Some(parse_usize(k, v)?) },
                "sweep.reference_eps" => reference_eps = parse_f64(k, v)?,
                "solver.newton_tol" => s.newton_tol = parse_f64(k, v)?,
                "solver.newton_max_iter" => s.newton_max_iter = parse_usize(k, v)?,
                "solver.fixedpoint_tol" => s.fixedpoint_tol = parse_f64(k, v)?,
                "solver.fixedpoint_max_iter" => s.fixedpoint_max_iter = parse_usize(k, v)?,
                "solver.line_search" => line_search = v.to_string(),
                "solver.contraction_factor" => contraction = parse_f64(k, v)?,
                "solver.min_step" => min_step = parse_f64(k, v)?,
                "solver.override_smallness" => s.override_smallness = parse_bool(k, v)?,
                "output.dir" => cfg.output_dir = PathBuf::from(v),
                "output.csv" => cfg.csv_file = PathBuf::from(v),
                "output.constants" => cfg.constants_file = PathBuf::from(v),
                "output.solution" => cfg.solution_file = PathBuf::from(v),
                "output.residual" => cfg.residual_file = PathBuf::from(v),
                "run.workers" => cfg.workers = parse_usize(k, v)?,
                "run.seed" => cfg.seed = v.parse().map_err(|_| invalid(k, format!("`{v}` is not a nonnegative integer")))?,
                "solve.level" => cfg.solve_level = parse_usize(k, v)?,
                "solve.eps" => cfg.solve_eps = parse_f64(k, v)?,
                _ => return Err(Error::Parse(format!("unknown key `{k}`"))),
            }
        }
        cfg.solver.line_search = match line_search.as_str() {
            "backtracking" => LineSearch::Backtracking { contraction_factor: contraction, min_step },
            "none" => LineSearch::None,
            other => return Err(invalid("solver.line_search", format!("unknown kind `{other}`"))),
        };
        let reference = match reference.as_deref() {
            None => default_reference(&cfg.problem),
            Some("analytic") => Reference::Analytic,
            Some("fine_oracle") => Reference::FineOracle { level: reference_level, epsilon: reference_eps },
            Some("constrained_oracle") => Reference::ConstrainedOracle,
            Some(other) => return Err(invalid("sweep.reference", format!("unknown kind `{other}`"))),
        };
        let levels = levels.unwrap_or_else(|| cfg.sweep.refinement_levels.clone());
        cfg.sweep = match coupling.as_str() {
            "diagonal" => SweepPlan::diagonal(levels, c, p, reference),
            "grid" => SweepPlan::grid(levels, epsilons, reference),
            other => return Err(invalid("sweep.coupling", format!("unknown kind `{other}`"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        self.solver.validate()?;
        if self.workers == 0 {
            return Err(invalid("run.workers", "must be at least 1"));
        }
        if !(self.solve_eps > 0.0 && self.solve_eps.is_finite()) {
            return Err(invalid("solve.eps", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        self.problem.build()
    }

    pub fn finest_level(&self) -> usize {
        *self.sweep.refinement_levels.last().expect("validated")
    }

    /// `file` joined onto the output directory unless it is absolute.
    pub fn output_path(&self, file: &Path) -> PathBuf {
        self.output_dir.join(file)
    }

    /// Entries that reproduce this config when parsed.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<(String, String)> = self.problem.to_entries();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let levels = self.sweep.refinement_levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
        put("sweep.levels", levels);
        match self.sweep.coupling {
            Coupling::Diagonal { c, p } => {
                put("sweep.coupling", "diagonal".into());
                put("sweep.c", format!("{c:?}"));
                put("sweep.p", format!("{p:?}"));
            }
            Coupling::IndependentGrid => {
                put("sweep.coupling", "grid".into());
                put("sweep.epsilons", join(&self.sweep.epsilons));
            }
        }
        match self.sweep.reference {
            Reference::Analytic => put("sweep.reference", "analytic".into()),
            Reference::ConstrainedOracle => put("sweep.reference", "constrained_oracle".into()),
            Reference::FineOracle { level, epsilon } => {
                put("sweep.reference", "fine_oracle".into());
                put("sweep.reference_level", level.map_or_else(|| "auto".to_string(), |l| l.to_string()));
                put("sweep.reference_eps", format!("{epsilon:?}"));
            }
        }
        let s = &self.solver;
        put("solver.newton_tol", format!("{:?}", s.newton_tol));
        put("solver.newton_max_iter", s.newton_max_iter.to_string());
        put("solver.fixedpoint_tol", format!("{:?}", s.fixedpoint_tol));
        put("solver.fixedpoint_max_iter", s.fixedpoint_max_iter.to_string());
        match s.line_search {
            LineSearch::None => put("solver.line_search", "none".into()),
            LineSearch::Backtracking { contraction_factor, min_step } => {
                put("solver.line_search", "backtracking".into());
                put("solver.contraction_factor", format!("{contraction_factor:?}"));
                put("solver.min_step", format!("{min_step:?}"));
            }
        }
        put("solver.override_smallness", s.override_smallness.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("output.csv", self.csv_file.display().to_string());
        put("output.constants", self.constants_file.display().to_string());
        put("output.solution", self.solution_file.display().to_string());
        put("output.residual", self.residual_file.display().to_string());
        put("run.workers", self.workers.to_string());
        put("run.seed", self.seed.to_string());
        put("solve.level", self.solve_level.to_string());
        put("solve.eps", format!("{:?}", self.solve_eps));
        lines.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse("problem.label = VI_only\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default_for(ProblemLabel::ViOnly));
        assert_eq!(cfg.sweep.reference, Reference::ConstrainedOracle);
    }

    #[test]
    fn text_round_trip() {
        for label in ProblemLabel::ALL {
            let mut cfg = ExperimentConfig::default_for(label);
            cfg.sweep = SweepPlan::grid(vec![1, 2], vec![0.1, 0.001], Reference::FineOracle { level: Some(4), epsilon: 1e-9 });
            cfg.workers = 3;
            cfg.seed = 42;
            let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
            assert_eq!(back, cfg, "{label}");
        }
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# header\nproblem.label = P2_contact ; trailing\n\nj.mu2 = 0.25\nsweep.levels = 1,2\nrun.workers = 2\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.problem.j_mu2, 0.25);
        assert_eq!(cfg.sweep.refinement_levels, vec![1, 2]);
        assert_eq!(cfg.workers, 2);
    }

    #[test]
    fn malformed_configs() {
        let field = |text: &str| match ExperimentConfig::parse(text) {
            Err(Error::InvalidParameter { field, .. }) => field,
            other => panic!("{text}: {other:?}"),
        };
        assert_eq!(field("j.mu2 = 1\n"), "problem.label");
        assert_eq!(field("problem.label = VI_only\nsolve.eps = -1\n"), "solve.eps");
        assert_eq!(field("problem.label = VI_only\nrun.workers = 0\n"), "run.workers");
        assert_eq!(field("problem.label = VI_only\nsweep.levels = 2,1\n"), "sweep.levels");
        for bad in [
            "problem.label = VI_only\nnonsense\n",
            "problem.label = VI_only\nsweep.frobnicate = 1\n",
            "problem.label = VI_only\nproblem.label = VI_only\n",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Parse(_))), "{bad}");
        }
    }
}
