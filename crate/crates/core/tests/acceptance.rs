//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! with the measured quantities, then asserts the criterion.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vhi::fem::{DofMap, LoadSpec, TraceSample};
use vhi::lab::{boundedness_audit, compute_constants, run_sweep, special_case_reduction_check, ConvergenceReport, Reference, SweepPlan};
use vhi::mesh::RegionTag;
use vhi::model::{penalty_residual, ConstraintSet, NonconvexJSpec, ProblemLabel, ProblemSpec, Verdict};
use vhi::solver::{solve_constrained_activeset, solve_constrained_bruteforce, solve_penalized, DiscreteProblem, SolverConfig};

const SEED: u64 = 20_240_917;

fn report(n: usize, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {n}: {} {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {n} failed: {}", detail.as_ref());
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn errs(r: &ConvergenceReport) -> Vec<f64> {
    r.rows.iter().map(|x| x.energy_err).collect()
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn decades(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 10f64.powi(-k)).collect()
}

fn diagonal_vi(label: ProblemLabel) -> ConvergenceReport {
    let spec = ProblemSpec::default_for(label);
    run_sweep(&spec, &SweepPlan::diagonal((0..5).collect(), 1.0, 1.0, Reference::ConstrainedOracle), &SolverConfig::default()).unwrap()
}

fn fixed_h_vi(label: ProblemLabel) -> ConvergenceReport {
    let spec = ProblemSpec::default_for(label);
    run_sweep(&spec, &SweepPlan::grid(vec![3], decades(1, 6), Reference::ConstrainedOracle), &SolverConfig::default()).unwrap()
}

fn hemivariational_diagonal(label: ProblemLabel) -> ConvergenceReport {
    let spec = ProblemSpec::default_for(label);
    let plan = SweepPlan::diagonal((0..4).collect(), 1.0, 1.0, Reference::FineOracle { level: None, epsilon: 1e-10 });
    run_sweep(&spec, &plan, &SolverConfig::default()).unwrap()
}

fn hemivariational_fixed_h(label: ProblemLabel) -> ConvergenceReport {
    let spec = ProblemSpec::default_for(label);
    let plan = SweepPlan::grid(vec![2], decades(1, 5), Reference::FineOracle { level: Some(2), epsilon: 1e-10 });
    run_sweep(&spec, &plan, &SolverConfig::default()).unwrap()
}

#[test]
fn one_dimensional_signorini_regression() {
    let spec = ProblemSpec::default_for(ProblemLabel::ScalarSignorini1D);
    let mesh = spec.mesh_at(0).unwrap();
    let start = Instant::now();
    let mut worst_end: f64 = 0.0;
    let mut interior_ok = true;
    for eps in decades(1, 6) {
        let s = solve_penalized(&spec, &mesh, eps, &SolverConfig::default(), None).unwrap();
        worst_end = worst_end.max((s.coefficients[1] - eps / (2.0 * (eps + 1.0))).abs());
        interior_ok &= (s.coefficients[0] - 0.125).abs() <= 2.0 * eps;
    }
    let t = start.elapsed();
    report(
        1,
        worst_end <= 1e-9 && interior_ok && t < Duration::from_secs(1),
        format!("max endpoint error {worst_end:.2e}, interior within 2 eps: {interior_ok}, {t:.2?}"),
    );
}

#[test]
fn joint_convergence_diagonal_for_variational_inequalities() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for label in [ProblemLabel::ScalarObstacle2D, ProblemLabel::ViOnly] {
        let e = errs(&diagonal_vi(label));
        let ok = strictly_decreasing(&e) && e[e.len() - 1] < 0.05 * e[0];
        pass &= ok;
        detail += &format!("{label}: [{}] ", fmt(&e));
    }
    let t = start.elapsed();
    report(2, pass && t < Duration::from_secs(120), format!("{detail}{t:.2?}"));
}

#[test]
fn penalty_convergence_at_fixed_mesh() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for label in [ProblemLabel::ScalarObstacle2D, ProblemLabel::ViOnly] {
        let spec = ProblemSpec::default_for(label);
        let mesh = spec.mesh_at(3).unwrap();
        let oracle = solve_constrained_activeset(&spec, &mesh, &SolverConfig::default()).unwrap();
        let norm = DiscreteProblem::new(&spec, &mesh).unwrap().energy_norm(&oracle.coefficients);
        let rel: Vec<f64> = errs(&fixed_h_vi(label)).iter().map(|e| e / norm).collect();
        let ok = strictly_decreasing(&rel) && rel[rel.len() - 1] <= 1e-4;
        pass &= ok;
        detail += &format!("{label} relative: [{}] ", fmt(&rel));
    }
    let t = start.elapsed();
    report(3, pass && t < Duration::from_secs(60), format!("{detail}{t:.2?}"));
}

fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> (ProblemSpec, usize) {
    let label = if k % 2 == 0 { ProblemLabel::ViOnly } else { ProblemLabel::ScalarObstacle2D };
    let level = if label == ProblemLabel::ViOnly { 1 + k % 4 / 2 } else { 1 + k % 4 / 3 };
    let mut spec = ProblemSpec::default_for(label);
    let b: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let s: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let t: [f64; 2] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    spec.loads = LoadSpec::affine_in_x(b, s, t);
    (spec, level)
}

#[test]
fn oracle_equivalence_on_random_instances() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let config = SolverConfig::default();
    let (mut oracle_gap, mut penalty_gap, mut points) = (0f64, 0f64, 0usize);
    let count = 24;
    for k in 0..count {
        let (spec, level) = random_instance(&mut rng, k);
        let mesh = spec.mesh_at(level).unwrap();
        let p = DiscreteProblem::new(&spec, &mesh).unwrap();
        points = points.max(p.constraints.len());
        let a = solve_constrained_activeset(&spec, &mesh, &config).unwrap();
        let b = solve_constrained_bruteforce(&spec, &mesh, &config).unwrap();
        let u = solve_penalized(&spec, &mesh, 1e-10, &config, None).unwrap();
        let diff = |x: &[f64], y: &[f64]| p.energy_norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
        oracle_gap = oracle_gap.max(diff(&a.coefficients, &b.coefficients));
        penalty_gap = penalty_gap.max(diff(&u.coefficients, &a.coefficients)).max(diff(&u.coefficients, &b.coefficients));
    }
    let t = start.elapsed();
    report(
        4,
        points <= 12 && oracle_gap <= 1e-10 && penalty_gap <= 1e-6 && t < Duration::from_secs(30),
        format!("{count} instances, <= {points} points, oracle gap {oracle_gap:.2e}, penalty gap {penalty_gap:.2e}, {t:.2?}"),
    );
}

#[test]
fn uniform_boundedness_over_sweeps() {
    let mut reports = Vec::new();
    for label in [ProblemLabel::ScalarObstacle2D, ProblemLabel::ViOnly] {
        reports.push((label, diagonal_vi(label)));
        reports.push((label, fixed_h_vi(label)));
    }
    for label in [ProblemLabel::P1Contact, ProblemLabel::P2Contact] {
        reports.push((label, hemivariational_diagonal(label)));
        reports.push((label, hemivariational_fixed_h(label)));
    }
    let mut pass = true;
    let mut detail = String::new();
    for (label, r) in &reports {
        let a = boundedness_audit(r);
        pass &= a.monotone && a.max_norm.is_finite();
        let ratio = a.worst_ratio.map_or_else(|| "n/a".to_string(), |w| format!("{w:.4}"));
        detail += &format!("{label}: max {:.3e} ratio {ratio}; ", a.max_norm);
    }
    report(5, pass, detail);
}

#[test]
fn hemivariational_sweeps() {
    let mut pass = true;
    let mut detail = String::new();
    for label in [ProblemLabel::P1Contact, ProblemLabel::P2Contact] {
        let start = Instant::now();
        let e = errs(&hemivariational_diagonal(label));
        let fixed = hemivariational_fixed_h(label);
        let v: Vec<f64> = fixed.rows.iter().map(|r| r.violation).collect();
        let decay = v.windows(2).all(|w| w[0] > 0.0 && w[1] <= 0.1 * w[0]);
        let t = start.elapsed();
        pass &= strictly_decreasing(&e) && decay && t < Duration::from_secs(300);
        detail += &format!("{label}: errors [{}] violations [{}] {t:.2?}; ", fmt(&e), fmt(&v));
    }
    report(6, pass, detail);
}

#[test]
fn constants_and_smallness() {
    let one_d = compute_constants(&ProblemSpec::default_for(ProblemLabel::ScalarSignorini1D), 3).unwrap();
    let lambda = one_d.lambda_1nuv.unwrap();
    let mut pass = (lambda - 1.0).abs() <= 1e-6;
    let mut detail = format!("1D lambda {lambda:.9}; ");
    for label in ProblemLabel::ALL {
        let r = compute_constants(&ProblemSpec::default_for(label), 5).unwrap();
        pass &= r.verdict == Verdict::Satisfied && r.smallness_margin > 0.0;
        detail += &format!("{label} margin {:.3e}; ", r.smallness_margin);
    }
    let p2 = ProblemSpec::default_for(ProblemLabel::P2Contact);
    let inflated = p2.with_j(NonconvexJSpec::descending_normal(RegionTag::Contact1, 100.0, 50.0, 0.01, 0.03).unwrap()).unwrap();
    let r = compute_constants(&inflated, 3).unwrap();
    pass &= r.verdict == Verdict::Violated;
    detail += &format!("inflated mu2 = 50: {} (margin {:.3e})", r.verdict.name(), r.smallness_margin);
    report(7, pass, detail);
}

fn sample(rng: &mut ChaCha8Rng, scale: f64) -> TraceSample {
    let draw = |rng: &mut ChaCha8Rng| match rng.gen_range(0..8) {
        0 => 0.0,
        _ => rng.gen_range(-scale..scale),
    };
    TraceSample { normal: draw(rng), tangential: draw(rng) }
}

fn dist(a: TraceSample, b: TraceSample) -> f64 {
    (a.normal - b.normal).hypot(a.tangential - b.tangential)
}

#[test]
fn hypothesis_property_suites() {
    const DRAWS: usize = 1000;
    const SLACK: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = [0usize; 5];

    let vi = ProblemSpec::default_for(ProblemLabel::ViOnly);
    let p2 = ProblemSpec::default_for(ProblemLabel::P2Contact);
    let p1 = ProblemSpec::default_for(ProblemLabel::P1Contact);
    let mesh = p2.mesh_at(2).unwrap();
    let dofmap = DofMap::new(&mesh, 2).unwrap();
    let sets = [ConstraintSet::new(&vi.penalty, &mesh, &dofmap).unwrap(), ConstraintSet::new(&p2.penalty, &mesh, &dofmap).unwrap()];
    let vec = |rng: &mut ChaCha8Rng| (0..dofmap.len()).map(|_| rng.gen_range(-0.1..0.1)).collect::<Vec<f64>>();
    for k in 0..DRAWS {
        let set = &sets[k % 2];
        let (u, v) = (vec(&mut rng), vec(&mut rng));
        let (pu, pv) = (penalty_residual(set, &dofmap, &u).unwrap(), penalty_residual(set, &dofmap, &v).unwrap());
        let mono: f64 = (0..u.len()).map(|i| (pu[i] - pv[i]) * (u[i] - v[i])).sum();
        if mono < -SLACK {
            violations[0] += 1;
        }
        // Half of the draws are pushed into K.
        let w: Vec<f64> = if k % 4 < 2 { u.iter().map(|x| x - 0.2).collect() } else { u };
        let feasible = set.values(&dofmap, &w).iter().all(|&q| q <= 0.0);
        let in_kernel = penalty_residual(set, &dofmap, &w).unwrap().iter().all(|&r| r == 0.0);
        if feasible != in_kernel {
            violations[1] += 1;
        }
    }

    let x = [0.5, 0.0];
    for k in 0..DRAWS {
        let delta = if k % 2 == 0 { 0.0 } else { 1e-3 };
        let phi = if k % 3 == 0 { &p1.phi } else { &p2.phi };
        let z: Vec<TraceSample> = (0..4).map(|_| sample(&mut rng, 0.1)).collect();
        let f = |a: usize, b: usize| phi.point_value(x, z[a], z[b], delta);
        let lhs = f(0, 3) - f(0, 2) + f(1, 2) - f(1, 3);
        if lhs > phi.alpha() * dist(z[0], z[1]) * dist(z[2], z[3]) + SLACK {
            violations[2] += 1;
        }
    }

    for k in 0..DRAWS {
        let j = if k % 2 == 0 { &p1.j } else { &p2.j };
        let scale = if k % 4 < 2 { 0.05 } else { 2.0 };
        let (z1, z2) = (sample(&mut rng, scale), sample(&mut rng, scale));
        let d12 = TraceSample { normal: z2.normal - z1.normal, tangential: z2.tangential - z1.tangential };
        let d21 = TraceSample { normal: -d12.normal, tangential: -d12.tangential };
        let comp = |s: TraceSample| if j.acts_on_tangential() { s.tangential } else { s.normal };
        let lhs = j.point_directional(z1, d12) + j.point_directional(z2, d21);
        if lhs > j.alpha() * comp(d12).powi(2) + SLACK {
            violations[3] += 1;
        }
        let (c0, c1) = j.growth();
        let r = comp(z1);
        if j.density_derivative(r).abs() > c0 + c1 * r.abs() + SLACK {
            violations[4] += 1;
        }
    }

    let names = ["penalty monotonicity", "kernel equals K", "phi quadruple", "j relaxed monotonicity", "j growth"];
    let detail: Vec<String> = names.iter().zip(violations).map(|(n, v)| format!("{n}: {v}/{DRAWS}")).collect();
    report(8, violations.iter().all(|&v| v == 0), detail.join(", "));
}

#[test]
fn special_case_reductions() {
    let config = SolverConfig::default();
    let mut pass = true;
    let mut detail = String::new();
    for label in [ProblemLabel::ViOnly, ProblemLabel::HviOnly] {
        let r = special_case_reduction_check(&ProblemSpec::default_for(label), &config).unwrap();
        pass &= r.passed && r.tolerance == 1e-12;
        detail += &format!("{label}: {:.2e}; ", r.difference);
    }
    let p1 = ProblemSpec::default_for(ProblemLabel::P1Contact);
    let degenerate = p1.with_j(NonconvexJSpec::slip_weakening(RegionTag::Contact2, 0.3, 0.3, 1.0).unwrap()).unwrap();
    let r = special_case_reduction_check(&degenerate, &config).unwrap();
    pass &= r.passed && r.tolerance == 1e-8;
    detail += &format!("degenerate slip vs Tresca: {:.2e}", r.difference);
    report(9, pass, detail);
}
