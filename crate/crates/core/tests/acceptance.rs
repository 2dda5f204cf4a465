//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use saddle_core::dynamics::{
    build_g_nag, explicit_euler_matrix, explicit_euler_radius, gs_iteration_matrix, integrate_flow,
    predicted_instability, richardson_check, spectrum, FlowState, QuadraticGame,
};
use saddle_core::geometry::Geometry;
use saddle_core::linalg::seeded_rng;
use saddle_core::params::{ParamConfig, StepRule};
use saddle_core::problem::generate_matrix;
use saddle_core::problems::quadratic_game_from_matrix;
use saddle_core::solvers::{effective_params, AbpdStepper};
use saddle_core::{
    fit_rate, solve, Algorithm, FitOutcome, IterateState, Matrix, ProblemDoc, RateMode, SaddleProblem, SolverConfig,
    Trace, Vector,
};

use rand::Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn load(name: &str) -> SaddleProblem {
    let path = format!("{}/tests/data/{name}.json", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    ProblemDoc::from_json(&text).and_then(|d| d.build()).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn exact_norm(a: &Matrix) -> f64 {
    a.clone().singular_values().max()
}

fn random_game(rng: &mut impl Rng, mu: f64, seed: u64) -> QuadraticGame {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=6);
    QuadraticGame::new(mu, generate_matrix("gaussian", m, n, seed).unwrap()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(101);
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let mu = [0.1, 1.0, 10.0][i as usize % 3];
        let game = random_game(&mut rng, mu, 1000 + i);
        let cap = 2.0 * mu / game.opnorm();
        for frac in [0.2, 0.5, 1.0] {
            let alpha = (frac * cap).min(cap);
            let rho = spectrum(&gs_iteration_matrix(&game, alpha).map_err(|e| e.to_string())?)
                .map_err(|e| format!("game {i}, alpha {alpha}: {e}"))?
                .spectral_radius();
            worst = worst.max((rho - 1.0 / (1.0 + alpha)).abs());
        }
    }
    let elapsed = start.elapsed();
    if worst > 1e-8 {
        return Err(format!("max |rho - 1/(1+alpha)| = {worst:.3e} > 1e-8"));
    }
    if elapsed > Duration::from_secs(1) {
        return Err(format!("runtime {elapsed:?} exceeds 1 s"));
    }
    Ok(format!("60 spectra, max deviation {worst:.2e}, {elapsed:.0?}"))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut min_re = f64::INFINITY;
    for (i, mu) in [0.1, 1.0, 10.0, 0.5, 2.0].into_iter().enumerate() {
        let (m, n) = [(1, 1), (2, 3), (4, 4), (5, 2), (6, 6)][i];
        let raw = generate_matrix("gaussian", m, n, 200 + i as u64).unwrap();
        let a = &raw * (3.0 * mu / exact_norm(&raw));
        let game = QuadraticGame::new(mu, a).unwrap();
        let re = spectrum(&build_g_nag(&game)).map_err(|e| e.to_string())?.rightmost().unwrap().re;
        min_re = min_re.min(re);
        worst = worst.max((re - predicted_instability(mu, game.opnorm())).abs());
    }
    if min_re <= 0.0 || worst > 1e-8 {
        return Err(format!("min Re = {min_re:.3e}, max deviation {worst:.3e}"));
    }
    Ok(format!("5 games, Re lambda* = {min_re:.6} > 0, max deviation {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (i, mu) in [0.3, 1.0, 4.0].into_iter().enumerate() {
        let a = generate_matrix("gaussian", 3 + i, 4, 300 + i as u64).unwrap();
        let norm = exact_norm(&a);
        let game = QuadraticGame::new(mu, a).unwrap();
        let boundary = 2.0 * mu / (mu * mu + norm * norm);
        for j in 1..=12 {
            let alpha = boundary * j as f64 / 10.0;
            let rho = spectrum(&explicit_euler_matrix(&game, alpha)).map_err(|e| e.to_string())?.spectral_radius();
            let closed = explicit_euler_radius(mu, norm, alpha).map_err(|e| e.to_string())?;
            worst = worst.max((rho - closed).abs());
            count += 1;
        }
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:.3e} > 1e-10"));
    }
    Ok(format!("{count} (game, alpha) pairs, max deviation {worst:.2e}"))
}

struct Run {
    label: String,
    chi: f64,
    trace: Trace,
    elapsed: Duration,
}

fn certificate_runs() -> Vec<Run> {
    let mut plan: Vec<(&str, Algorithm, f64)> = Vec::new();
    for name in ["quadratic_game", "lasso", "matrix_game_euclidean", "constrained_qp"] {
        plan.push((name, Algorithm::AbpdPs, 0.05));
        plan.push((name, Algorithm::AbpdPgs, 0.05));
        plan.push((name, Algorithm::SymAbpdPgs, 0.0));
    }
    plan.push(("matrix_game_entropy", Algorithm::SymAbpdPgs, 0.0));
    plan.into_iter()
        .map(|(name, alg, chi)| {
            let problem = load(name);
            let mut cfg = SolverConfig::new(alg, 10_000);
            cfg.chi = chi;
            let start = Instant::now();
            let trace = solve(&problem, &cfg).unwrap_or_else(|e| panic!("{name}/{}: {e}", alg.name()));
            Run { label: format!("{name}/{}", alg.name()), chi, trace, elapsed: start.elapsed() }
        })
        .collect()
}

fn collect_failures(runs: &[Run], check: impl Fn(&Run) -> Option<String>) -> Vec<String> {
    runs.iter().filter_map(|r| check(r).map(|msg| format!("{}: {msg}", r.label))).collect()
}

fn criterion_4(runs: &[Run]) -> Outcome {
    let failures = collect_failures(runs, |r| {
        let c = &r.trace.certificate;
        if !c.certified || c.descent_checks != 10_000 {
            Some(format!("certified={} with {} descent checks", c.certified, c.descent_checks))
        } else if c.descent_violations > 0 {
            Some(format!("{} descent violations, max excess {:.3e}", c.descent_violations, c.max_descent_excess))
        } else if r.elapsed > Duration::from_secs(30) {
            Some(format!("runtime {:?} exceeds 30 s", r.elapsed))
        } else {
            None
        }
    });
    let worst = runs.iter().map(|r| r.trace.certificate.max_descent_excess).fold(f64::NEG_INFINITY, f64::max);
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap();
    if failures.is_empty() {
        Ok(format!("{} runs x 1e4 steps, max residual/(1+|H|) = {worst:.2e}, slowest {slowest:.1?}", runs.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_5(runs: &[Run]) -> Outcome {
    let failures = collect_failures(runs, |r| {
        let c = &r.trace.certificate;
        (c.gap_violations > 0 || c.max_gap_ratio > 1.0 + 1e-9)
            .then(|| format!("{} gap violations, max ratio {:.6}", c.gap_violations, c.max_gap_ratio))
    });
    let worst = runs.iter().map(|r| r.trace.certificate.max_gap_ratio).fold(0.0, f64::max);
    if failures.is_empty() {
        Ok(format!("max (gap + strong terms)/(2 theta H0) = {worst:.4} over {} runs", runs.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn power_slope(
    trace: &Trace,
    value: impl Fn(&saddle_core::solvers::TraceRecord) -> Option<f64>,
) -> Result<FitOutcome, String> {
    let pts: Vec<(usize, f64)> = trace.records.iter().filter_map(|r| value(r).map(|v| (r.k, v))).collect();
    fit_rate(&pts, (100, 10_000), RateMode::PowerLaw).map_err(|e| e.to_string())
}

fn criterion_6(runs: &[Run]) -> Outcome {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for r in runs.iter().filter(|r| r.label.starts_with("matrix_game")) {
        match power_slope(&r.trace, |rec| rec.gap)? {
            FitOutcome::Fit(f) if f.slope <= -0.9 => notes.push(format!("{} {:.3}", r.label, f.slope)),
            FitOutcome::Fit(f) => failures.push(format!("{} gap slope {:.3} > -0.9", r.label, f.slope)),
            FitOutcome::ConvergedExactly { k } => notes.push(format!("{} exact by k={k}", r.label)),
        }
    }
    for r in runs.iter().filter(|r| r.label.starts_with("constrained_qp")) {
        match power_slope(&r.trace, |rec| rec.dist_x)? {
            FitOutcome::Fit(f) if f.slope <= -1.8 => notes.push(format!("{} {:.3}", r.label, f.slope)),
            FitOutcome::Fit(f) => failures.push(format!("{} distance slope {:.3} > -1.8", r.label, f.slope)),
            FitOutcome::ConvergedExactly { k } => notes.push(format!("{} exact by k={k}", r.label)),
        }
    }
    let game = load("quadratic_game");
    let norm = exact_norm(&game.coupling.to_dense().unwrap());
    let kappa = norm * norm / (game.f.mu * game.g.mu);
    for (alg, chi) in [(Algorithm::AbpdPs, 0.05), (Algorithm::AbpdPgs, 0.05), (Algorithm::SymAbpdPgs, 0.0)] {
        let mut cfg = SolverConfig::new(alg, 2_000);
        cfg.chi = chi;
        let trace = solve(&game, &cfg).map_err(|e| e.to_string())?;
        let pts: Vec<(usize, f64)> = trace.records.iter().map(|r| (r.k, r.gap.unwrap())).collect();
        let bound = 1.0 / (1.0 + (1.0 - chi) / kappa.sqrt()) + 1e-3;
        match fit_rate(&pts, (1_000, 2_000), RateMode::Linear).map_err(|e| e.to_string())? {
            FitOutcome::Fit(f) => {
                let c = f.contraction.unwrap();
                if c <= bound {
                    notes.push(format!("quadratic_game/{} {c:.4}<={bound:.4}", alg.name()));
                } else {
                    failures.push(format!("quadratic_game/{} contraction {c:.4} > {bound:.4}", alg.name()));
                }
            }
            FitOutcome::ConvergedExactly { k } => {
                failures.push(format!("quadratic_game/{} hit zero at k={k}", alg.name()))
            }
        }
    }
    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_7(runs: &[Run]) -> Outcome {
    let failures = collect_failures(runs, |r| {
        let c = &r.trace.certificate;
        match c.hypotheses {
            Some(h) if h.all() => (c.theta_bound_violations > 0)
                .then(|| format!("{} violations, max ratio {:.4}", c.theta_bound_violations, c.theta_bound_max_ratio)),
            other => Some(format!("hypotheses do not hold ({other:?}), check would be vacuous")),
        }
    });
    let worst = runs.iter().map(|r| r.trace.certificate.theta_bound_max_ratio).fold(0.0, f64::max);
    if failures.is_empty() {
        Ok(format!("max theta_k / bound_k = {worst:.4} over {} runs", runs.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_8() -> Outcome {
    let ones = |d: usize| Vector::from_element(d, 1.0);
    let scalar = quadratic_game_from_matrix(1.0, Matrix::from_element(1, 1, 1.0)).unwrap();
    let wide = quadratic_game_from_matrix(1.0, generate_matrix("gaussian", 3, 4, 800).unwrap()).unwrap();
    let mut notes = Vec::new();
    for (name, p) in [("scalar", &scalar), ("3x4", &wide)] {
        let (m, n) = p.dims();
        let start = FlowState::new(ones(n), ones(n), ones(m), ones(m), 1.0, 1.0);
        let traj = integrate_flow(p, &start, 10.0, 1e-3, 100).map_err(|e| e.to_string())?;
        let e0 = traj.samples[0].energy;
        let ratio = traj.final_energy() / ((-10.0f64).exp() * e0);
        if ratio > 1.0 + 1e-3 {
            return Err(format!("{name}: E(10) / (e^-10 E(0)) = {ratio:.6}"));
        }
        let rich = richardson_check(p, &start, 10.0, 1e-2, 1).map_err(|e| e.to_string())?;
        if !(8.0..=32.0).contains(&rich.ratio) {
            return Err(format!("{name}: defect ratio {:.3} outside [8, 32]", rich.ratio));
        }
        notes.push(format!("{name}: E(10)/(e^-10 E0)={ratio:.2e}, defect ratio {:.2}", rich.ratio));
    }
    Ok(notes.join("; "))
}

fn criterion_9(runs: &[Run]) -> Outcome {
    let chi_runs: Vec<&Run> = runs.iter().filter(|r| r.chi > 0.0).collect();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for r in &chi_runs {
        let c = &r.trace.certificate;
        let h0 = c.h0.ok_or_else(|| format!("{}: no H0", r.label))?;
        let ratio = c.summability_sum / (4.0 * h0);
        worst = worst.max(ratio);
        if c.summability_violation || ratio > 1.0 + 1e-9 {
            failures.push(format!("{}: sum / 4H0 = {ratio:.6}", r.label));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} chi=0.05 runs, max sum/(4 H0) = {worst:.4}", chi_runs.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn random_point(rng: &mut impl Rng, geometry: &Geometry, dim: usize) -> Vector {
    match geometry {
        Geometry::Entropy => {
            let raw = Vector::from_fn(dim, |_, _| rng.random_range(1e-3..1.0));
            let total = raw.sum();
            raw / total
        }
        _ => Vector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0)),
    }
}

fn criterion_10() -> Outcome {
    let scalar = SaddleProblem::dense(
        saddle_core::ConvexPart::zero(),
        saddle_core::ConvexPart::zero(),
        Matrix::from_element(1, 1, 1.0),
    )
    .unwrap();
    let z0 = IterateState {
        x: Vector::from_element(1, 1.0),
        v: Vector::from_element(1, 1.0),
        y: Vector::from_element(1, 0.0),
        w: Vector::from_element(1, 0.0),
    };
    let want = [1.0, 1.0, 0.5, 1.0];
    for rule in [StepRule::Ps, StepRule::Pgs, StepRule::Sym] {
        let cfg = ParamConfig { opnorm: 1.0, ..effective_params(&scalar, 1.0, 1.0, 0.0) };
        let stepper = AbpdStepper::new(&scalar, rule, cfg).map_err(|e| e.to_string())?;
        let (z1, _) =
            stepper.step(&z0, &stepper.initial_params().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let got = [z1.x[0], z1.v[0], z1.y[0], z1.w[0]];
        if got.iter().zip(want).any(|(g, w)| (g - w).abs() > 1e-14) {
            return Err(format!("{rule:?}: scalar step gave {got:?}"));
        }
    }

    let mut rng = seeded_rng(1010);
    let dim = 5;
    let geometries =
        [Geometry::Euclidean, Geometry::Weighted { weights: vec![0.5, 1.0, 2.0, 3.0, 0.25] }, Geometry::Entropy];
    let mut worst_identity: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    for geometry in &geometries {
        let a = generate_matrix("gaussian", dim, dim, 1011).unwrap();
        let sigma = geometry.modulus();
        let eff_norm = exact_norm(&a) / sigma;
        for _ in 0..1000 {
            let (x, y, z) = (
                random_point(&mut rng, geometry, dim),
                random_point(&mut rng, geometry, dim),
                random_point(&mut rng, geometry, dim),
            );
            let d = |p: &Vector, q: &Vector| geometry.bregman(p, q).unwrap();
            let lhs = (geometry.grad(&y).unwrap() - geometry.grad(&z).unwrap()).dot(&(&x - &y));
            let rhs = d(&x, &z) - d(&x, &y) - d(&y, &z);
            let scale = 1.0 + d(&x, &z).abs() + d(&x, &y).abs() + d(&y, &z).abs();
            worst_identity = worst_identity.max((lhs - rhs).abs() / scale);

            let (v, w) = (random_point(&mut rng, geometry, dim), random_point(&mut rng, geometry, dim));
            let gamma: f64 = rng.random_range(0.1..10.0);
            let beta: f64 = rng.random_range(0.1..10.0);
            let alpha = (gamma * beta).sqrt() / eff_norm;
            let cross = alpha * (&a * (&v - &x)).dot(&(&w - &y)).abs();
            let bound = gamma * d(&x, &v) + beta * d(&y, &w);
            worst_cross = worst_cross.max(cross / bound);
        }
    }
    if worst_identity > 1e-12 {
        return Err(format!("three-term identity off by {worst_identity:.3e}"));
    }
    if worst_cross > 1.0 + 1e-12 {
        return Err(format!("cross term reaches {worst_cross:.6} of its bound"));
    }
    Ok(format!(
        "scalar step exact for 3 methods; 3x1000 samples, identity err {worst_identity:.1e}, max cross/bound {worst_cross:.4}"
    ))
}

fn main() {
    let runs = certificate_runs();
    let criteria: Vec<Criterion<'_>> = vec![
        ("Gauss-Seidel spectral radius equals 1/(1+alpha)", Box::new(criterion_1)),
        ("NAG lift instability witness", Box::new(criterion_2)),
        ("explicit Euler spectral radius closed form", Box::new(criterion_3)),
        ("descent certificates, 1e4 steps", Box::new(|| criterion_4(&runs))),
        ("gap certificate", Box::new(|| criterion_5(&runs))),
        ("rate orders", Box::new(|| criterion_6(&runs))),
        ("theta_k bound dominance", Box::new(|| criterion_7(&runs))),
        ("flow decay and RK4 order", Box::new(criterion_8)),
        ("increment summability", Box::new(|| criterion_9(&runs))),
        ("hand steps, three-term identity, cross bound", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
