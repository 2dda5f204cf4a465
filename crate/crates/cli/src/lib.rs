//! Experiment runner: reads a JSON config, runs one job, writes CSV traces and
//! a JSON summary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use saddle_core::dynamics::{
    build_g_new, explicit_euler_matrix, explicit_euler_radius, gs_iteration_matrix, instability_witness,
    integrate_flow, predicted_instability, richardson_check, spectrum, FlowState, QuadraticGame,
};
use saddle_core::problem::generate_matrix;
use saddle_core::solvers::write_trace_csv;
use saddle_core::{
    fit_rate, solve, Algorithm, ProblemDoc, RateMode, SaddleProblem, SolverConfig, Trace, Vector, ZooSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CERTIFICATE_VIOLATION: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Solve,
    Spectra,
    Flow,
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSource {
    Zoo(ZooSpec),
    /// Path to a problem JSON file, relative to the config file.
    File(PathBuf),
    Inline(Box<ProblemDoc>),
}

/// Trace column used for rate fitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitColumn {
    #[default]
    Gap,
    DistX,
    DistY,
}

fn default_fractions() -> Vec<f64> {
    vec![0.2, 0.5, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraConfig {
    pub mu: f64,
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    /// Explicit row-major coupling; overrides the seeded Gaussian draw.
    #[serde(default)]
    pub matrix: Option<Vec<f64>>,
    /// Gauss-Seidel steps as fractions of `2μ/‖A‖`.
    #[serde(default = "default_fractions")]
    pub alpha_fractions: Vec<f64>,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_every() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: f64,
    pub h: f64,
    #[serde(default = "default_gamma")]
    pub gamma0: f64,
    #[serde(default = "default_gamma")]
    pub beta0: f64,
    #[serde(default = "default_every")]
    pub sample_every: usize,
    #[serde(default)]
    pub start: Option<saddle_core::StartPoint>,
    /// Also compare against runs at `h/2` and `h/4`.
    #[serde(default)]
    pub richardson: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Zoo seeds; empty keeps the base problem's seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Empty keeps the base solver's algorithm.
    #[serde(default)]
    pub algorithms: Vec<Algorithm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub job: JobKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub problem: Option<ProblemSource>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub rate_window: Option<(usize, usize)>,
    #[serde(default)]
    pub rate_mode: Option<RateMode>,
    #[serde(default)]
    pub rate_column: FitColumn,
    #[serde(default)]
    pub spectra: Option<SpectraConfig>,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| anyhow!("malformed config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.rate_window {
            if lo < 1 || hi <= 2 * lo {
                bail!("field `rate_window` needs k_lo >= 1 and k_hi > 2*k_lo, got [{lo}, {hi}]");
            }
        }
        let need = |present: bool, field: &str| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(anyhow!("job `{:?}` needs field `{field}`", self.job).context("malformed config"))
            }
        };
        match self.job {
            JobKind::Solve | JobKind::Sweep => {
                need(self.problem.is_some(), "problem")?;
                need(self.solver.is_some(), "solver")?;
                if self.job == JobKind::Sweep {
                    need(self.sweep.is_some(), "sweep")?;
                }
            }
            JobKind::Spectra => need(self.spectra.is_some(), "spectra")?,
            JobKind::Flow => {
                need(self.problem.is_some(), "problem")?;
                need(self.flow.is_some(), "flow")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed_override: Option<u64>,
}

/// Result of one invocation: the summary written to disk and whether any
/// certificate was violated.
#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: Value,
    pub violated: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.violated {
            EXIT_CERTIFICATE_VIOLATION
        } else {
            EXIT_OK
        }
    }
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the config at `path` and returns the exit code, printing errors to stderr.
pub fn run(path: &Path, opts: &RunOptions) -> i32 {
    match run_config_file(path, opts) {
        Ok(report) => report.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

pub fn run_config_file(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let bytes = fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
    let cfg = ExperimentConfig::from_json(text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_config(&cfg, base, &config_hash(&bytes), opts)
}

pub fn run_config(cfg: &ExperimentConfig, base: &Path, hash: &str, opts: &RunOptions) -> Result<RunReport> {
    let out_dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set field `output`"))?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let started = Instant::now();
    let mut problem_hash = None;
    let (mut summary, violated) = match cfg.job {
        JobKind::Solve => {
            let problem = load_problem(cfg.problem.as_ref().unwrap(), base, opts.seed_override)?;
            problem_hash = problem_sha256(&problem);
            let job = run_solve(cfg, &problem, cfg.solver.as_ref().unwrap(), &out_dir, "")?;
            let violated = job.violated;
            (job.summary, violated)
        }
        JobKind::Sweep => run_sweep(cfg, base, &out_dir, opts)?,
        JobKind::Spectra => (run_spectra(cfg.spectra.as_ref().unwrap(), &out_dir, opts.seed_override)?, false),
        JobKind::Flow => {
            let problem = load_problem(cfg.problem.as_ref().unwrap(), base, opts.seed_override)?;
            problem_hash = problem_sha256(&problem);
            (run_flow(cfg.flow.as_ref().unwrap(), &problem, &out_dir)?, false)
        }
    };
    summary["provenance"] = json!({
        "config_sha256": hash,
        "problem_sha256": problem_hash,
        "name": cfg.name,
        "job": cfg.job,
        "seed_override": opts.seed_override,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&out_dir.join("summary.json"), &summary)?;
    // Timing lives in its own file so summary.json stays reproducible.
    let meta = json!({
        "config": cfg,
        "problem_sha256": summary["provenance"]["problem_sha256"],
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    write_json(&out_dir.join("meta.json"), &meta)?;
    Ok(RunReport { out_dir, summary, violated })
}

/// Hash of the serialized problem; `None` for problems with opaque oracles.
fn problem_sha256(problem: &SaddleProblem) -> Option<String> {
    let doc = ProblemDoc::from_problem("", problem).ok()?;
    Some(config_hash(doc.to_json().ok()?.as_bytes()))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_problem(source: &ProblemSource, base: &Path, seed_override: Option<u64>) -> Result<SaddleProblem> {
    let problem = match source {
        ProblemSource::Zoo(spec) => {
            let spec = seed_override.map_or_else(|| spec.clone(), |s| spec.with_seed(s));
            spec.build()?
        }
        ProblemSource::File(rel) => {
            let path = base.join(rel);
            let text = fs::read_to_string(&path).with_context(|| format!("reading problem {}", path.display()))?;
            ProblemDoc::from_json(&text)?.build()?
        }
        ProblemSource::Inline(doc) => doc.build()?,
    };
    Ok(problem)
}

struct SolveJob {
    summary: Value,
    violated: bool,
}

fn rate_summary(cfg: &ExperimentConfig, trace: &Trace) -> Result<Value> {
    let Some(window) = cfg.rate_window else {
        return Ok(Value::Null);
    };
    let column = cfg.rate_column;
    let samples: Vec<(usize, f64)> = trace
        .records
        .iter()
        .filter_map(|r| {
            let v = match column {
                FitColumn::Gap => r.gap,
                FitColumn::DistX => r.dist_x,
                FitColumn::DistY => r.dist_y,
            };
            v.map(|v| (r.k, v))
        })
        .collect();
    let mode = cfg.rate_mode.unwrap_or(RateMode::PowerLaw);
    let fit = fit_rate(&samples, window, mode)?;
    Ok(json!({ "column": column, "mode": mode, "window": window, "result": fit }))
}

fn run_solve(
    cfg: &ExperimentConfig,
    problem: &SaddleProblem,
    solver: &SolverConfig,
    out: &Path,
    prefix: &str,
) -> Result<SolveJob> {
    let trace = solve(problem, solver)?;
    let csv_path = out.join(format!("{prefix}trace.csv"));
    let file = fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_trace_csv(&trace.records, std::io::BufWriter::new(file))?;
    let last = trace.records.last();
    let (m, n) = problem.dims();
    let summary = json!({
        "algorithm": trace.algorithm,
        "dims": { "m": m, "n": n },
        "iterations": trace.iterations,
        "rows": trace.records.len(),
        "termination": trace.termination,
        "final_gap": last.and_then(|r| r.gap),
        "final_params": trace.final_params,
        "certificate": trace.certificate,
        "rate": rate_summary(cfg, &trace)?,
        "warnings": trace.warnings,
        "trace_csv": csv_path.file_name().map(|f| f.to_string_lossy().into_owned()),
    });
    Ok(SolveJob { summary, violated: trace.certificate.violated() })
}

fn run_sweep(cfg: &ExperimentConfig, base: &Path, out: &Path, opts: &RunOptions) -> Result<(Value, bool)> {
    let sweep = cfg.sweep.as_ref().unwrap();
    let solver = cfg.solver.as_ref().unwrap();
    let source = cfg.problem.as_ref().unwrap();
    let seeds: Vec<Option<u64>> = if sweep.seeds.is_empty() {
        vec![opts.seed_override]
    } else {
        if !matches!(source, ProblemSource::Zoo(_)) {
            bail!("field `sweep.seeds` needs a zoo problem");
        }
        sweep.seeds.iter().map(|&s| Some(s)).collect()
    };
    let algorithms = if sweep.algorithms.is_empty() { vec![solver.algorithm] } else { sweep.algorithms.clone() };
    let jobs: Vec<(String, Option<u64>, Algorithm)> = seeds
        .iter()
        .flat_map(|&seed| algorithms.iter().map(move |&alg| (seed, alg)))
        .map(|(seed, alg)| {
            let id = match seed {
                Some(s) => format!("seed{s}-{}", alg.name()),
                None => alg.name().to_string(),
            };
            (id, seed, alg)
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.workers.unwrap_or(0)).build()?;
    let results: Vec<Result<(String, SolveJob)>> = pool.install(|| {
        jobs.par_iter()
            .map(|(id, seed, alg)| {
                let problem = load_problem(source, base, *seed)?;
                let mut job_solver = solver.clone();
                job_solver.algorithm = *alg;
                let mut job = run_solve(cfg, &problem, &job_solver, out, &format!("{id}."))?;
                job.summary["id"] = json!(id);
                job.summary["seed"] = json!(seed);
                write_json(&out.join(format!("{id}.summary.json")), &job.summary)?;
                Ok((id.clone(), job))
            })
            .collect()
    });
    let mut entries = Vec::new();
    let mut violated = false;
    for r in results {
        let (id, job) = r?;
        violated |= job.violated;
        entries.push(json!({
            "id": id,
            "violated": job.violated,
            "final_gap": job.summary["final_gap"],
            "termination": job.summary["termination"],
        }));
    }
    entries.sort_by(|a, b| a["id"].as_str().cmp(&b["id"].as_str()));
    Ok((json!({ "jobs": entries }), violated))
}

fn spectra_game(spec: &SpectraConfig, seed_override: Option<u64>) -> Result<QuadraticGame> {
    let a = match &spec.matrix {
        Some(data) => saddle_core::linalg::from_row_major(spec.m, spec.n, data)?,
        None => generate_matrix("gaussian", spec.m, spec.n, seed_override.unwrap_or(spec.seed))?,
    };
    Ok(QuadraticGame::new(spec.mu, a)?)
}

fn run_spectra(spec: &SpectraConfig, out: &Path, seed_override: Option<u64>) -> Result<Value> {
    let game = spectra_game(spec, seed_override)?;
    let norm = game.opnorm();
    if norm == 0.0 {
        bail!("spectra job needs a nonzero coupling");
    }
    let mut rows = Vec::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["alpha", "rho_gs", "one_over_one_plus_alpha", "rho_euler", "rho_euler_closed"])?;
    let f = saddle_core::solvers::format_float;
    for &frac in &spec.alpha_fractions {
        if !(frac > 0.0) {
            bail!("field `spectra.alpha_fractions` must be positive, got {frac}");
        }
        let alpha = frac * game.max_stable_alpha();
        let rho_gs = spectrum(&gs_iteration_matrix(&game, alpha)?)?.spectral_radius();
        let rho_euler = spectrum(&explicit_euler_matrix(&game, alpha))?.spectral_radius();
        let closed = explicit_euler_radius(game.mu, norm, alpha)?;
        csv.write_record([f(alpha), f(rho_gs), f(1.0 / (1.0 + alpha)), f(rho_euler), f(closed)])?;
        rows.push(json!({
            "alpha_fraction": frac,
            "alpha": alpha,
            "rho_gs": rho_gs,
            "one_over_one_plus_alpha": 1.0 / (1.0 + alpha),
            "rho_euler": rho_euler,
            "rho_euler_closed": closed,
        }));
    }
    fs::write(out.join("spectra.csv"), csv.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    let witness = instability_witness(&game)?;
    let g_new = spectrum(&build_g_new(&game))?;
    let off_axis = g_new.eigenvalues.iter().map(|z| (z.re + 1.0).abs()).fold(0.0, f64::max);
    Ok(json!({
        "mu": game.mu,
        "opnorm": norm,
        "rows": rows,
        "nag_witness": witness.map(|z| [z.re, z.im]),
        "nag_predicted_real_part": predicted_instability(game.mu, norm),
        "nag_prediction_applies": norm > 2.0 * game.mu,
        "g_new_max_offset_from_minus_one": off_axis,
    }))
}

fn flow_start(flow: &FlowConfig, problem: &SaddleProblem) -> Result<FlowState> {
    let (x, y) = match &flow.start {
        Some(s) => (Vector::from_vec(s.x.clone()), Vector::from_vec(s.y.clone())),
        None => problem.default_start(),
    };
    let v = flow.start.as_ref().and_then(|s| s.v.clone()).map(Vector::from_vec).unwrap_or_else(|| x.clone());
    let w = flow.start.as_ref().and_then(|s| s.w.clone()).map(Vector::from_vec).unwrap_or_else(|| y.clone());
    Ok(FlowState::new(x, v, y, w, flow.gamma0, flow.beta0))
}

fn run_flow(flow: &FlowConfig, problem: &SaddleProblem, out: &Path) -> Result<Value> {
    let start = flow_start(flow, problem)?;
    let traj = integrate_flow(problem, &start, flow.t_end, flow.h, flow.sample_every)?;
    let file = fs::File::create(out.join("flow.csv"))?;
    traj.write_csv(std::io::BufWriter::new(file))?;
    let e0 = traj.samples[0].energy;
    let richardson = if flow.richardson {
        let r = richardson_check(problem, &start, flow.t_end, flow.h, flow.sample_every)?;
        json!({ "defect_h": r.defect_h, "defect_half": r.defect_half, "ratio": r.ratio })
    } else {
        Value::Null
    };
    Ok(json!({
        "t_end": flow.t_end,
        "h": flow.h,
        "samples": traj.samples.len(),
        "energy_start": e0,
        "energy_end": traj.final_energy(),
        "decay_ratio": traj.final_energy() / ((-flow.t_end).exp() * e0),
        "max_decay_excess": traj.decay_excess(),
        "richardson": richardson,
    }))
}
