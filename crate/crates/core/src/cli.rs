//! Command-line front end. Exit codes: 0 success, 1 domain failure,
//! 2 usage error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, FourierSource, GoalSpec, RunConfig};
use crate::controller::{simulate_tracking, TrackOptions, TrackingRun};
use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::io::{self, write_json, write_plots, write_run_files};
use crate::planner::{compute_g, plan, GluedPlan};
use crate::reference::{regularity_check, taylor_b_at_zero};
use crate::spin_model::{compare_rwa, Axis, SpinModel};
use crate::su_core::{ComplexMatrix, MatrixJson};

#[derive(Debug, Parser)]
#[command(
    name = "su-steer",
    version,
    about = "Periodic motion planning on SU(n)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the critical set of Re tr on SU(n) and its level delta.
    ComputeDelta {
        #[arg(long)]
        n: usize,
    },
    /// Rank test on the B^j_k(0) table; exits 0 iff regular.
    CheckRegularity(RunArgs),
    /// Plan and simulate, writing plan.json, run.csv, states.csv, meta.json and plots.
    Plan(RunArgs),
    /// Direct tracking run without segmentation.
    Simulate(RunArgs),
    /// Render SVG plots from a run directory.
    Plot {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Two-spin model checks.
    #[command(subcommand)]
    SpinModel(SpinCommand),
}

#[derive(Debug, Subcommand)]
pub enum SpinCommand {
    /// Compare e^{-Dt} D_a e^{Dt} with the closed forms on a time grid.
    VerifyConjugation {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
    },
    /// Integrate the interaction-picture model and its rotating-wave reduction
    /// under the scaled reference controls.
    CompareRwa {
        #[arg(long, default_value_t = 1.0)]
        amplitude_scale: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value = "rwa_compare.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FourierKind {
    TwoSpin,
    Zero,
    Random,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Built-in configuration: cnot or minus_identity.
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON RunConfig file; fields left out take preset defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Goal matrix as JSON {n, re, im}.
    #[arg(long)]
    pub goal: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum)]
    pub fourier: Option<FourierKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Amplitude bound for random coefficients.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub n_f: Option<usize>,
    #[arg(long)]
    pub j_max: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::InvalidParameter(format!("cannot read {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text)?
            }
            (None, Some(p)) => RunConfig::preset(p)?,
            (None, None) => RunConfig::cnot(),
        };
        if let Some(path) = &self.goal {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidParameter(format!("cannot read {}: {e}", path.display()))
            })?;
            let m: MatrixJson = serde_json::from_str(&text)?;
            ComplexMatrix::try_from(m.clone())?;
            cfg.goal = GoalSpec::Matrix(m);
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(h) = self.step {
            cfg.integrator.step = h;
        }
        if let Some(s) = self.stride {
            cfg.integrator.dense_stride = s;
        }
        if let Some(j) = self.j_max {
            cfg.j_max = Some(j);
        }
        if let Some(t) = self.tol {
            cfg.rank_tol = t;
        }
        if let Some(kind) = self.fourier {
            let n_f = self.n_f.unwrap_or(5);
            cfg.fourier = match kind {
                FourierKind::TwoSpin => FourierSource::TwoSpin,
                FourierKind::Zero => FourierSource::Zero { n_f },
                FourierKind::Random => FourierSource::Random {
                    a: self.amplitude.unwrap_or(5.0),
                    n_f,
                    seed: self.seed.unwrap_or(0),
                },
            };
        } else if let (Some(s), FourierSource::Random { seed, .. }) = (self.seed, &mut cfg.fourier)
        {
            *seed = s;
        }
        if let Some(dir) = &self.out {
            cfg.output_dir = Some(dir.clone());
        }
        cfg.apply_seed_env()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes JSON with integral values printed as integers.
fn integral_json(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

pub fn cmd_compute_delta(n: usize) -> Result<Value> {
    let g = compute_g(n)?;
    Ok(json!({
        "n": g.n,
        "values": g.values.iter().map(|&x| integral_json(x)).collect::<Vec<_>>(),
        "delta": integral_json(g.delta),
    }))
}

pub fn cmd_check_regularity(cfg: &RunConfig) -> Result<(bool, Value)> {
    let gens = cfg.build_generators()?;
    let fc = cfg.build_controls(gens.len())?;
    let report = regularity_check(&fc, &gens, cfg.j_max(), cfg.rank_tol)?;
    let mut v = serde_json::to_value(&report)?;
    v["seed"] = json!(cfg.seed());
    v["fourier"] = serde_json::to_value(&fc)?;
    Ok((report.is_regular, v))
}

#[derive(Serialize)]
struct Residuals {
    periodicity: f64,
    max_unitarity: f64,
    max_det: f64,
    norm_identity: f64,
    max_err_increase: f64,
    final_err: f64,
    final_v_z: f64,
    final_e_residual: Option<f64>,
}

fn residuals(exp: &Experiment, run: &TrackingRun) -> Residuals {
    Residuals {
        periodicity: exp.reference.periodicity_residual(),
        max_unitarity: run.max_unitarity_residual(),
        max_det: run.max_det_residual(),
        norm_identity: run.norm_identity_residual(),
        max_err_increase: run.max_err_increase(),
        final_err: run.err.last().copied().unwrap_or(f64::NAN),
        final_v_z: run.v_z.last().copied().unwrap_or(f64::NAN),
        final_e_residual: run.e_residual.as_ref().and_then(|e| e.last().copied()),
    }
}

fn meta(exp: &Experiment, run: &TrackingRun, extra: Value) -> Result<Value> {
    let mut v = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": exp.config.seed(),
        "gains": exp.gains,
        "horizon": exp.config.horizon,
        "samples": run.len(),
        "time_to_tenth_err": run.time_to_fraction(0.1),
        "residuals": residuals(exp, run),
        "reference_flagged": exp.reference.is_flagged(),
        "config": exp.config,
    });
    if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
        map.extend(more);
    }
    Ok(v)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("su-steer-out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn cmd_plan(cfg: &RunConfig) -> Result<(GluedPlan, PathBuf)> {
    let exp = cfg.prepare()?;
    let dir = output_dir(cfg)?;
    let p = plan(&exp.goal, &exp.reference, &exp.gains, &cfg.plan_config())?;
    write_run_files(&dir, &p.run, cfg.states_stride)?;
    write_json(&dir.join(io::PLAN_JSON), &p.summary(&exp.goal))?;
    let extra = json!({
        "branch": p.branch,
        "converged": p.converged,
        "regularity": p.regularity,
    });
    write_json(&dir.join(io::META_JSON), &meta(&exp, &p.run, extra)?)?;
    write_plots(&dir)?;
    Ok((p, dir))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(TrackingRun, PathBuf)> {
    let exp = cfg.prepare()?;
    let dir = output_dir(cfg)?;
    let b_table = if cfg.e_residual {
        Some(
            taylor_b_at_zero(&exp.controls, &exp.generators, cfg.j_max())?
                .into_iter()
                .flatten()
                .collect(),
        )
    } else {
        None
    };
    let opts = TrackOptions {
        integrator: cfg.integrator,
        b_table,
    };
    let run = simulate_tracking(&exp.goal, &exp.reference, &exp.gains, cfg.horizon, &opts)?;
    write_run_files(&dir, &run, cfg.states_stride)?;
    write_json(
        &dir.join(io::META_JSON),
        &meta(&exp, &run, json!({"branch": "direct"}))?,
    )?;
    write_plots(&dir)?;
    Ok((run, dir))
}

pub fn cmd_plot(dir: &Path) -> Result<Vec<PathBuf>> {
    write_plots(dir)
}

#[derive(Debug, Serialize)]
pub struct ConjugationReport {
    pub points: usize,
    pub t_max: f64,
    pub max_deviation: [f64; 3],
    pub recombination_max_imag: f64,
    pub passed: bool,
}

pub fn cmd_verify_conjugation(points: usize, t_max: f64) -> Result<ConjugationReport> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "need at least two grid points".into(),
        ));
    }
    let model = SpinModel::default();
    let mut dev = [0.0f64; 3];
    let mut imag = 0.0f64;
    let probe = [0.7, -1.3, 2.1, 0.4, -0.9, 1.6];
    for i in 0..points {
        let t = t_max * i as f64 / (points - 1) as f64;
        for (a, axis) in Axis::ALL.iter().enumerate() {
            let c = model.interaction_c(*axis, t);
            let closed = model.interaction_c_closed_form(*axis, t);
            let d = (0..4)
                .flat_map(|r| (0..4).map(move |s| (r, s)))
                .map(|(r, s)| (c.as_matrix().get(r, s) - closed.get(r, s)).norm())
                .fold(0.0, f64::max);
            dev[a] = dev[a].max(d);
        }
        for z in model.recombine_controls_complex(&probe, t) {
            imag = imag.max(z.im.abs());
        }
    }
    let passed = dev.iter().all(|&d| d <= 1e-12) && imag <= 1e-14;
    Ok(ConjugationReport {
        points,
        t_max,
        max_deviation: dev,
        recombination_max_imag: imag,
        passed,
    })
}

pub fn cmd_compare_rwa(scale: f64, horizon: f64, step: f64, out: &Path) -> Result<Value> {
    let model = SpinModel::default();
    let fc = crate::config::two_spin_abar();
    let cfg = IntegratorConfig::with_step(step);
    let cmp = compare_rwa(&model, |t| fc.eval(t), horizon, &cfg, scale)?;
    let mut buf = String::from("t,err\n");
    for (t, e) in cmp.times.iter().zip(&cmp.errors) {
        buf.push_str(&format!("{t},{e}\n"));
    }
    io::atomic_write(out, buf.as_bytes())?;
    Ok(json!({
        "amplitude_scale": scale,
        "horizon": horizon,
        "step": step,
        "max_error": cmp.max_error,
        "final_error": cmp.errors.last(),
        "csv": out,
    }))
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::ComputeDelta { n } => {
            print_json(&cmd_compute_delta(n)?)?;
            Ok(0)
        }
        Command::CheckRegularity(args) => {
            let (ok, v) = cmd_check_regularity(&args.to_config()?)?;
            print_json(&v)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Plan(args) => {
            let (p, dir) = cmd_plan(&args.to_config()?)?;
            print_json(&json!({
                "branch": p.branch,
                "converged": p.converged,
                "final_err": p.final_err,
                "switch_times": p.switch_times,
                "output_dir": dir,
            }))?;
            Ok(0)
        }
        Command::Simulate(args) => {
            let (run, dir) = cmd_simulate(&args.to_config()?)?;
            print_json(&json!({
                "final_err": run.err.last(),
                "samples": run.len(),
                "output_dir": dir,
            }))?;
            Ok(0)
        }
        Command::Plot { run_dir } => {
            let files = cmd_plot(&run_dir)?;
            print_json(&files)?;
            Ok(0)
        }
        Command::SpinModel(SpinCommand::VerifyConjugation { points, t_max }) => {
            let rep = cmd_verify_conjugation(points, t_max)?;
            print_json(&rep)?;
            Ok(if rep.passed { 0 } else { 1 })
        }
        Command::SpinModel(SpinCommand::CompareRwa {
            amplitude_scale,
            horizon,
            step,
            out,
        }) => {
            print_json(&cmd_compare_rwa(amplitude_scale, horizon, step, &out)?)?;
            Ok(0)
        }
    }
}

/// Entry point used by the binary.
pub fn main_from_env() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
