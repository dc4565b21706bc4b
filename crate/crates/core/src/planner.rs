//! Critical set of the fidelity function, eigenphase paths to the identity,
//! and the segmented planner for goals outside the guaranteed basin.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::controller::{simulate_tracking, Engine, FeedbackGains, TrackOptions, TrackingRun};
use crate::error::{Error, Result};
use crate::integrator::{step_count, IntegratorConfig};
use crate::reference::{
    default_j_max, regularity_check, taylor_b_at_zero, Reference, RegularityReport,
};
use crate::su_core::{
    unitary_eigendecomposition, MatrixJson, SuElement, UnitaryMatrix, DEFAULT_RANK_TOL,
};

const DEDUPE_TOL: f64 = 1e-12;
const MAX_SEGMENTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub n: usize,
    pub values: Vec<f64>,
    pub delta: f64,
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    let x = if (x - r).abs() <= DEDUPE_TOL { r } else { x };
    // avoid printing -0
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Values `(n1 - n2) cos(theta)` over eigenvalue configurations with `n1`
/// copies of `e^{i theta}`, `n2` copies of `e^{i (pi - theta)}`, unit
/// product.
pub fn compute_g(n: usize) -> Result<CriticalSet> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut values: Vec<f64> = Vec::new();
    for n2 in 0..n {
        let n1 = n - n2;
        if n1 == n2 {
            if n1.is_multiple_of(2) {
                values.push(0.0);
            }
            continue;
        }
        let d = n as i64 - 2 * n2 as i64;
        for k in 0..d.unsigned_abs() {
            let theta = (2 * k as i64 - n2 as i64) as f64 * PI / d as f64;
            values.push(snap((n1 as f64 - n2 as f64) * theta.cos()));
        }
    }
    values.sort_by(|a, b| a.total_cmp(b));
    values.dedup_by(|a, b| (*a - *b).abs() <= DEDUPE_TOL);
    let nf = n as f64;
    let delta = values
        .iter()
        .copied()
        .filter(|&x| x < nf - DEDUPE_TOL)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CriticalSet { n, values, delta })
}

/// `Zbar_l = M diag(e^{i lambda (1 - l/N)}) M^H`, `l = 0..=N`.
#[derive(Clone, Debug)]
pub struct PathPlan {
    pub phases: Vec<f64>,
    pub segments: usize,
    pub waypoints: Vec<UnitaryMatrix>,
    pub delta_step: f64,
    pub margin: f64,
    /// `sum_j cos(lambda_j / N)`, shared by every consecutive pair.
    pub step_fidelity: f64,
}

#[derive(Serialize)]
struct PathJson<'a> {
    phases: &'a [f64],
    #[serde(rename = "N")]
    segments: usize,
    delta_step: f64,
    margin: f64,
    step_fidelity: f64,
    waypoints: Vec<MatrixJson>,
}

impl Serialize for PathPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PathJson {
            phases: &self.phases,
            segments: self.segments,
            delta_step: self.delta_step,
            margin: self.margin,
            step_fidelity: self.step_fidelity,
            waypoints: self
                .waypoints
                .iter()
                .map(|w| w.as_matrix().to_json())
                .collect(),
        }
        .serialize(s)
    }
}

fn step_fidelity(phases: &[f64], segments: usize) -> f64 {
    phases.iter().map(|l| (l / segments as f64).cos()).sum()
}

pub fn build_path(goal: &UnitaryMatrix, crit: &CriticalSet, margin: f64) -> Result<PathPlan> {
    build_path_with(goal, crit, margin, None)
}

/// As [`build_path`], with an optional fixed segment count that must still
/// satisfy the margined inequality.
pub fn build_path_with(
    goal: &UnitaryMatrix,
    crit: &CriticalSet,
    margin: f64,
    segments: Option<usize>,
) -> Result<PathPlan> {
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "margin must be positive, got {margin}"
        )));
    }
    if crit.n != goal.dim() {
        return Err(Error::DimensionMismatch {
            expected: crit.n,
            got: goal.dim(),
        });
    }
    let eig = unitary_eigendecomposition(goal)?;
    let level = crit.delta + margin;
    let n_seg = match segments {
        Some(0) => {
            return Err(Error::InvalidParameter(
                "segment count must be positive".into(),
            ))
        }
        Some(s) if step_fidelity(&eig.phases, s) > level => s,
        Some(s) => {
            return Err(Error::InvalidParameter(format!(
                "N = {s} gives step fidelity {} <= delta + margin = {level}",
                step_fidelity(&eig.phases, s)
            )))
        }
        None => (1..=MAX_SEGMENTS)
            .find(|&s| step_fidelity(&eig.phases, s) > level)
            .ok_or_else(|| {
                Error::Internal(format!(
                    "no segment count up to {MAX_SEGMENTS} clears {level}"
                ))
            })?,
    };
    let n = goal.dim();
    let mut waypoints = Vec::with_capacity(n_seg + 1);
    waypoints.push(goal.clone());
    for l in 1..n_seg {
        let s = 1.0 - l as f64 / n_seg as f64;
        waypoints.push(UnitaryMatrix::new(eig.power(s))?);
    }
    waypoints.push(UnitaryMatrix::identity(n));
    Ok(PathPlan {
        step_fidelity: step_fidelity(&eig.phases, n_seg),
        phases: eig.phases,
        segments: n_seg,
        waypoints,
        delta_step: 1.0 / n_seg as f64,
        margin,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Direct,
    Algorithm1,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanConfig {
    pub integrator: IntegratorConfig,
    /// Length of the direct run, and cap on the final segment.
    pub horizon: f64,
    pub err_target: f64,
    pub margin: f64,
    /// Closeness threshold `V(W) >= n - eps_seg` for leaving a segment.
    pub eps_seg: Option<f64>,
    /// Cap on every intermediate segment, in time units.
    pub segment_cap: f64,
    pub segments: Option<usize>,
    pub j_max: Option<usize>,
    pub rank_tol: f64,
    pub e_residual: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            horizon: 30.0,
            err_target: 1e-2,
            margin: 0.1,
            eps_seg: None,
            segment_cap: 200.0,
            segments: None,
            j_max: None,
            rank_tol: DEFAULT_RANK_TOL,
            e_residual: false,
        }
    }
}

impl PlanConfig {
    pub fn eps_seg_for(&self, n: usize) -> f64 {
        self.eps_seg.unwrap_or(0.05 * n as f64)
    }
}

/// A planned run. Segment `l` covers samples `segment_starts[l]..` up to
/// the next start.
#[derive(Clone, Debug)]
pub struct GluedPlan {
    pub branch: Branch,
    pub critical_set: CriticalSet,
    pub path: Option<PathPlan>,
    pub regularity: Option<RegularityReport>,
    pub switch_times: Vec<f64>,
    /// `V(W_l(T_l))` at each switch.
    pub switch_v: Vec<f64>,
    /// `|Z(T_l^-) - Z(T_l^+)|_F` at each interior switch.
    pub z_jumps: Vec<f64>,
    /// `max_k |v_k(T_l^-) - v_k(T_l^+)|` at each interior switch.
    pub v_jumps: Vec<f64>,
    pub segment_starts: Vec<usize>,
    pub converged: bool,
    pub final_err: f64,
    pub final_v: f64,
    pub run: TrackingRun,
}

#[derive(Serialize)]
pub struct PlanSummary<'a> {
    pub branch: Branch,
    pub critical_set: &'a CriticalSet,
    pub goal_v: f64,
    pub path: Option<&'a PathPlan>,
    pub switch_times: &'a [f64],
    pub switch_v: &'a [f64],
    pub z_jumps: &'a [f64],
    pub v_jumps: &'a [f64],
    pub converged: bool,
    pub final_err: f64,
    pub final_v: f64,
    pub end_time: f64,
}

impl GluedPlan {
    pub fn summary(&self, goal: &UnitaryMatrix) -> PlanSummary<'_> {
        PlanSummary {
            branch: self.branch,
            critical_set: &self.critical_set,
            goal_v: goal.fidelity(),
            path: self.path.as_ref(),
            switch_times: &self.switch_times,
            switch_v: &self.switch_v,
            z_jumps: &self.z_jumps,
            v_jumps: &self.v_jumps,
            converged: self.converged,
            final_err: self.final_err,
            final_v: self.final_v,
            end_time: self.run.times.last().copied().unwrap_or(0.0),
        }
    }

    fn finish(&mut self, err_target: f64) {
        self.final_err = self.run.err.last().copied().unwrap_or(f64::NAN);
        self.final_v = self.run.v_z.last().copied().unwrap_or(f64::NAN);
        self.converged = self.final_err <= err_target;
    }
}

fn b_table(reference: &Reference, cfg: &PlanConfig) -> Result<Option<Vec<SuElement>>> {
    if !cfg.e_residual {
        return Ok(None);
    }
    let j_max = cfg.j_max.unwrap_or_else(|| default_j_max(reference.dim()));
    let table = taylor_b_at_zero(reference.controls(), reference.generators(), j_max)?;
    Ok(Some(table.into_iter().flatten().collect()))
}

/// Segmented planner. Every intermediate segment must fire its stop rule
/// within `segment_cap`; the final segment stops at `err_target` or after
/// `horizon`.
pub fn run_algorithm1(
    goal: &UnitaryMatrix,
    reference: &Reference,
    gains: &FeedbackGains,
    crit: &CriticalSet,
    cfg: &PlanConfig,
) -> Result<GluedPlan> {
    reference.check_gate()?;
    let n = goal.dim();
    if crit.n != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: crit.n,
        });
    }
    let path = build_path_with(goal, crit, cfg.margin, cfg.segments)?;
    let table = b_table(reference, cfg)?;
    let engine = Engine::new(reference, goal, gains, &cfg.integrator, table.as_deref())?;
    let h = engine.step();
    let cap = step_count(0.0, cfg.segment_cap, h);
    let final_cap = step_count(0.0, cfg.horizon, h);
    let level = crit.delta + cfg.margin;
    let near = n as f64 - cfg.eps_seg_for(n);
    let wp = &path.waypoints;
    let big_n = path.segments;

    let mut plan = GluedPlan {
        branch: Branch::Algorithm1,
        critical_set: crit.clone(),
        path: None,
        regularity: None,
        switch_times: Vec::new(),
        switch_v: Vec::new(),
        z_jumps: Vec::new(),
        v_jumps: Vec::new(),
        segment_starts: Vec::new(),
        converged: false,
        final_err: f64::NAN,
        final_v: f64::NAN,
        run: TrackingRun::default(),
    };

    let mut i = 0usize;
    let mut w_prev = UnitaryMatrix::identity(n);
    for l in 1..=big_n {
        let w_start = wp[l].adjoint().compose(&wp[l - 1]).compose(&w_prev);
        let t = engine.time(i);
        if l > 1 {
            let z_before = wp[l - 1].compose(&w_prev);
            let z_after = wp[l].compose(&w_start);
            plan.z_jumps
                .push(z_before.as_matrix().distance(z_after.as_matrix()));
            let vb = engine.v_of(t, &w_prev);
            let va = engine.v_of(t, &w_start);
            plan.v_jumps.push(
                vb.iter()
                    .zip(&va)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );
        }
        plan.switch_times.push(t);
        plan.switch_v.push(w_start.fidelity());
        plan.segment_starts.push(plan.run.len());
        log::info!(
            "segment {l}/{big_n} starts at t = {t} with V(W) = {}",
            w_start.fidelity()
        );

        if l < big_n {
            let next = wp[l + 1].adjoint().compose(&wp[l]);
            let end = engine.run_segment(&mut plan.run, i, w_start, &wp[l], i + cap, |_, w| {
                next.as_matrix().fidelity_of_product(w.as_matrix()) > level && w.fidelity() >= near
            })?;
            if !end.stopped {
                return Err(Error::HorizonExceeded {
                    segment: l,
                    time: engine.time(end.index),
                    achieved_v: end.w.fidelity(),
                });
            }
            i = end.index;
            w_prev = end.w;
        } else {
            let target = cfg.err_target;
            let identity = UnitaryMatrix::identity(n);
            let end =
                engine.run_segment(&mut plan.run, i, w_start, &wp[l], i + final_cap, |_, w| {
                    w.as_matrix().distance(identity.as_matrix()) <= target
                })?;
            engine.close(&mut plan.run, &end, &wp[l]);
            if !end.stopped {
                log::warn!(
                    "final segment did not reach err {target} within {} time units",
                    cfg.horizon
                );
            }
        }
    }
    plan.path = Some(path);
    plan.finish(cfg.err_target);
    Ok(plan)
}

/// Dispatches on `V(X_inf)`: above `delta + margin` the direct branch runs
/// for the full horizon, otherwise the segmented planner.
pub fn plan(
    goal: &UnitaryMatrix,
    reference: &Reference,
    gains: &FeedbackGains,
    cfg: &PlanConfig,
) -> Result<GluedPlan> {
    reference.check_gate()?;
    let n = goal.dim();
    let crit = compute_g(n)?;
    let j_max = cfg.j_max.unwrap_or_else(|| default_j_max(n));
    let regularity = regularity_check(
        reference.controls(),
        reference.generators(),
        j_max,
        cfg.rank_tol,
    )?;
    if !regularity.is_regular {
        return Err(Error::RegularityGate {
            rank: regularity.rank,
            required: regularity.required,
        });
    }
    let mut out = if goal.fidelity() > crit.delta + cfg.margin {
        let opts = TrackOptions {
            integrator: cfg.integrator,
            b_table: b_table(reference, cfg)?,
        };
        let run = simulate_tracking(goal, reference, gains, cfg.horizon, &opts)?;
        let mut p = GluedPlan {
            branch: Branch::Direct,
            critical_set: crit,
            path: None,
            regularity: None,
            switch_times: vec![0.0],
            switch_v: vec![goal.fidelity()],
            z_jumps: Vec::new(),
            v_jumps: Vec::new(),
            segment_starts: vec![0],
            converged: false,
            final_err: f64::NAN,
            final_v: f64::NAN,
            run,
        };
        p.finish(cfg.err_target);
        p
    } else {
        run_algorithm1(goal, reference, gains, &crit, cfg)?
    };
    out.regularity = Some(regularity);
    Ok(out)
}
