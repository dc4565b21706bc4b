//! Lyapunov-like tracking: the auxiliary `W` system, its feedback, the
//! tracking engine shared with the planner, and limit-set diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{step_right_with, IntegratorConfig, Method};
use crate::planner::compute_g;
use crate::reference::Reference;
use crate::su_core::{unitary_eigenvalues, ComplexMatrix, SuElement, UnitaryMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeedbackGains(Vec<f64>);

impl FeedbackGains {
    pub fn new(f: Vec<f64>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Empty("gain list"));
        }
        if f.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "every gain must be finite and nonzero".into(),
            ));
        }
        Ok(Self(f))
    }

    pub fn unit(m: usize) -> Self {
        Self(vec![1.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|f| f * s).collect())
    }
}

/// `a_k = f_k Re tr(W X_r^H H_k X_r)` for every `k`, given `X_r(t)`.
fn feedback_with(
    xr: &ComplexMatrix,
    w: &ComplexMatrix,
    generators: &[SuElement],
    gains: &[f64],
    out: &mut [f64],
) {
    // Re tr(W X_r^H H X_r) = Re tr(P H) with P = X_r W X_r^H
    let p = xr * &(w * &xr.adjoint());
    for ((o, h), f) in out.iter_mut().zip(generators).zip(gains) {
        *o = f * p.fidelity_of_product(h.as_matrix());
    }
}

/// `X_r^H (sum_k f_k a_k H_k) X_r`.
fn generator_with(
    xr: &ComplexMatrix,
    a: &[f64],
    generators: &[SuElement],
    gains: &[f64],
) -> ComplexMatrix {
    let n = xr.dim();
    let mut s = ComplexMatrix::zeros(n);
    for ((h, &ak), f) in generators.iter().zip(a).zip(gains) {
        s.axpy(f * ak, h.as_matrix());
    }
    &xr.adjoint() * &(&s * xr)
}

fn check_gains(reference: &Reference, gains: &FeedbackGains) -> Result<()> {
    if gains.len() != reference.generators().len() {
        return Err(Error::DimensionMismatch {
            expected: reference.generators().len(),
            got: gains.len(),
        });
    }
    Ok(())
}

pub fn feedback_a(
    t: f64,
    w: &UnitaryMatrix,
    k: usize,
    reference: &Reference,
    goal: &UnitaryMatrix,
    gains: &FeedbackGains,
) -> Result<f64> {
    check_gains(reference, gains)?;
    let m = gains.len();
    if k >= m {
        return Err(Error::InvalidParameter(format!(
            "control index {k} out of range for m = {m}"
        )));
    }
    let xr = reference.sample(goal, t).into_matrix();
    let h = &reference.generators()[k];
    let direct = &(w.as_matrix() * &xr.adjoint()) * &(h.as_matrix() * &xr);
    Ok(gains.as_slice()[k] * direct.fidelity())
}

/// Right-acting generator `G(t, W)` of the auxiliary system `W' = W G`.
pub fn auxiliary_rhs(
    t: f64,
    w: &UnitaryMatrix,
    reference: &Reference,
    goal: &UnitaryMatrix,
    gains: &FeedbackGains,
) -> Result<SuElement> {
    check_gains(reference, gains)?;
    let xr = reference.sample(goal, t).into_matrix();
    let mut a = vec![0.0; gains.len()];
    feedback_with(
        &xr,
        w.as_matrix(),
        reference.generators(),
        gains.as_slice(),
        &mut a,
    );
    Ok(SuElement::project(&generator_with(
        &xr,
        &a,
        reference.generators(),
        gains.as_slice(),
    )))
}

/// `max_{j,k} |V(W X_inf^H B^j_k(0) X_inf)|` over a finite table.
pub fn e_residual(w: &UnitaryMatrix, table: &[SuElement], goal: &UnitaryMatrix) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::Empty("B table"));
    }
    let conj = conjugate_table(table, goal);
    Ok(e_residual_conj(w.as_matrix(), &conj))
}

fn conjugate_table(table: &[SuElement], goal: &UnitaryMatrix) -> Vec<ComplexMatrix> {
    let g = goal.as_matrix();
    let gh = g.adjoint();
    table.iter().map(|b| &gh * &(b.as_matrix() * g)).collect()
}

fn e_residual_conj(w: &ComplexMatrix, conj: &[ComplexMatrix]) -> f64 {
    conj.iter()
        .map(|b| w.fidelity_of_product(b).abs())
        .fold(0.0, f64::max)
}

/// Spread of the imaginary parts of the eigenvalues of `W`.
pub fn f_membership_gap(w: &UnitaryMatrix) -> Result<f64> {
    let ev = unitary_eigenvalues(w)?;
    let (lo, hi) = ev
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
            (lo.min(z.im), hi.max(z.im))
        });
    Ok(hi - lo)
}

/// Sampled tracking history. `z` is the error `X^H X_r`, `err` is
/// `|X - X_r|_F`, `v_z` is `Re tr Z`.
#[derive(Clone, Debug, Default)]
pub struct TrackingRun {
    pub times: Vec<f64>,
    pub x: Vec<UnitaryMatrix>,
    pub xr: Vec<UnitaryMatrix>,
    pub z: Vec<UnitaryMatrix>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub err: Vec<f64>,
    pub v_z: Vec<f64>,
    pub e_residual: Option<Vec<f64>>,
}

impl TrackingRun {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.z.first().map(UnitaryMatrix::dim).unwrap_or(0)
    }

    pub fn m(&self) -> usize {
        self.u.first().map(Vec::len).unwrap_or(0)
    }

    /// Largest `|err^2 - (2n - 2 V(Z))|` over the samples.
    pub fn norm_identity_residual(&self) -> f64 {
        let n = self.n() as f64;
        self.err
            .iter()
            .zip(&self.v_z)
            .map(|(e, v)| (e * e - (2.0 * n - 2.0 * v)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest increase of `err` between consecutive samples.
    pub fn max_err_increase(&self) -> f64 {
        self.err.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn max_unitarity_residual(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.xr)
            .chain(&self.z)
            .map(UnitaryMatrix::unitarity_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_det_residual(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.xr)
            .chain(&self.z)
            .map(UnitaryMatrix::det_residual)
            .fold(0.0, f64::max)
    }

    /// First sample time with `err <= frac * err(0)`.
    pub fn time_to_fraction(&self, frac: f64) -> Option<f64> {
        let e0 = *self.err.first()?;
        self.err
            .iter()
            .position(|&e| e <= frac * e0)
            .map(|i| self.times[i])
    }

    /// `max |v_k|` and `max |u_k|` over samples with `t <= t_max`.
    pub fn peak_controls(&self, k: usize, t_max: f64) -> (f64, f64) {
        let mut pv = 0.0f64;
        let mut pu = 0.0f64;
        for ((t, u), v) in self.times.iter().zip(&self.u).zip(&self.v) {
            if *t <= t_max {
                pu = pu.max(u[k].abs());
                pv = pv.max(v[k].abs());
            }
        }
        (pv, pu)
    }
}

/// Fixed-step auxiliary-system integrator that records samples of the glued
/// error `Z = Zbar W` on a global grid `t_i = i h`.
pub(crate) struct Engine<'a> {
    reference: &'a Reference,
    goal: UnitaryMatrix,
    gains: Vec<f64>,
    h: f64,
    method: Method,
    stride: usize,
    b_conj: Option<Vec<ComplexMatrix>>,
}

/// Where a segment ended.
pub(crate) struct SegmentEnd {
    pub index: usize,
    pub w: UnitaryMatrix,
    pub stopped: bool,
}

impl<'a> Engine<'a> {
    pub fn new(
        reference: &'a Reference,
        goal: &UnitaryMatrix,
        gains: &FeedbackGains,
        cfg: &IntegratorConfig,
        b_table: Option<&[SuElement]>,
    ) -> Result<Self> {
        cfg.validate()?;
        check_gains(reference, gains)?;
        if goal.dim() != reference.dim() {
            return Err(Error::DimensionMismatch {
                expected: reference.dim(),
                got: goal.dim(),
            });
        }
        let aligned = 2.0 * reference.spacing() / cfg.step;
        if (aligned - aligned.round()).abs() > 1e-9 || aligned.round() < 1.0 {
            log::warn!(
                "reference spacing {} is not a multiple of half the tracking step {}; stage times will be interpolated",
                reference.spacing(),
                cfg.step
            );
        }
        Ok(Self {
            reference,
            goal: goal.clone(),
            gains: gains.as_slice().to_vec(),
            h: cfg.step,
            method: cfg.method,
            stride: cfg.dense_stride,
            b_conj: b_table
                .filter(|t| !t.is_empty())
                .map(|t| conjugate_table(t, goal)),
        })
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    fn xr(&self, t: f64) -> ComplexMatrix {
        self.reference.sample(&self.goal, t).into_matrix()
    }

    pub fn feedback(&self, t: f64, w: &ComplexMatrix) -> Vec<f64> {
        let mut a = vec![0.0; self.gains.len()];
        feedback_with(
            &self.xr(t),
            w,
            self.reference.generators(),
            &self.gains,
            &mut a,
        );
        a
    }

    pub fn advance(&self, w: &UnitaryMatrix, t: f64) -> Result<UnitaryMatrix> {
        let gens = self.reference.generators();
        let mut a = vec![0.0; self.gains.len()];
        step_right_with(self.method, w, t, self.h, |s, wm| {
            let xr = self.xr(s);
            feedback_with(&xr, wm, gens, &self.gains, &mut a);
            generator_with(&xr, &a, gens, &self.gains)
        })
    }

    /// `v_k = f_k a_k(t, W)`.
    pub fn v_of(&self, t: f64, w: &UnitaryMatrix) -> Vec<f64> {
        self.feedback(t, w.as_matrix())
            .iter()
            .zip(&self.gains)
            .map(|(a, f)| f * a)
            .collect()
    }

    pub fn record(
        &self,
        run: &mut TrackingRun,
        i: usize,
        waypoint: &UnitaryMatrix,
        w: &UnitaryMatrix,
    ) {
        let t = self.time(i);
        let z = waypoint.compose(w);
        let xr = self.reference.sample(&self.goal, t);
        let x = xr.compose(&z.adjoint());
        let v = self.v_of(t, w);
        let u: Vec<f64> = self
            .reference
            .controls()
            .eval(t)
            .iter()
            .zip(&v)
            .map(|(ut, vk)| ut - vk)
            .collect();
        run.err.push(x.as_matrix().distance(xr.as_matrix()));
        run.v_z.push(z.fidelity());
        if let Some(conj) = &self.b_conj {
            run.e_residual
                .get_or_insert_with(Vec::new)
                .push(e_residual_conj(w.as_matrix(), conj));
        }
        run.times.push(t);
        run.x.push(x);
        run.xr.push(xr);
        run.z.push(z);
        run.u.push(u);
        run.v.push(v);
    }

    /// Integrates one segment from grid index `i0`. The start is always
    /// recorded; later samples fall on multiples of the stride. Stops at the
    /// first index after `i0` where `stop` holds, or at `i_max`.
    pub fn run_segment<S>(
        &self,
        run: &mut TrackingRun,
        i0: usize,
        w0: UnitaryMatrix,
        waypoint: &UnitaryMatrix,
        i_max: usize,
        mut stop: S,
    ) -> Result<SegmentEnd>
    where
        S: FnMut(usize, &UnitaryMatrix) -> bool,
    {
        self.record(run, i0, waypoint, &w0);
        let mut w = w0;
        let mut i = i0;
        while i < i_max {
            w = self.advance(&w, self.time(i))?;
            i += 1;
            if stop(i, &w) {
                return Ok(SegmentEnd {
                    index: i,
                    w,
                    stopped: true,
                });
            }
            if i.is_multiple_of(self.stride) {
                self.record(run, i, waypoint, &w);
            }
        }
        Ok(SegmentEnd {
            index: i,
            w,
            stopped: false,
        })
    }

    /// Records the closing sample of a run unless the grid already did.
    pub fn close(&self, run: &mut TrackingRun, end: &SegmentEnd, waypoint: &UnitaryMatrix) {
        let t = self.time(end.index);
        if run.times.last() != Some(&t) {
            self.record(run, end.index, waypoint, &end.w);
        }
    }
}

/// Re-integrates `X' = (sum_k u_k H_k) X`, `X(0) = I`, from sampled
/// controls on a uniform grid, with classical RK4 plus projection over pairs
/// of sample intervals so every stage time is a sample. Returns the time
/// reached and the state there.
pub fn replay_open_loop(
    times: &[f64],
    u: &[Vec<f64>],
    generators: &[SuElement],
) -> Result<(f64, UnitaryMatrix)> {
    if times.len() < 3 || u.len() != times.len() {
        return Err(Error::InvalidParameter(
            "replay needs at least three aligned samples".into(),
        ));
    }
    let n = generators
        .first()
        .ok_or(Error::Empty("generator list"))?
        .dim();
    let dt = times[1] - times[0];
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0))
    {
        return Err(Error::InvalidParameter(
            "replay needs uniformly spaced samples".into(),
        ));
    }
    let pairs = (times.len() - 1) / 2;
    let mut x = UnitaryMatrix::identity(n);
    for p in 0..pairs {
        let i0 = 2 * p;
        x = crate::integrator::step_left_with(
            Method::Rk4Project,
            &x,
            times[i0],
            2.0 * dt,
            |t, _| {
                let j = i0 + ((t - times[i0]) / dt).round() as usize;
                crate::reference::control_generator(generators, &u[j])
            },
        )?;
    }
    Ok((times[2 * pairs], x))
}

/// Options for a single auxiliary-system run.
#[derive(Clone, Debug, Default)]
pub struct TrackOptions {
    pub integrator: IntegratorConfig,
    /// Flattened `B^j_k(0)` table for the E residual.
    pub b_table: Option<Vec<SuElement>>,
}

/// Direct branch: `W(0) = X_inf`, integrated to `horizon`.
pub fn simulate_tracking(
    goal: &UnitaryMatrix,
    reference: &Reference,
    gains: &FeedbackGains,
    horizon: f64,
    opts: &TrackOptions,
) -> Result<TrackingRun> {
    reference.check_gate()?;
    let crit = compute_g(goal.dim())?;
    let v0 = goal.fidelity();
    if v0 <= crit.delta {
        return Err(Error::Precondition(format!(
            "V(X_inf) = {v0} does not exceed delta = {}; use the segmented planner",
            crit.delta
        )));
    }
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let engine = Engine::new(
        reference,
        goal,
        gains,
        &opts.integrator,
        opts.b_table.as_deref(),
    )?;
    let i_max = crate::integrator::step_count(0.0, horizon, engine.step());
    let identity = UnitaryMatrix::identity(goal.dim());
    let mut run = TrackingRun::default();
    let end = engine.run_segment(&mut run, 0, goal.clone(), &identity, i_max, |_, _| false)?;
    engine.close(&mut run, &end, &identity);
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{integrate_reference, FourierControl};
    use crate::su_core::{expm, generator_hi, generator_hr};
    use num_complex::Complex64 as C64;

    fn su2_setup() -> (Reference, Vec<SuElement>) {
        let gens = vec![
            generator_hr(1, 2, 2).unwrap(),
            generator_hi(1, 2, 2).unwrap(),
        ];
        let fc = FourierControl::random(2, 3, 2.0, 1.0, 5).unwrap();
        let r = integrate_reference(&fc, &gens, &IntegratorConfig::with_step(5e-3)).unwrap();
        (r, gens)
    }

    #[test]
    fn gains_must_be_nonzero() {
        assert!(FeedbackGains::new(vec![1.0, 0.0]).is_err());
        assert!(FeedbackGains::new(vec![]).is_err());
        assert!(FeedbackGains::new(vec![-2.0]).is_ok());
    }

    #[test]
    fn identity_is_an_equilibrium() {
        let (r, _) = su2_setup();
        let g = FeedbackGains::unit(2);
        let goal = UnitaryMatrix::identity(2);
        for t in [0.0, 0.13, 0.5, 0.77] {
            assert_eq!(feedback_a(t, &goal, 0, &r, &goal, &g).unwrap(), 0.0);
            assert!(auxiliary_rhs(t, &goal, &r, &goal, &g).unwrap().norm() <= 1e-12);
        }
    }

    #[test]
    fn feedback_first_order_expansion() {
        let (r, gens) = su2_setup();
        let g = FeedbackGains::new(vec![1.5, 1.0]).unwrap();
        let goal = UnitaryMatrix::identity(2);
        let eps = 1e-5;
        let w = UnitaryMatrix::new(expm(&gens[0].as_matrix().scale(-eps)).unwrap()).unwrap();
        // X_r(0) = I, so a_1 = f_1 eps |H_1|^2 to first order
        let a = feedback_a(0.0, &w, 0, &r, &goal, &g).unwrap();
        let expected = 1.5 * eps * gens[0].norm().powi(2);
        assert!((a - expected).abs() < 1e-9, "{a} vs {expected}");
    }

    #[test]
    fn rhs_is_in_algebra() {
        let (r, gens) = su2_setup();
        let g = FeedbackGains::unit(2);
        let goal = UnitaryMatrix::new(expm(&gens[1].as_matrix().scale(0.7)).unwrap()).unwrap();
        let w = UnitaryMatrix::new(expm(&gens[0].as_matrix().scale(0.4)).unwrap()).unwrap();
        let rhs = auxiliary_rhs(0.31, &w, &r, &goal, &g).unwrap();
        assert!(rhs.as_matrix().skew_residual() < 1e-12);
        assert!(rhs.as_matrix().trace().norm() < 1e-12);
    }

    #[test]
    fn residual_examples() {
        let (_, gens) = su2_setup();
        let goal = UnitaryMatrix::identity(2);
        assert_eq!(e_residual(&goal, &gens, &goal).unwrap(), 0.0);
        let w = UnitaryMatrix::new(expm(&gens[0].as_matrix().scale(0.5)).unwrap()).unwrap();
        assert!(e_residual(&w, &gens, &goal).unwrap() > 0.1);
        assert!(e_residual(&w, &[], &goal).is_err());
    }

    #[test]
    fn membership_gap_examples() {
        let i = C64::new(0.0, 1.0);
        assert!(f_membership_gap(&UnitaryMatrix::identity(4)).unwrap() < 1e-12);
        let w = UnitaryMatrix::new(ComplexMatrix::from_diagonal(&[i, i, -i, -i])).unwrap();
        assert!((f_membership_gap(&w).unwrap() - 2.0).abs() < 1e-12);
        let th = 0.3;
        let a = C64::from_polar(1.0, th);
        let b = C64::from_polar(1.0, std::f64::consts::PI - th);
        let w = UnitaryMatrix::new(ComplexMatrix::from_diagonal(&[a, b, a, b])).unwrap();
        assert!(f_membership_gap(&w).unwrap() < 1e-12);
    }

    #[test]
    fn identity_goal_tracks_reference() {
        let (r, _) = su2_setup();
        let goal = UnitaryMatrix::identity(2);
        let opts = TrackOptions {
            integrator: IntegratorConfig::with_step(1e-2),
            b_table: None,
        };
        let run = simulate_tracking(&goal, &r, &FeedbackGains::unit(2), 2.0, &opts).unwrap();
        assert_eq!(run.len(), 201);
        assert!(run.err.iter().all(|&e| e == 0.0));
        assert!(run.v.iter().flatten().all(|&v| v == 0.0));
        for (t, u) in run.times.iter().zip(&run.u) {
            assert_eq!(u, &r.controls().eval(*t));
        }
    }

    #[test]
    fn su2_tracking_is_monotone() {
        let (r, gens) = su2_setup();
        let goal = UnitaryMatrix::new(expm(&gens[1].as_matrix().scale(0.9)).unwrap()).unwrap();
        let opts = TrackOptions {
            integrator: IntegratorConfig::with_step(1e-2),
            b_table: None,
        };
        let run = simulate_tracking(&goal, &r, &FeedbackGains::unit(2), 20.0, &opts).unwrap();
        assert!(run.max_err_increase() <= 1e-9);
        assert!(run.norm_identity_residual() <= 1e-9);
        assert!(run.err.last().unwrap() < &(0.1 * run.err[0]));
    }

    #[test]
    fn rejects_goal_below_delta() {
        let (r, _) = su2_setup();
        let goal = UnitaryMatrix::new(ComplexMatrix::identity(2).scale(-1.0)).unwrap();
        let opts = TrackOptions::default();
        let res = simulate_tracking(&goal, &r, &FeedbackGains::unit(2), 1.0, &opts);
        assert!(matches!(res, Err(Error::Precondition(_))));
    }
}
