//! Fixed-step time integration of `Y' = F(t, Y) Y` (left) and
//! `Y' = Y F(t, Y)` (right) with `F` valued in su(n).
//!
//! The default method is a fourth-order Runge-Kutta-Munthe-Kaas scheme: the
//! update is `exp(Omega) Y` with `Omega` in su(n), so states stay on the
//! group up to the accuracy of the exponential. `Rk4Project` is classical
//! RK4 followed by a polar re-unitarization and is kept as a cross-check.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su_core::{reunitarize, ComplexMatrix, SuElement, Tolerances, UnitaryMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LieRk4,
    Rk4Project,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub step: f64,
    pub method: Method,
    pub dense_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            method: Method::LieRk4,
            dense_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.dense_stride == 0 {
            return Err(Error::InvalidParameter("dense_stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sampled solution on SU(n).
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<UnitaryMatrix>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&UnitaryMatrix> {
        self.states.last()
    }

    /// Largest `|Y^H Y - I|_F` over all samples.
    pub fn max_unitarity_residual(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.unitarity_residual())
            .fold(0.0, f64::max)
    }

    pub fn max_det_residual(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.det_residual())
            .fold(0.0, f64::max)
    }

    /// CSV with a `t` column followed by `x_re_ij, x_im_ij` pairs, row-major,
    /// one-based indices.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.states.first().map(|s| s.dim()).unwrap_or(0);
        let mut out = std::io::BufWriter::new(out);
        write!(out, "t")?;
        write_matrix_header(&mut out, "x", n)?;
        writeln!(out)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            write!(out, "{t}")?;
            write_matrix_row(&mut out, s.as_matrix())?;
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub(crate) fn write_matrix_header<W: Write>(
    out: &mut W,
    prefix: &str,
    n: usize,
) -> std::io::Result<()> {
    for i in 1..=n {
        for j in 1..=n {
            write!(out, ",{prefix}_re_{i}{j},{prefix}_im_{i}{j}")?;
        }
    }
    Ok(())
}

pub(crate) fn write_matrix_row<W: Write>(out: &mut W, m: &ComplexMatrix) -> std::io::Result<()> {
    let n = m.dim();
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            write!(out, ",{},{}", z.re, z.im)?;
        }
    }
    Ok(())
}

fn checked(f: ComplexMatrix) -> Result<ComplexMatrix> {
    let tol = Tolerances::default();
    let scale = f.frobenius_norm().max(1.0);
    let residual = f.skew_residual();
    if !f.is_finite() {
        return Err(Error::NonFinite);
    }
    if residual > tol.skew * scale {
        return Err(Error::NotSkewHermitian { residual });
    }
    Ok(f)
}

/// `dexp^{-1}_omega(a)` truncated after the second-order term, enough for a
/// fourth-order method.
fn dexpinv(omega: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    let c1 = omega.commutator(a);
    let c2 = omega.commutator(&c1);
    let mut out = a.clone();
    out.axpy(-0.5, &c1);
    out.axpy(1.0 / 12.0, &c2);
    out
}

fn exp_su(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap(a.inner().exp())
}

fn rkmk4_left<F>(y: &ComplexMatrix, t: f64, h: f64, f: &mut F) -> Result<ComplexMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let k1 = checked(f(t, y))?.scale(h);

    let theta2 = k1.scale(0.5);
    let y2 = &exp_su(&theta2) * y;
    let k2 = dexpinv(&theta2, &checked(f(t + 0.5 * h, &y2))?.scale(h));

    let theta3 = k2.scale(0.5);
    let y3 = &exp_su(&theta3) * y;
    let k3 = dexpinv(&theta3, &checked(f(t + 0.5 * h, &y3))?.scale(h));

    let y4 = &exp_su(&k3) * y;
    let k4 = dexpinv(&k3, &checked(f(t + h, &y4))?.scale(h));

    let mut omega = k1;
    omega.axpy(2.0, &k2);
    omega.axpy(2.0, &k3);
    omega += &k4;
    let omega = omega.scale(1.0 / 6.0);
    Ok(&exp_su(&omega) * y)
}

fn rk4_project_left<F>(y: &ComplexMatrix, t: f64, h: f64, f: &mut F) -> Result<ComplexMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let k1 = &checked(f(t, y))? * y;
    let mut y2 = y.clone();
    y2.axpy(0.5 * h, &k1);
    let k2 = &checked(f(t + 0.5 * h, &y2))? * &y2;
    let mut y3 = y.clone();
    y3.axpy(0.5 * h, &k2);
    let k3 = &checked(f(t + 0.5 * h, &y3))? * &y3;
    let mut y4 = y.clone();
    y4.axpy(h, &k3);
    let k4 = &checked(f(t + h, &y4))? * &y4;

    let mut next = y.clone();
    next.axpy(h / 6.0, &k1);
    next.axpy(h / 3.0, &k2);
    next.axpy(h / 3.0, &k3);
    next.axpy(h / 6.0, &k4);
    Ok(reunitarize(&next)?.into_matrix())
}

/// One step of `Y' = F(t, Y) Y`. `f` receives stage states, which for
/// `Method::Rk4Project` are only approximately unitary.
pub fn step_left_with<F>(
    method: Method,
    y: &UnitaryMatrix,
    t: f64,
    h: f64,
    mut f: F,
) -> Result<UnitaryMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let next = match method {
        Method::LieRk4 => rkmk4_left(y.as_matrix(), t, h, &mut f)?,
        Method::Rk4Project => rk4_project_left(y.as_matrix(), t, h, &mut f)?,
    };
    Ok(UnitaryMatrix::assume_unitary(next))
}

/// One step of `Y' = Y F(t, Y)`, reduced to the left form through
/// `U = Y^H`, which satisfies `U' = -F(t, U^H) U`.
pub fn step_right_with<F>(
    method: Method,
    w: &UnitaryMatrix,
    t: f64,
    h: f64,
    mut f: F,
) -> Result<UnitaryMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let u = w.adjoint();
    let next = step_left_with(method, &u, t, h, |s, x| -&f(s, &x.adjoint()))?;
    Ok(next.adjoint())
}

pub fn step_left<F>(y: &UnitaryMatrix, t: f64, h: f64, f: F) -> Result<UnitaryMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    step_left_with(Method::LieRk4, y, t, h, f)
}

pub fn step_right<F>(w: &UnitaryMatrix, t: f64, h: f64, f: F) -> Result<UnitaryMatrix>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    step_right_with(Method::LieRk4, w, t, h, f)
}

/// Number of fixed steps covering `[t0, t1]`; the last one may be partial.
pub fn step_count(t0: f64, t1: f64, h: f64) -> usize {
    let span = t1 - t0;
    if span <= 0.0 {
        return 0;
    }
    let exact = span / h;
    let rounded = exact.round();
    if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Fixed-step march from `t0` to `t1`, sampling every `dense_stride` steps
/// and always at `t1`.
pub fn integrate<F>(
    y0: &UnitaryMatrix,
    t0: f64,
    t1: f64,
    mut f: F,
    cfg: &IntegratorConfig,
    side: Side,
) -> Result<Trajectory>
where
    F: FnMut(f64, &ComplexMatrix) -> ComplexMatrix,
{
    cfg.validate()?;
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!(
            "t1 = {t1} precedes t0 = {t0}"
        )));
    }
    let steps = step_count(t0, t1, cfg.step);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / cfg.dense_stride + 2),
        states: Vec::with_capacity(steps / cfg.dense_stride + 2),
    };
    traj.times.push(t0);
    traj.states.push(y0.clone());
    let mut y = y0.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * cfg.step;
        let t_next = if k + 1 == steps {
            t1
        } else {
            t0 + (k + 1) as f64 * cfg.step
        };
        let h = t_next - t;
        y = match side {
            Side::Left => step_left_with(cfg.method, &y, t, h, &mut f)?,
            Side::Right => step_right_with(cfg.method, &y, t, h, &mut f)?,
        };
        if (k + 1) % cfg.dense_stride == 0 || k + 1 == steps {
            traj.times.push(t_next);
            traj.states.push(y.clone());
        }
    }
    Ok(traj)
}

/// Convenience for time-only generators.
pub fn constant_generator(a: &SuElement) -> impl FnMut(f64, &ComplexMatrix) -> ComplexMatrix + '_ {
    move |_, _| a.as_matrix().clone()
}
