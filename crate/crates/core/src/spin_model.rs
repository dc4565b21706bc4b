//! Two coupled spin-1/2 particles: lab-frame drift model, interaction-picture
//! conjugations, control recombination and the rotating-wave reduction.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Side, Trajectory};
use crate::reference::control_generator;
use crate::su_core::{generator_hi, generator_hr, ComplexMatrix, SuElement, UnitaryMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

#[derive(Clone, Debug)]
pub struct SpinModel {
    /// Diagonal of the drift `D`.
    pub drift: [C64; 4],
    pub d_x: SuElement,
    pub d_y: SuElement,
    pub d_z: SuElement,
    /// `H^R_14, H^I_14, H^R_13, H^I_13, H^R_12, H^I_12`.
    pub generators: Vec<SuElement>,
    pub omega: f64,
}

fn hr(i: usize, j: usize) -> SuElement {
    generator_hr(i, j, 4).expect("valid indices")
}

fn hi(i: usize, j: usize) -> SuElement {
    generator_hi(i, j, 4).expect("valid indices")
}

fn combo(a: &SuElement, s: f64, b: &SuElement) -> SuElement {
    let mut m = a.as_matrix().clone();
    m.axpy(s, b.as_matrix());
    SuElement::project(&m)
}

/// The six rotating-wave generators in control order.
pub fn rwa_generators() -> Vec<SuElement> {
    vec![hr(1, 4), hi(1, 4), hr(1, 3), hi(1, 3), hr(1, 2), hi(1, 2)]
}

impl Default for SpinModel {
    fn default() -> Self {
        Self {
            drift: [
                C64::new(0.0, 3.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, -1.0),
            ],
            d_x: combo(&hr(1, 4), -3.0, &hr(2, 3)),
            d_y: combo(&hr(1, 3), 3.0, &hr(2, 4)),
            d_z: combo(&hr(1, 2), -3.0, &hr(3, 4)),
            generators: rwa_generators(),
            omega: 4.0,
        }
    }
}

impl SpinModel {
    pub fn drift_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&self.drift)
    }

    pub fn coupling(&self, axis: Axis) -> &SuElement {
        match axis {
            Axis::X => &self.d_x,
            Axis::Y => &self.d_y,
            Axis::Z => &self.d_z,
        }
    }

    /// `e^{-Dt}` for the diagonal drift.
    pub fn frame(&self, t: f64) -> UnitaryMatrix {
        let d: Vec<C64> = self.drift.iter().map(|z| (-z * t).exp()).collect();
        UnitaryMatrix::assume_unitary(ComplexMatrix::from_diagonal(&d))
    }

    /// `C_axis(t) = e^{-Dt} D_axis e^{Dt}`, by explicit conjugation.
    pub fn interaction_c(&self, axis: Axis, t: f64) -> SuElement {
        let e = self.frame(t);
        let m = e.as_matrix() * &(self.coupling(axis).as_matrix() * &e.adjoint().into_matrix());
        SuElement::project(&m)
    }

    /// Closed-form entries of `C_axis(t)`, written out independently of the
    /// conjugation above.
    pub fn interaction_c_closed_form(&self, axis: Axis, t: f64) -> ComplexMatrix {
        let w = self.omega * t;
        let em = C64::new(0.0, -w).exp();
        let ep = C64::new(0.0, w).exp();
        let z = C64::new(0.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        let rows = match axis {
            Axis::X => vec![
                vec![z, z, z, em],
                vec![z, z, r(-3.0), z],
                vec![z, r(3.0), z, z],
                vec![-ep, z, z, z],
            ],
            Axis::Y => vec![
                vec![z, z, em, z],
                vec![z, z, z, r(3.0)],
                vec![-ep, z, z, z],
                vec![z, r(-3.0), z, z],
            ],
            Axis::Z => vec![
                vec![z, em, z, z],
                vec![-ep, z, z, z],
                vec![z, z, z, r(-3.0)],
                vec![z, z, r(3.0), z],
            ],
        };
        ComplexMatrix::from_rows(&rows).expect("4x4")
    }

    /// `(u_x, u_y, u_z)` from the six rotating-frame controls.
    pub fn recombine_controls(&self, u6: &[f64], t: f64) -> [f64; 3] {
        let (s, c) = (self.omega * t).sin_cos();
        [
            2.0 * u6[0] * c - 2.0 * u6[1] * s,
            2.0 * u6[2] * c - 2.0 * u6[3] * s,
            2.0 * u6[4] * c - 2.0 * u6[5] * s,
        ]
    }

    /// The complex form of the recombination, kept to confirm the imaginary
    /// parts cancel.
    pub fn recombine_controls_complex(&self, u6: &[f64], t: f64) -> [C64; 3] {
        let ep = C64::new(0.0, self.omega * t).exp();
        let em = ep.conj();
        let pair = |a: f64, b: f64| C64::new(a, b) * ep + C64::new(a, -b) * em;
        [pair(u6[0], u6[1]), pair(u6[2], u6[3]), pair(u6[4], u6[5])]
    }

    /// `sum_k u_k H_k` with the fixed generator ordering.
    pub fn rwa_system(&self, u6: &[f64]) -> Result<SuElement> {
        if u6.len() != 6 {
            return Err(Error::DimensionMismatch {
                expected: 6,
                got: u6.len(),
            });
        }
        Ok(SuElement::project(&control_generator(&self.generators, u6)))
    }

    /// Lab-frame generator `D + u_x D_x + u_y D_y + u_z D_z`.
    pub fn lab_generator(&self, u6: &[f64], t: f64) -> ComplexMatrix {
        let [ux, uy, uz] = self.recombine_controls(u6, t);
        let mut m = self.drift_matrix();
        m.axpy(ux, self.d_x.as_matrix());
        m.axpy(uy, self.d_y.as_matrix());
        m.axpy(uz, self.d_z.as_matrix());
        m
    }
}

/// Lab-frame trajectory and its interaction-picture image `e^{-Dt} Y`.
#[derive(Clone, Debug)]
pub struct FullModelRun {
    pub lab: Trajectory,
    pub interaction: Trajectory,
}

pub fn simulate_full_model<U>(
    model: &SpinModel,
    mut u6: U,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<FullModelRun>
where
    U: FnMut(f64) -> Vec<f64>,
{
    let tr = model.drift.iter().sum::<C64>();
    if tr.norm() > 1e-12 {
        return Err(Error::Precondition(format!(
            "drift is not traceless: tr D = {tr}"
        )));
    }
    let lab = integrate(
        &UnitaryMatrix::identity(4),
        0.0,
        horizon,
        |t, _| model.lab_generator(&u6(t), t),
        cfg,
        Side::Left,
    )?;
    let interaction = Trajectory {
        times: lab.times.clone(),
        states: lab
            .times
            .iter()
            .zip(&lab.states)
            .map(|(&t, y)| model.frame(t).compose(y))
            .collect(),
    };
    Ok(FullModelRun { lab, interaction })
}

#[derive(Clone, Debug, Serialize)]
pub struct RwaComparison {
    pub amplitude_scale: f64,
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Integrates the interaction-picture model and its rotating-wave reduction
/// under the same controls and records `|X_full - X_rwa|_F`.
pub fn compare_rwa<U>(
    model: &SpinModel,
    mut u6: U,
    horizon: f64,
    cfg: &IntegratorConfig,
    amplitude_scale: f64,
) -> Result<RwaComparison>
where
    U: FnMut(f64) -> Vec<f64>,
{
    let mut scaled =
        |t: f64| -> Vec<f64> { u6(t).into_iter().map(|u| u * amplitude_scale).collect() };
    let full = integrate(
        &UnitaryMatrix::identity(4),
        0.0,
        horizon,
        |t, _| {
            let u = scaled(t);
            let [ux, uy, uz] = model.recombine_controls(&u, t);
            let mut m = model.interaction_c(Axis::X, t).into_matrix().scale(ux);
            m.axpy(uy, model.interaction_c(Axis::Y, t).as_matrix());
            m.axpy(uz, model.interaction_c(Axis::Z, t).as_matrix());
            m
        },
        cfg,
        Side::Left,
    )?;
    let rwa = integrate(
        &UnitaryMatrix::identity(4),
        0.0,
        horizon,
        |t, _| control_generator(&model.generators, &scaled(t)),
        cfg,
        Side::Left,
    )?;
    let errors: Vec<f64> = full
        .states
        .iter()
        .zip(&rwa.states)
        .map(|(a, b)| a.as_matrix().distance(b.as_matrix()))
        .collect();
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    Ok(RwaComparison {
        amplitude_scale,
        times: full.times,
        errors,
        max_error,
    })
}
