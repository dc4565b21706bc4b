//! Periodic reference trajectories driven by odd Fourier controls, and the
//! regularity test on the iterated derivatives `B^j_k(0)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorConfig, Side, Trajectory};
use crate::su_core::{
    lie_closure_dim, rank_from_singular_values, reunitarize, span_singular_values, ComplexMatrix,
    SuElement, UnitaryMatrix,
};

/// Periodicity residual above which a reference is flagged.
pub const PERIODIC_WARN: f64 = 1e-7;

/// Periodicity residual above which planning refuses to run.
pub const PERIODIC_GATE: f64 = 1e-5;

/// `u_k(t) = sum_l a_kl sin(2 pi l t / T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierControl {
    period: f64,
    coeffs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct FourierJson {
    #[serde(rename = "T")]
    period: f64,
    m: usize,
    n_f: usize,
    coeffs: Vec<Vec<f64>>,
}

impl FourierControl {
    pub fn new(period: f64, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        let n_f = coeffs.first().map(Vec::len).unwrap_or(0);
        if coeffs.iter().any(|row| row.len() != n_f) {
            return Err(Error::InvalidParameter(
                "coefficient table must be rectangular".into(),
            ));
        }
        if coeffs.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { period, coeffs })
    }

    pub fn zeros(m: usize, n_f: usize, period: f64) -> Result<Self> {
        Self::new(period, vec![vec![0.0; n_f]; m])
    }

    /// Coefficients drawn uniformly from `[-a, a]`, row by row, from a
    /// ChaCha8 stream seeded with `seed`.
    pub fn random(m: usize, n_f: usize, a: f64, period: f64, seed: u64) -> Result<Self> {
        if a.is_nan() || a <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be positive, got {a}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..m)
            .map(|_| (0..n_f).map(|_| rng.gen_range(-a..=a)).collect())
            .collect();
        Self::new(period, coeffs)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_f(&self) -> usize {
        self.coeffs.first().map(Vec::len).unwrap_or(0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            period: self.period,
            coeffs: self
                .coeffs
                .iter()
                .map(|r| r.iter().map(|a| a * s).collect())
                .collect(),
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let w = 2.0 * PI * t / self.period;
        for (o, row) in out.iter_mut().zip(&self.coeffs) {
            *o = row
                .iter()
                .enumerate()
                .map(|(l, a)| a * (w * (l + 1) as f64).sin())
                .sum();
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.eval_into(t, &mut out);
        out
    }

    /// Taylor coefficient of degree `p` of `u_k` at `t = 0`, i.e.
    /// `u_k^(p)(0) / p!`. Even degrees vanish exactly.
    pub fn taylor_coefficient(&self, k: usize, p: usize) -> f64 {
        let sign = match p % 4 {
            1 => 1.0,
            3 => -1.0,
            _ => return 0.0,
        };
        let fact: f64 = (1..=p).map(|i| i as f64).product();
        self.coeffs[k]
            .iter()
            .enumerate()
            .map(|(l, a)| {
                let w = 2.0 * PI * (l + 1) as f64 / self.period;
                a * w.powi(p as i32)
            })
            .sum::<f64>()
            * sign
            / fact
    }
}

impl Serialize for FourierControl {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FourierJson {
            period: self.period,
            m: self.m(),
            n_f: self.n_f(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierControl {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = FourierJson::deserialize(d)?;
        if j.coeffs.len() != j.m || j.coeffs.iter().any(|r| r.len() != j.n_f) {
            return Err(D::Error::custom(format!(
                "coefficient table is not {}x{}",
                j.m, j.n_f
            )));
        }
        FourierControl::new(j.period, j.coeffs).map_err(D::Error::custom)
    }
}

/// `A(t) = sum_k u_k(t) H_k`.
pub fn control_generator(generators: &[SuElement], u: &[f64]) -> ComplexMatrix {
    let n = generators[0].dim();
    let mut a = ComplexMatrix::zeros(n);
    for (h, &uk) in generators.iter().zip(u) {
        if uk != 0.0 {
            a.axpy(uk, h.as_matrix());
        }
    }
    a
}

fn check_generators(generators: &[SuElement], m: usize) -> Result<usize> {
    let first = generators.first().ok_or(Error::Empty("generator list"))?;
    let n = first.dim();
    if let Some(bad) = generators.iter().find(|h| h.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    if generators.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: generators.len(),
        });
    }
    Ok(n)
}

/// One period of `X_r^T`, stored on a uniform grid, together with the
/// controls and generators that produced it.
#[derive(Clone, Debug)]
pub struct Reference {
    controls: FourierControl,
    generators: Vec<SuElement>,
    spacing: f64,
    samples: Vec<UnitaryMatrix>,
    residual: f64,
}

/// Integrates `X_r' = A(t) X_r`, `X_r(0) = I` over one period. The period
/// must be an integer multiple of `step * dense_stride`.
pub fn integrate_reference(
    fc: &FourierControl,
    generators: &[SuElement],
    cfg: &IntegratorConfig,
) -> Result<Reference> {
    cfg.validate()?;
    let n = check_generators(generators, fc.m())?;
    let spacing = cfg.step * cfg.dense_stride as f64;
    let per_period = fc.period() / spacing;
    if (per_period - per_period.round()).abs() > 1e-9 * per_period {
        return Err(Error::InvalidParameter(format!(
            "period {} is not a multiple of the sample spacing {spacing}",
            fc.period()
        )));
    }
    let mut u = vec![0.0; fc.m()];
    let traj = integrate(
        &UnitaryMatrix::identity(n),
        0.0,
        fc.period(),
        |t, _| {
            fc.eval_into(t, &mut u);
            control_generator(generators, &u)
        },
        cfg,
        Side::Left,
    )?;
    let residual = traj
        .last()
        .expect("non-empty")
        .as_matrix()
        .distance(&ComplexMatrix::identity(n));
    if residual > PERIODIC_WARN {
        log::warn!(
            "reference periodicity residual {residual:e} exceeds {PERIODIC_WARN:e}; consider a smaller step \
             (currently {})",
            cfg.step
        );
    }
    Ok(Reference {
        controls: fc.clone(),
        generators: generators.to_vec(),
        spacing,
        samples: traj.states,
        residual,
    })
}

impl Reference {
    pub fn controls(&self) -> &FourierControl {
        &self.controls
    }

    pub fn generators(&self) -> &[SuElement] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn period(&self) -> f64 {
        self.controls.period()
    }

    /// Grid spacing of the stored period.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// `|X_r^T(T) - I|_F`.
    pub fn periodicity_residual(&self) -> f64 {
        self.residual
    }

    pub fn is_flagged(&self) -> bool {
        self.residual > PERIODIC_WARN
    }

    pub fn check_gate(&self) -> Result<()> {
        if self.residual > PERIODIC_GATE {
            return Err(Error::PeriodicityGate {
                residual: self.residual,
                gate: PERIODIC_GATE,
            });
        }
        Ok(())
    }

    pub fn trajectory(&self) -> Trajectory {
        Trajectory {
            times: (0..self.samples.len())
                .map(|i| i as f64 * self.spacing)
                .collect(),
            states: self.samples.clone(),
        }
    }

    pub fn generator_at(&self, t: f64) -> ComplexMatrix {
        control_generator(&self.generators, &self.controls.eval(t))
    }

    fn samples_per_period(&self) -> usize {
        self.samples.len() - 1
    }

    /// `X_r^T(t)` for any real `t`, using periodicity. Grid points return the
    /// stored sample; other times use cubic Hermite interpolation with the
    /// exact derivative `A(t) X_r^T(t)`, followed by re-unitarization.
    pub fn at(&self, t: f64) -> UnitaryMatrix {
        let p = self.samples_per_period() as i64;
        let x = t / self.spacing;
        let nearest = x.round();
        if (x - nearest).abs() <= 1e-6 {
            let idx = (nearest as i64).rem_euclid(p) as usize;
            return self.samples[idx].clone();
        }
        let base = x.floor();
        let frac = x - base;
        let i0 = (base as i64).rem_euclid(p) as usize;
        let i1 = i0 + 1;
        let t0 = i0 as f64 * self.spacing;
        let t1 = i1 as f64 * self.spacing;
        let y0 = self.samples[i0].as_matrix();
        let y1 = self.samples[i1].as_matrix();
        let d0 = &self.generator_at(t0) * y0;
        let d1 = &self.generator_at(t1) * y1;
        let s = frac;
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        let mut m = y0.scale(h00);
        m.axpy(h10 * self.spacing, &d0);
        m.axpy(h01, y1);
        m.axpy(h11 * self.spacing, &d1);
        reunitarize(&m).unwrap_or_else(|_| self.samples[i0].clone())
    }

    /// `X_r(t) = X_r^T(t) X_inf`.
    pub fn sample(&self, goal: &UnitaryMatrix, t: f64) -> UnitaryMatrix {
        self.at(t).compose(goal)
    }
}

/// Free-function form of [`Reference::sample`].
pub fn sample_reference(
    reference: &Reference,
    goal: &UnitaryMatrix,
    t: f64,
) -> Result<UnitaryMatrix> {
    if reference.samples.is_empty() {
        return Err(Error::Empty("reference trajectory"));
    }
    if goal.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: goal.dim(),
        });
    }
    Ok(reference.sample(goal, t))
}

/// Truncated matrix-valued power series at `t = 0`.
#[derive(Clone, Debug)]
pub struct MatrixTaylor {
    coeffs: Vec<ComplexMatrix>,
}

impl MatrixTaylor {
    pub fn new(coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Empty("Taylor coefficients"));
        }
        Ok(Self { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, p: usize) -> &ComplexMatrix {
        &self.coeffs[p]
    }

    pub fn constant(&self) -> &ComplexMatrix {
        &self.coeffs[0]
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul(&self, m: &ComplexMatrix) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| m * c).collect(),
        }
    }

    /// Product truncated to the smaller of the two degrees.
    pub fn mul(&self, other: &Self) -> Self {
        let deg = self.degree().min(other.degree());
        let n = self.coeffs[0].dim();
        let coeffs = (0..=deg)
            .map(|p| {
                let mut acc = ComplexMatrix::zeros(n);
                for q in 0..=p {
                    acc += &(&self.coeffs[q] * &other.coeffs[p - q]);
                }
                acc
            })
            .collect();
        Self { coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let deg = self.degree().min(other.degree());
        Self {
            coeffs: (0..=deg)
                .map(|p| &self.coeffs[p] - &other.coeffs[p])
                .collect(),
        }
    }

    /// Term-by-term derivative; the degree drops by one.
    pub fn derivative(&self) -> Result<Self> {
        if self.degree() == 0 {
            return Err(Error::Internal(
                "cannot differentiate a degree-0 truncation".into(),
            ));
        }
        Ok(Self {
            coeffs: (1..self.coeffs.len())
                .map(|p| self.coeffs[p].scale(p as f64))
                .collect(),
        })
    }
}

/// Taylor series of `A(t)` and `X_r^T(t)` at zero, to degree `degree`.
pub fn reference_series(
    fc: &FourierControl,
    generators: &[SuElement],
    degree: usize,
) -> Result<(MatrixTaylor, MatrixTaylor)> {
    let n = check_generators(generators, fc.m())?;
    let a_coeffs: Vec<ComplexMatrix> = (0..=degree)
        .map(|p| {
            let u: Vec<f64> = (0..fc.m()).map(|k| fc.taylor_coefficient(k, p)).collect();
            control_generator(generators, &u)
        })
        .collect();
    let mut x_coeffs = vec![ComplexMatrix::identity(n)];
    for p in 0..degree {
        let mut acc = ComplexMatrix::zeros(n);
        for q in 0..=p {
            acc += &(&a_coeffs[q] * &x_coeffs[p - q]);
        }
        x_coeffs.push(acc.scale(1.0 / (p + 1) as f64));
    }
    Ok((MatrixTaylor::new(a_coeffs)?, MatrixTaylor::new(x_coeffs)?))
}

/// `B^j_k(0)` for `0 <= j <= j_max`, indexed `[j][k]`, from the recursion
/// `B^{j+1}_k = -A B^j_k + d/dt B^j_k`, `B^0_k = H_k X_r^T`, carried out in
/// truncated Taylor arithmetic.
pub fn taylor_b_at_zero(
    fc: &FourierControl,
    generators: &[SuElement],
    j_max: usize,
) -> Result<Vec<Vec<SuElement>>> {
    let (a, x) = reference_series(fc, generators, j_max)?;
    let mut level: Vec<MatrixTaylor> = generators
        .iter()
        .map(|h| x.left_mul(h.as_matrix()))
        .collect();
    let mut table = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let mut row = Vec::with_capacity(level.len());
        for b in &level {
            if b.degree() + j < j_max {
                return Err(Error::Internal(format!(
                    "Taylor degree exhausted at j = {j}"
                )));
            }
            let c = b.constant();
            // X_r(0) = I, so B^j_k(0) equals the su(n)-valued C^j_k(0)
            let checked = SuElement::new(c.clone())
                .map_err(|e| Error::Internal(format!("B^{j}(0) left su(n): {e}")))?;
            row.push(SuElement::project(checked.as_matrix()));
        }
        table.push(row);
        if j < j_max {
            level = level
                .iter()
                .map(|b| Ok(b.derivative()?.sub(&a.mul(b))))
                .collect::<Result<_>>()?;
        }
    }
    Ok(table)
}

/// Derivative order used when none is given: 6 for SU(4), otherwise `n^2`,
/// never above `2 (n^2 - 1)`.
pub fn default_j_max(n: usize) -> usize {
    if n == 4 {
        6
    } else {
        (n * n).min(2 * (n * n - 1))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub j_max: usize,
    pub rank: usize,
    pub required: usize,
    pub tol: f64,
    pub singular_values: Vec<f64>,
    pub is_regular: bool,
    /// A rank short of `n^2 - 1` at finite `j_max` does not rule out
    /// regularity at higher orders.
    pub inconclusive: bool,
    pub lie_closure_dim: usize,
}

pub fn regularity_check(
    fc: &FourierControl,
    generators: &[SuElement],
    j_max: usize,
    tol: f64,
) -> Result<RegularityReport> {
    let n = check_generators(generators, fc.m())?;
    let table = taylor_b_at_zero(fc, generators, j_max)?;
    let flat: Vec<SuElement> = table.into_iter().flatten().collect();
    let singular_values = span_singular_values(&flat)?;
    let rank = rank_from_singular_values(&singular_values, tol);
    let required = n * n - 1;
    Ok(RegularityReport {
        j_max,
        rank,
        required,
        tol,
        singular_values,
        is_regular: rank == required,
        inconclusive: rank < required,
        lie_closure_dim: lie_closure_dim(generators)?,
    })
}
