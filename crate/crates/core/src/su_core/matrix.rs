use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Acceptance thresholds for the group and algebra invariants.
///
/// All norms are Frobenius norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub unitary: f64,
    pub det: f64,
    pub skew: f64,
    pub trace: f64,
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitary: 1e-9,
            det: 1e-9,
            skew: 1e-12,
            trace: 1e-12,
            eig: 1e-9,
        }
    }
}

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Wraps a matrix the caller knows to be square.
    pub(crate) fn wrap(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(n, n, f))
    }

    /// Builds from row-major entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds from real and imaginary parts given row-major.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if im.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: im.len(),
            });
        }
        for (r, i) in re.iter().zip(im) {
            if r.len() != n || i.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len().max(i.len()),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| C64::new(re[i][j], im[i][j])))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    /// Entry at zero-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Re(tr(self))`.
    pub fn fidelity(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// `Re(tr(self * other))` without forming the product.
    pub fn fidelity_of_product(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                let a = self.0[(i, k)];
                let b = other.0[(k, i)];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn determinant(&self) -> C64 {
        self.0.determinant()
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        self.0.zip_apply(&other.0, |a, b| *a += b * s);
    }

    /// Real coordinates: real parts row-major, then imaginary parts row-major.
    pub fn to_real_coords(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)].re);
            }
        }
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)].im);
            }
        }
        out
    }

    /// Real dot product `Re tr(self^H other)`.
    pub fn real_inner(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        let prod = self.0.adjoint() * &self.0;
        (prod - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn skew_residual(&self) -> f64 {
        (&self.0 + self.0.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from(self.clone())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        writeln!(f, "ComplexMatrix({n}x{n}) [")?;
        for i in 0..n {
            write!(f, "  ")?;
            for j in 0..n {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

/// JSON wire form `{n, re: [[...]], im: [[...]]}`, rows first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let n = m.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| m.0[(i, j)].re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| m.0[(i, j)].im).collect())
            .collect();
        Self { n, re, im }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.re.len() != j.n {
            return Err(Error::DimensionMismatch {
                expected: j.n,
                got: j.re.len(),
            });
        }
        ComplexMatrix::from_parts(&j.re, &j.im)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Element of SU(n).
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let residual = m.unitarity_residual();
        if residual > tol.unitary {
            return Err(Error::NotUnitary { residual });
        }
        let residual = (m.determinant() - C64::new(1.0, 0.0)).norm();
        if residual > tol.det {
            return Err(Error::NotSpecial { residual });
        }
        Ok(Self(m))
    }

    /// Accepts a unitary matrix whose determinant is within `tol.det` of a
    /// unit-modulus number and rescales it by `det^(-1/n)`.
    pub fn normalized(m: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let residual = m.unitarity_residual();
        if residual > tol.unitary {
            return Err(Error::NotUnitary { residual });
        }
        let det = m.determinant();
        let residual = (det - C64::new(1.0, 0.0)).norm();
        if residual > tol.det {
            return Err(Error::NotSpecial { residual });
        }
        let n = m.dim() as f64;
        let correction = C64::from_polar(det.norm().powf(-1.0 / n), -det.arg() / n);
        Ok(Self(m.scale_complex(correction)))
    }

    /// Wraps a matrix that is unitary by construction (products, exponentials).
    pub fn assume_unitary(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn fidelity(&self) -> f64 {
        self.0.fidelity()
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.0.unitarity_residual()
    }

    pub fn det_residual(&self) -> f64 {
        (self.0.determinant() - C64::new(1.0, 0.0)).norm()
    }
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        UnitaryMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Element of su(n): skew-Hermitian and traceless.
#[derive(Clone, Debug, PartialEq)]
pub struct SuElement(ComplexMatrix);

impl SuElement {
    /// Validates against the default tolerances. Both residuals are measured
    /// relative to `max(1, |m|_F)`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let scale = m.frobenius_norm().max(1.0);
        let residual = m.skew_residual();
        if residual > tol.skew * scale {
            return Err(Error::NotSkewHermitian { residual });
        }
        let residual = m.trace().norm();
        if residual > tol.trace * scale {
            return Err(Error::NotTraceless { residual });
        }
        Ok(Self(m))
    }

    /// Orthogonal projection onto su(n).
    pub fn project(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let mut s = (m - &m.adjoint()).scale(0.5);
        let shift = s.trace() / n as f64;
        for i in 0..n {
            s.0[(i, i)] -= shift;
        }
        Self(s)
    }

    pub(crate) fn assume(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn zero(n: usize) -> Self {
        Self(ComplexMatrix::zeros(n))
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn bracket(&self, other: &Self) -> Self {
        Self(self.0.commutator(&other.0))
    }

    pub fn norm(&self) -> f64 {
        self.0.frobenius_norm()
    }
}

impl Add for &SuElement {
    type Output = SuElement;
    fn add(self, rhs: Self) -> SuElement {
        SuElement(&self.0 + &rhs.0)
    }
}

impl Serialize for SuElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SuElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        SuElement::new(m).map_err(serde::de::Error::custom)
    }
}

/// `V(X) = Re(tr(X))`.
pub fn fidelity(x: &ComplexMatrix) -> f64 {
    x.fidelity()
}
