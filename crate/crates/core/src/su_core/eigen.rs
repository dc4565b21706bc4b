//! Diagonalization of special unitary matrices with zero-sum eigenphases.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur, SymmetricEigen};

use super::matrix::{ComplexMatrix, Tolerances, UnitaryMatrix, C64};
use crate::error::{Error, Result};

/// `W = basis * diag(exp(i * phases)) * basis^H` with `sum(phases) == 0`.
#[derive(Clone, Debug)]
pub struct EigenPhases {
    pub phases: Vec<f64>,
    pub basis: UnitaryMatrix,
}

impl EigenPhases {
    /// `basis * diag(exp(i * s * phases)) * basis^H`.
    pub fn power(&self, s: f64) -> ComplexMatrix {
        let diag: Vec<C64> = self
            .phases
            .iter()
            .map(|&l| C64::from_polar(1.0, l * s))
            .collect();
        let m = self.basis.as_matrix();
        &(m * &ComplexMatrix::from_diagonal(&diag)) * &m.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.power(1.0)
    }
}

/// Shifts raw phases in `(-pi, pi]` by multiples of `2 pi` so they sum to
/// zero. A sum of `2 pi q` is removed from the `q` largest phases (or added
/// to the `|q|` smallest when `q < 0`).
pub fn zero_sum_phases(raw: &mut [f64]) {
    let sum: f64 = raw.iter().sum();
    let q = (sum / (2.0 * PI)).round() as i64;
    if q == 0 {
        return;
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    // stable: ties keep index order
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    if q > 0 {
        for &idx in order.iter().rev().take(q as usize) {
            raw[idx] -= 2.0 * PI;
        }
    } else {
        for &idx in order.iter().take((-q) as usize) {
            raw[idx] += 2.0 * PI;
        }
    }
}

fn schur_route(w: &DMatrix<C64>) -> Option<(DMatrix<C64>, Vec<C64>)> {
    let schur = Schur::try_new(w.clone(), 1e-15, 10_000)?;
    let (q, t) = schur.unpack();
    let eig = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    Some((q, eig))
}

/// Simultaneous diagonalization of the commuting Hermitian parts of a normal
/// matrix through a generic real combination of them.
fn hermitian_route(w: &DMatrix<C64>, mix: f64) -> Option<(DMatrix<C64>, Vec<C64>)> {
    let wh = w.adjoint();
    let herm = (w + &wh) * C64::new(0.5, 0.0);
    let anti = (w - &wh) * C64::new(0.0, -0.5);
    let h = herm + anti * C64::new(mix, 0.0);
    let eig = SymmetricEigen::try_new(h, 1e-15, 10_000)?;
    let q = eig.eigenvectors;
    let d = q.adjoint() * w * &q;
    let vals = (0..d.nrows()).map(|i| d[(i, i)]).collect();
    Some((q, vals))
}

fn reconstruction_error(w: &DMatrix<C64>, q: &DMatrix<C64>, vals: &[C64]) -> f64 {
    let n = w.nrows();
    let d = DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { vals[i] } else { C64::new(0.0, 0.0) },
    );
    let r = q * d * q.adjoint() - w;
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues and a unitary eigenbasis of a unitary matrix.
fn diagonalize(w: &ComplexMatrix, tol: f64) -> Result<(DMatrix<C64>, Vec<C64>)> {
    let inner = w.inner();
    let mut best = f64::INFINITY;
    if let Some((q, vals)) = schur_route(inner) {
        let err = reconstruction_error(inner, &q, &vals);
        if err <= tol {
            return Ok((q, vals));
        }
        best = err;
    }
    for mix in [
        0.618_033_988_749_894_9,
        0.414_213_562_373_095,
        1.732_050_807_568_877,
    ] {
        if let Some((q, vals)) = hermitian_route(inner, mix) {
            let err = reconstruction_error(inner, &q, &vals);
            if err <= tol {
                return Ok((q, vals));
            }
            best = best.min(err);
        }
    }
    Err(Error::EigenFailure(format!(
        "no diagonalization met the reconstruction tolerance {tol:e} (best {best:e})"
    )))
}

/// Eigenvalues of a unitary matrix.
pub fn unitary_eigenvalues(w: &UnitaryMatrix) -> Result<Vec<C64>> {
    let tol = Tolerances::default().eig;
    diagonalize(w.as_matrix(), tol).map(|(_, v)| v)
}

pub fn unitary_eigendecomposition(w: &UnitaryMatrix) -> Result<EigenPhases> {
    unitary_eigendecomposition_with(w, &Tolerances::default())
}

pub fn unitary_eigendecomposition_with(w: &UnitaryMatrix, tol: &Tolerances) -> Result<EigenPhases> {
    let (mut q, vals) = diagonalize(w.as_matrix(), tol.eig)?;
    let mut phases: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
    zero_sum_phases(&mut phases);

    // Rephase one column so the basis has unit determinant.
    let det = q.determinant();
    let fix = C64::from_polar(1.0, -det.arg());
    for i in 0..q.nrows() {
        q[(i, 0)] *= fix;
    }
    let out = EigenPhases {
        phases,
        basis: UnitaryMatrix::assume_unitary(ComplexMatrix::wrap(q)),
    };
    let err = out.reconstruct().distance(w.as_matrix());
    if err > tol.eig {
        return Err(Error::EigenFailure(format!("reconstruction error {err:e}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cnot() -> UnitaryMatrix {
        let z = c(0., 0.);
        let o = c(1., 0.);
        UnitaryMatrix::new(
            ComplexMatrix::from_rows(&[
                vec![o, z, z, z],
                vec![z, o, z, z],
                vec![z, z, z, -o],
                vec![z, z, o, z],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn identity_has_zero_phases() {
        let e = unitary_eigendecomposition(&UnitaryMatrix::identity(4)).unwrap();
        assert!(e.phases.iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn cnot_phases() {
        let e = unitary_eigendecomposition(&cnot()).unwrap();
        let p = sorted(e.phases.clone());
        let expected = [-PI / 2.0, 0.0, 0.0, PI / 2.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{p:?}");
        }
        assert!(e.reconstruct().distance(cnot().as_matrix()) < 1e-12);
        assert!(e.basis.det_residual() < 1e-12);
    }

    #[test]
    fn minus_identity_zero_sum() {
        let m = ComplexMatrix::identity(4).scale(-1.0);
        let e = unitary_eigendecomposition(&UnitaryMatrix::new(m).unwrap()).unwrap();
        let sum: f64 = e.phases.iter().sum();
        assert!(sum.abs() < 1e-12);
        let p = sorted(e.phases);
        for (a, b) in p.iter().zip([-PI, -PI, PI, PI]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_sum_rule() {
        let mut p = vec![PI, PI, PI, PI];
        zero_sum_phases(&mut p);
        assert_eq!(sorted(p), vec![-PI, -PI, PI, PI]);
        let mut p = vec![-3.0, -3.0, -0.28318530717958623];
        zero_sum_phases(&mut p);
        assert!(p.iter().sum::<f64>().abs() < 1e-12);
        let mut p = vec![0.3, -0.1, -0.2];
        zero_sum_phases(&mut p);
        assert_eq!(p, vec![0.3, -0.1, -0.2]);
    }
}
