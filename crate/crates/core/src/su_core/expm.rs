use super::matrix::{ComplexMatrix, SuElement, UnitaryMatrix, C64};
use crate::error::{Error, Result};

/// Matrix exponential (scaling and squaring with Padé approximants).
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(ComplexMatrix::wrap(a.inner().exp()))
}

impl SuElement {
    /// `exp(self)`, an element of SU(n).
    pub fn exp(&self) -> UnitaryMatrix {
        UnitaryMatrix::assume_unitary(ComplexMatrix::wrap(self.as_matrix().inner().exp()))
    }
}

/// Nearest unitary matrix (polar factor), rescaled to unit determinant.
pub fn reunitarize(m: &ComplexMatrix) -> Result<UnitaryMatrix> {
    let n = m.dim();
    let svd = m.inner().clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(Error::Internal(
                "SVD did not return singular vectors".into(),
            ))
        }
    };
    let polar = ComplexMatrix::wrap(u * v_t);
    let det = polar.determinant();
    let fix = C64::from_polar(1.0, -det.arg() / n as f64);
    Ok(UnitaryMatrix::assume_unitary(polar.scale_complex(fix)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su_core::generators::generator_hr;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Plain power series, only for small arguments.
    fn series_exp(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = a.dim();
        let mut acc = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..terms {
            term = (&term * a).scale(1.0 / k as f64);
            acc += &term;
        }
        acc
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = expm(&ComplexMatrix::zeros(3)).unwrap();
        assert!(e.distance(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_phases() {
        let a = ComplexMatrix::from_diagonal(&[c(0., PI), c(0., -PI)]);
        let e = expm(&a).unwrap();
        let expected = ComplexMatrix::from_diagonal(&[c(-1., 0.), c(-1., 0.)]);
        assert!(e.distance(&expected) < 1e-14);
    }

    #[test]
    fn exp_of_rotation_generator() {
        let theta = 0.3;
        let a = generator_hr(1, 2, 2).unwrap().into_matrix().scale(theta);
        let e = expm(&a).unwrap();
        let closed = ComplexMatrix::from_rows(&[
            vec![c(theta.cos(), 0.), c(theta.sin(), 0.)],
            vec![c(-theta.sin(), 0.), c(theta.cos(), 0.)],
        ])
        .unwrap();
        assert!(e.distance(&closed) / closed.frobenius_norm() < 1e-12);
        let series = series_exp(&a, 30);
        assert!(series.distance(&closed) < 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let a = ComplexMatrix::from_diagonal(&[c(f64::NAN, 0.), c(0., 0.)]);
        assert!(matches!(expm(&a), Err(Error::NonFinite)));
    }

    #[test]
    fn reunitarize_restores_group() {
        let a = generator_hr(1, 3, 3).unwrap().scale(0.7).exp();
        let perturbed = a.as_matrix().scale(1.0 + 1e-6);
        let u = reunitarize(&perturbed).unwrap();
        assert!(u.unitarity_residual() < 1e-14);
        assert!(u.det_residual() < 1e-14);
        assert!(u.as_matrix().distance(a.as_matrix()) < 1e-12);
    }
}
