//! Sparse generators of su(n), with one-based indices as in the usual
//! physics notation.

use super::matrix::{ComplexMatrix, SuElement, C64};
use crate::error::{Error, Result};

fn check_indices(i: usize, j: usize, n: usize) -> Result<()> {
    if i == 0 || i >= j || j > n {
        return Err(Error::IndexOrder { i, j, n });
    }
    Ok(())
}

/// Real antisymmetric generator: `+1` at `(i, j)`, `-1` at `(j, i)`.
pub fn generator_hr(i: usize, j: usize, n: usize) -> Result<SuElement> {
    check_indices(i, j, n)?;
    let mut m = ComplexMatrix::zeros(n).into_inner();
    m[(i - 1, j - 1)] = C64::new(1.0, 0.0);
    m[(j - 1, i - 1)] = C64::new(-1.0, 0.0);
    Ok(SuElement::assume(ComplexMatrix::wrap(m)))
}

/// Imaginary symmetric generator: `i` at both `(i, j)` and `(j, i)`.
pub fn generator_hi(i: usize, j: usize, n: usize) -> Result<SuElement> {
    check_indices(i, j, n)?;
    let mut m = ComplexMatrix::zeros(n).into_inner();
    m[(i - 1, j - 1)] = C64::new(0.0, 1.0);
    m[(j - 1, i - 1)] = C64::new(0.0, 1.0);
    Ok(SuElement::assume(ComplexMatrix::wrap(m)))
}

/// `D_1 .. D_n`: `D_l = diag(.., i, -i, ..)` at positions `l, l+1` for
/// `l < n`, and `D_n = diag(i, 0, .., 0, -i)`.
pub fn canonical_diagonals(n: usize) -> Result<Vec<SuElement>> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut out = Vec::with_capacity(n);
    for l in 0..n {
        let (p, q) = if l + 1 < n { (l, l + 1) } else { (0, n - 1) };
        let mut diag = vec![C64::new(0.0, 0.0); n];
        diag[p] = C64::new(0.0, 1.0);
        diag[q] = C64::new(0.0, -1.0);
        out.push(SuElement::assume(ComplexMatrix::from_diagonal(&diag)));
    }
    Ok(out)
}

/// A full real basis of su(n): all `H^R_ij`, all `H^I_ij` and `D_1 .. D_{n-1}`.
pub fn su_basis(n: usize) -> Result<Vec<SuElement>> {
    let mut out = Vec::with_capacity(n * n - 1);
    for i in 1..=n {
        for j in (i + 1)..=n {
            out.push(generator_hr(i, j, n)?);
            out.push(generator_hi(i, j, n)?);
        }
    }
    let mut diags = canonical_diagonals(n)?;
    diags.truncate(n - 1);
    out.extend(diags);
    Ok(out)
}
