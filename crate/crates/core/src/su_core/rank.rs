//! Span and Lie-closure dimensions of families of su(n) elements, computed
//! in the real `2 n^2` coordinates.

use nalgebra::DMatrix;

use super::matrix::{ComplexMatrix, SuElement};
use crate::error::{Error, Result};

/// Default relative singular-value cutoff.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Vectors with a norm below this fraction of the largest one are zero.
const NEGLIGIBLE: f64 = 1e-13;

fn check_family(vectors: &[SuElement]) -> Result<usize> {
    let first = vectors.first().ok_or(Error::Empty("vector family"))?;
    let n = first.dim();
    for v in vectors {
        if v.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.dim(),
            });
        }
    }
    Ok(n)
}

/// Singular values, in descending order, of the matrix whose columns are
/// the unit-normalized real coordinates of `vectors`. Negligible vectors
/// are dropped before normalization.
pub fn span_singular_values(vectors: &[SuElement]) -> Result<Vec<f64>> {
    let n = check_family(vectors)?;
    let norms: Vec<f64> = vectors.iter().map(|v| v.norm()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<Vec<f64>> = vectors
        .iter()
        .zip(&norms)
        .filter(|(_, &nv)| nv > NEGLIGIBLE * max && nv > 0.0)
        .map(|(v, &nv)| {
            v.as_matrix()
                .to_real_coords()
                .into_iter()
                .map(|x| x / nv)
                .collect()
        })
        .collect();
    if cols.is_empty() {
        return Ok(Vec::new());
    }
    let rows = 2 * n * n;
    let m = DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i]);
    let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Number of singular values above `tol * sigma_max`.
pub fn numerical_rank(vectors: &[SuElement], tol: f64) -> Result<usize> {
    let sv = span_singular_values(vectors)?;
    Ok(rank_from_singular_values(&sv, tol))
}

pub fn rank_from_singular_values(sv: &[f64], tol: f64) -> usize {
    match sv.first() {
        Some(&max) if max > 0.0 => sv.iter().filter(|&&s| s > tol * max).count(),
        _ => 0,
    }
}

/// Orthonormal basis (real inner product) grown one candidate at a time.
struct Basis {
    elems: Vec<ComplexMatrix>,
    tol: f64,
}

impl Basis {
    /// Adds the component of `v` orthogonal to the basis if its relative size
    /// exceeds the tolerance. Returns whether the basis grew.
    fn try_add(&mut self, v: &ComplexMatrix) -> bool {
        let norm = v.frobenius_norm();
        if norm == 0.0 {
            return false;
        }
        let mut r = v.scale(1.0 / norm);
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &self.elems {
                let c = b.real_inner(&r);
                r.axpy(-c, b);
            }
        }
        let rn = r.frobenius_norm();
        if rn <= self.tol {
            return false;
        }
        self.elems.push(r.scale(1.0 / rn));
        true
    }
}

/// Dimension of the smallest bracket-closed real subspace containing `gens`.
pub fn lie_closure_dim(gens: &[SuElement]) -> Result<usize> {
    lie_closure_dim_with(gens, DEFAULT_RANK_TOL)
}

pub fn lie_closure_dim_with(gens: &[SuElement], tol: f64) -> Result<usize> {
    let n = check_family(gens)?;
    let max_dim = n * n - 1;
    let mut basis = Basis {
        elems: Vec::new(),
        tol,
    };
    for g in gens {
        basis.try_add(g.as_matrix());
    }
    // brackets of every new element with everything found so far
    let mut frontier = 0;
    while frontier < basis.elems.len() && basis.elems.len() < max_dim {
        let end = basis.elems.len();
        for a in frontier..end {
            for b in 0..a {
                let br = basis.elems[a].commutator(&basis.elems[b]);
                basis.try_add(&br);
                if basis.elems.len() >= max_dim {
                    break;
                }
            }
        }
        frontier = end;
    }
    Ok(basis.elems.len())
}
