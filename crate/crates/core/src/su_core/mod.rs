//! Dense complex matrices specialized to SU(n) and su(n).

mod eigen;
mod expm;
mod generators;
mod matrix;
mod rank;

pub use eigen::{
    unitary_eigendecomposition, unitary_eigendecomposition_with, unitary_eigenvalues,
    zero_sum_phases, EigenPhases,
};
pub use expm::{expm, reunitarize};
pub use generators::{canonical_diagonals, generator_hi, generator_hr, su_basis};
pub use matrix::{fidelity, ComplexMatrix, MatrixJson, SuElement, Tolerances, UnitaryMatrix, C64};
pub use rank::{
    lie_closure_dim, lie_closure_dim_with, numerical_rank, rank_from_singular_values,
    span_singular_values, DEFAULT_RANK_TOL,
};
