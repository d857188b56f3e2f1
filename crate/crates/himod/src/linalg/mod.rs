//! Numerical kernels consumed by the rest of the crate.

pub mod dense;
pub mod sparse;

pub use dense::{gen_sym_eig, lu_solve, sym_eig};
pub use sparse::{
    relative_residual, CsrMatrix, Ordering, SparseLu, SparseMatrixHandle, SparsityPattern, TripletBuilder,
};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
