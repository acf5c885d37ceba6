//! Sparse and dense linear algebra for the saddle-point systems.
//!
//! The production path is `SparseLu` (left-looking LU with partial pivoting
//! on a reverse Cuthill-McKee ordering). `dense_solve` is the independent
//! brute-force route the sparse path is checked against; it must stay a
//! plain Gaussian elimination with no shared code.

mod csr;
mod dense;
mod lu;
mod rcm;

pub use csr::CsrMatrix;
pub use dense::{dense_solve, DenseMatrix};
pub use lu::SparseLu;
pub use rcm::rcm_order;

/// Euclidean norm of a vector.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// y = a*x + y.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "axpy length mismatch");
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
