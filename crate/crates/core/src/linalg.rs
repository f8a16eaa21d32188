//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `a^H b` for two column views of equal length.
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter()
        .zip(b)
        .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob_sqr(m: &CMatrix) -> f64 {
    norm_sqr(m.as_slice())
}

/// Hermitian eigendecomposition `A = U diag(lambda) U^H` of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Column `m` of a complex matrix as a contiguous slice (nalgebra is column-major).
pub fn col(m: &CMatrix, j: usize) -> &[C64] {
    let r = m.nrows();
    &m.as_slice()[j * r..(j + 1) * r]
}

pub fn col_mut(m: &mut CMatrix, j: usize) -> &mut [C64] {
    let r = m.nrows();
    &mut m.as_mut_slice()[j * r..(j + 1) * r]
}
