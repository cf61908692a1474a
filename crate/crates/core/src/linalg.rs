//! Small dense linear-algebra helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// `|i><j|` in dimension `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// Pauli matrices in x, y, z order.
pub fn paulis() -> [CMatrix; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.trace()
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest entrywise modulus of `A - A^dagger`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigenvalues of `(A + A^T) / 2`, ascending.
pub fn symmetric_part_eigenvalues(a: &RMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let s = (a + a.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn expm(a: &RMatrix) -> RMatrix {
    if a.nrows() == 0 {
        return RMatrix::zeros(0, 0);
    }
    a.clone().exp()
}

pub fn expm_complex(a: &CMatrix) -> CMatrix {
    a.clone().exp()
}

/// Serializes a vector as a flat list.
pub fn serialize_vector<S: serde::Serializer>(v: &RVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

/// Serializes a matrix as a list of rows.
pub fn serialize_matrix<S: serde::Serializer>(m: &RMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()))
}

/// Minimum-norm least-squares solution of `A x = b` through the SVD.
pub fn lstsq(a: &RMatrix, b: &RVector) -> RVector {
    if a.ncols() == 0 {
        return RVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (smax * 1e-13).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| RVector::zeros(a.ncols()))
}

/// Real matrix `-i [H, .]`-style products are real up to roundoff; this
/// collects the real parts and reports the largest imaginary residue.
pub fn real_part(a: &CMatrix) -> (RMatrix, f64) {
    let mut worst: f64 = 0.0;
    let r = RMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        worst = worst.max(a[(i, j)].im.abs());
        a[(i, j)].re
    });
    (r, worst)
}

pub fn antisymmetry_defect(a: &RMatrix) -> f64 {
    (a + a.transpose()).amax()
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(|x| c(x, 0.0))
}
