//! Small dense-matrix helpers shared across the crate.
//!
//! Everything here works on Hermitian (or nearly Hermitian) complex matrices
//! of at most a few hundred rows, so plain dense algorithms are the right
//! tool. Eigenproblems go through [`nalgebra::linalg::SymmetricEigen`], which
//! handles complex Hermitian input.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest entrywise absolute difference between two equally sized matrices.
pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Deviation from hermiticity, `max |m - m†|`.
pub(crate) fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Exactly Hermitian average `(m + m†)/2`.
pub(crate) fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Ascending real eigenvalues of a Hermitian matrix. The input is symmetrized
/// first so that rounding noise in the caller cannot poison the solver.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> DVector<f64> {
    let eig = hermitize(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    DVector::from_vec(vals)
}

pub(crate) fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(m)[0]
}

/// Principal square root of a Hermitian PSD matrix; small negative
/// eigenvalues from rounding are clamped to zero.
pub(crate) fn hermitian_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = hermitize(m).symmetric_eigen();
    let n = m.nrows();
    let mut out = DMatrix::from_element(n, n, ZERO);
    for k in 0..n {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        if lam == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += Complex64::new(lam, 0.0) * v[i] * v[j].conj();
            }
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled down until its infinity norm is below 1/2, the
/// series is summed to machine precision, and the result is squared back up.
/// At the dimensions used here (a few hundred) this is accurate to roughly
/// machine epsilon times the norm growth, which is plenty for unitary
/// generators.
pub(crate) fn matrix_exp(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix_exp needs a square matrix");
    let norm = m
        .row_iter()
        .map(|r| r.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m * Complex64::new(0.5f64.powi(squarings as i32), 0.0);

    let mut sum = DMatrix::identity(n, n);
    let mut term: DMatrix<Complex64> = DMatrix::identity(n, n);
    for k in 1..=64u32 {
        term = (&term * &scaled) / Complex64::new(f64::from(k), 0.0);
        sum += &term;
        if max_abs(&term) < 1e-18 * max_abs(&sum).max(1.0) {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}
