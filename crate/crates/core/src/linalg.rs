//! Small dense linear-algebra helpers shared across the engines.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

fn to_faer(m: &CMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

/// Real eigenvalues of a Hermitian matrix, ascending.
///
/// Uses faer: nalgebra's tridiagonal QR returns NaN on some exactly
/// degenerate spectra (reduced stabilizer states).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("Hermitian eigensolver converges");
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigensolver converges");
    ev.sort_by(f64::total_cmp);
    ev
}

/// `exp(-i t H)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = to_faer(h)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("Hermitian eigensolver converges");
    let (u, s) = (eig.U(), eig.S().column_vector());
    let n = h.nrows();
    let v = CMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, j)];
        C64::new(z.re, z.im)
    });
    let phases = DVector::from_iterator(n, (0..n).map(|k| C64::from_polar(1.0, -t * s[k].re)));
    let scaled = &v * CMatrix::from_diagonal(&phases);
    scaled * v.adjoint()
}

/// `exp(A)` for a real antisymmetric `A` (an orthogonal matrix), via the
/// Hermitian matrix `iA`.
pub fn expm_antisymmetric(a: &DMatrix<f64>) -> DMatrix<f64> {
    let h = a.map(|x| C64::new(0.0, x));
    // exp(A) = exp(-i * (iA))
    expm_hermitian(&h, 1.0).map(|z| z.re)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Largest entry-wise deviation of `U U†` from the identity.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let p = u * u.adjoint();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((p[(i, j)] - target).norm());
        }
    }
    dev
}

/// Largest entry-wise deviation of `M` from `M†`.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entry-wise distance between two equally shaped matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Binary entropy in bits, `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// Shannon entropy in bits of a probability vector; entries at or below
/// `1e-12` contribute nothing.
pub fn shannon_entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 1e-12)
        .map(|p| -p * p.log2())
        .sum()
}

/// Nearest unitary in Frobenius norm (polar factor).
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}
