//! Dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, SymplError};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;
pub type CMat = DMatrix<Complex64>;

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
}

pub fn asymmetry(m: &Mat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.transpose()))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Induced 1-norm (max column sum).
pub fn norm1(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn require_square(m: &Mat, what: &str) -> Result<usize> {
    if !m.is_square() {
        return Err(SymplError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn require_even_square(m: &Mat, what: &str) -> Result<usize> {
    let n = require_square(m, what)?;
    if n == 0 || n % 2 != 0 {
        return Err(SymplError::DimensionMismatch(format!(
            "{what} must have even nonzero dimension, got {n}"
        )));
    }
    Ok(n / 2)
}

pub fn require_symmetric(m: &Mat, tol: f64) -> Result<()> {
    let a = asymmetry(m);
    if a > tol * (1.0 + max_abs(m)) {
        return Err(SymplError::NotSymmetric(a));
    }
    Ok(())
}

pub fn inverse(m: &Mat) -> Result<Mat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| SymplError::InvalidArgument("matrix is singular".into()))
}

/// Ascending eigen-decomposition of a symmetric matrix.
pub fn sym_eigen(m: &Mat) -> (Vector, Mat) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = Mat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn min_eigenvalue_sym(m: &Mat) -> f64 {
    let (vals, _) = sym_eigen(m);
    vals.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Apply `f` to the spectrum of a symmetric matrix.
pub fn sym_fn(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = sym_eigen(m);
    let d = Mat::from_diagonal(&vals.map(f));
    &vecs * d * vecs.transpose()
}

pub fn sym_sqrt(m: &Mat) -> Mat {
    sym_fn(m, |x| x.max(0.0).sqrt())
}

/// Smallest eigenvalue of the Hermitian matrix `a + i b` (a symmetric, b skew).
///
/// Uses the real embedding `[[a, -b], [b, a]]`, whose spectrum is the
/// Hermitian spectrum with every eigenvalue doubled.
pub fn min_eig_hermitian_parts(a: &Mat, b: &Mat) -> f64 {
    let n = a.nrows();
    let mut big = Mat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((n, n), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).copy_from(&(-b));
    big.view_mut((n, 0), (n, n)).copy_from(b);
    min_eigenvalue_sym(&big)
}

/// Ascending eigen-decomposition of a Hermitian matrix.
pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn direct_sum(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Mat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn direct_sum_vec(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).cloned())
}

/// Rows and columns picked by index lists.
pub fn select(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_vec(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Moore-Penrose pseudo-inverse with a relative singular value cutoff.
pub fn pinv(m: &Mat, rcond: f64) -> Mat {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rcond * smax.max(f64::MIN_POSITIVE);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = Mat::zeros(m.ncols(), m.nrows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

pub fn rank(m: &Mat, rcond: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rcond * smax).count()
}

pub fn condition_number(m: &Mat) -> f64 {
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

pub fn smallest_singular_value(m: &Mat) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    let id = Mat::identity(n, n);
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is nonsingular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
