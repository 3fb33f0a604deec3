//! Symplectic linear algebra: the form, membership, generators, decompositions
//! and the subspace/submatrix machinery used by every other module.
//!
//! Matrices are stored in interleaved ordering `(q1, p1, ..., qN, pN)` unless a
//! type says otherwise. In that ordering the form is the block diagonal of
//! `[[0, -1], [1, 0]]`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SymplError};
use crate::json;
use crate::linalg::{
    self, direct_sum, herm_eigen, max_abs, pinv, require_even_square, require_symmetric, sym_eigen,
    sym_fn, CMat, Mat, Vector,
};

/// Default absolute tolerance on `|S^t Ω S - Ω|_max`.
pub const TOL_SYMP: f64 = 1e-9;

/// Largest `|Ω H t|` accepted by [`exp_map`].
pub const EXP_MAP_RANGE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeOrdering {
    /// `(q1, p1, q2, p2, ...)`
    Interleaved,
    /// `(q1, ..., qN, p1, ..., pN)`
    Grouped,
}

impl ModeOrdering {
    /// Coordinate index of `q_j` and `p_j` (0-based mode `j`).
    pub fn q_index(self, _n_modes: usize, j: usize) -> usize {
        match self {
            ModeOrdering::Interleaved => 2 * j,
            ModeOrdering::Grouped => j,
        }
    }

    pub fn p_index(self, n_modes: usize, j: usize) -> usize {
        match self {
            ModeOrdering::Interleaved => 2 * j + 1,
            ModeOrdering::Grouped => n_modes + j,
        }
    }
}

/// Permutation matrix `P` with `x_to = P x_from`.
pub fn reorder_matrix(n_modes: usize, from: ModeOrdering, to: ModeOrdering) -> Mat {
    let mut p = Mat::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        p[(to.q_index(n_modes, j), from.q_index(n_modes, j))] = 1.0;
        p[(to.p_index(n_modes, j), from.p_index(n_modes, j))] = 1.0;
    }
    p
}

/// Re-express a square operator written in `from` ordering in `to` ordering.
pub fn convert_ordering(m: &Mat, from: ModeOrdering, to: ModeOrdering) -> Mat {
    if from == to {
        return m.clone();
    }
    let n = m.nrows() / 2;
    let p = reorder_matrix(n, from, to);
    &p * m * p.transpose()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub n_modes: usize,
    pub ordering: ModeOrdering,
    pub matrix: Mat,
}

impl SymplecticForm {
    /// `σ(u, v) = u^t Ω v`
    pub fn sigma(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.matrix * v))
    }
}

/// The symplectic form for `n_modes` modes.
pub fn omega(n_modes: usize, ordering: ModeOrdering) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(SymplError::InvalidArgument(
            "n_modes must be at least 1".into(),
        ));
    }
    let matrix = omega_in(n_modes, ordering);
    Ok(SymplecticForm {
        n_modes,
        ordering,
        matrix,
    })
}

pub fn omega_in(n_modes: usize, ordering: ModeOrdering) -> Mat {
    let mut m = Mat::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        let q = ordering.q_index(n_modes, j);
        let p = ordering.p_index(n_modes, j);
        m[(q, p)] = -1.0;
        m[(p, q)] = 1.0;
    }
    m
}

/// Interleaved form, the default everywhere in this crate.
pub fn omega_mat(n_modes: usize) -> Mat {
    omega_in(n_modes, ModeOrdering::Interleaved)
}

/// `σ(u, v) = u^t Ω v` in interleaved ordering.
pub fn sigma(u: &Vector, v: &Vector) -> f64 {
    let mut s = 0.0;
    for j in 0..u.len() / 2 {
        s += u[2 * j + 1] * v[2 * j] - u[2 * j] * v[2 * j + 1];
    }
    s
}

/// Multiply by the interleaved `Ω` without forming it.
pub fn omega_times(v: &Vector) -> Vector {
    let mut out = Vector::zeros(v.len());
    for j in 0..v.len() / 2 {
        out[2 * j] = -v[2 * j + 1];
        out[2 * j + 1] = v[2 * j];
    }
    out
}

pub fn symplectic_residual_in(s: &Mat, ordering: ModeOrdering) -> Result<f64> {
    let n = require_even_square(s, "S")?;
    let om = omega_in(n, ordering);
    Ok(max_abs(&(s.transpose() * &om * s - om)))
}

pub fn symplectic_residual(s: &Mat) -> Result<f64> {
    symplectic_residual_in(s, ModeOrdering::Interleaved)
}

/// `|S^t Ω S - Ω|_max <= tol` (interleaved ordering).
pub fn is_symplectic(s: &Mat, tol: f64) -> Result<bool> {
    Ok(symplectic_residual(s)? <= tol)
}

pub fn is_symplectic_in(s: &Mat, ordering: ModeOrdering, tol: f64) -> Result<bool> {
    Ok(symplectic_residual_in(s, ordering)? <= tol)
}

/// A real matrix known to satisfy `S^t Ω S = Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    mat: Mat,
    ordering: ModeOrdering,
}

impl SymplecticMatrix {
    /// Checked constructor, interleaved ordering.
    pub fn new(mat: Mat, tol: f64) -> Result<Self> {
        Self::with_ordering(mat, ModeOrdering::Interleaved, tol)
    }

    pub fn with_ordering(mat: Mat, ordering: ModeOrdering, tol: f64) -> Result<Self> {
        let r = symplectic_residual_in(&mat, ordering)?;
        if r > tol {
            return Err(SymplError::NotSymplectic(r));
        }
        Ok(Self { mat, ordering })
    }

    /// Wrap without checking; callers guarantee symplecticity by construction.
    pub fn from_trusted(mat: Mat) -> Self {
        Self {
            mat,
            ordering: ModeOrdering::Interleaved,
        }
    }

    pub fn identity(n_modes: usize) -> Self {
        Self::from_trusted(Mat::identity(2 * n_modes, 2 * n_modes))
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat {
        self.mat
    }

    pub fn n_modes(&self) -> usize {
        self.mat.nrows() / 2
    }

    pub fn ordering(&self) -> ModeOrdering {
        self.ordering
    }

    pub fn to_ordering(&self, ordering: ModeOrdering) -> Self {
        Self {
            mat: convert_ordering(&self.mat, self.ordering, ordering),
            ordering,
        }
    }

    /// Interleaved copy of the underlying matrix.
    pub fn interleaved(&self) -> Mat {
        convert_ordering(&self.mat, self.ordering, ModeOrdering::Interleaved)
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual_in(&self.mat, self.ordering).unwrap_or(f64::INFINITY)
    }

    /// `self * other`
    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.mat.shape() != other.mat.shape() {
            return Err(SymplError::DimensionMismatch(
                "compose: shapes differ".into(),
            ));
        }
        let o = convert_ordering(&other.mat, other.ordering, self.ordering);
        Ok(Self {
            mat: &self.mat * o,
            ordering: self.ordering,
        })
    }

    /// `S^{-1} = -Ω S^t Ω`
    pub fn inverse(&self) -> Self {
        let om = omega_in(self.n_modes(), self.ordering);
        Self {
            mat: -(&om * self.mat.transpose() * &om),
            ordering: self.ordering,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SymplecticRepr {
    n_modes: usize,
    ordering: ModeOrdering,
    data: Vec<f64>,
}

impl Serialize for SymplecticMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SymplecticRepr {
            n_modes: self.n_modes(),
            ordering: self.ordering,
            data: json::row_major(&self.mat),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymplecticMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SymplecticRepr::deserialize(d)?;
        let dim = 2 * r.n_modes;
        let mat = json::from_row_major(dim, dim, &r.data)
            .ok_or_else(|| serde::de::Error::custom("data length does not match n_modes"))?;
        SymplecticMatrix::with_ordering(mat, r.ordering, 1e-6).map_err(serde::de::Error::custom)
    }
}

/// `S^{-1} = -Ω S^t Ω` (interleaved).
pub fn inverse(s: &Mat) -> Result<Mat> {
    let n = require_even_square(s, "S")?;
    let om = omega_mat(n);
    Ok(-(&om * s.transpose() * &om))
}

/// Pulls a nearly symplectic `S` back onto the group.
///
/// Newton steps `S ← S(Id + ½ΩE)` with `E = SᵗΩS − Ω`; each step squares
/// the defect, so long products lose only the rounding of the last step.
pub fn refine(s: &Mat) -> Result<Mat> {
    let n = require_even_square(s, "S")?;
    let om = omega_mat(n);
    let id = Mat::identity(2 * n, 2 * n);
    let mut cur = s.clone();
    let mut res = max_abs(&(cur.transpose() * &om * &cur - &om));
    for _ in 0..4 {
        let e = cur.transpose() * &om * &cur - &om;
        let next = &cur * (&id + &om * e * 0.5);
        let r = max_abs(&(next.transpose() * &om * &next - &om));
        if !(r < res) {
            break;
        }
        cur = next;
        res = r;
    }
    Ok(cur)
}

/// An element `M` of the symplectic Lie algebra: `M Ω + Ω M^t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpAlgebraElement {
    mat: Mat,
}

impl SpAlgebraElement {
    pub fn new(mat: Mat, tol: f64) -> Result<Self> {
        let n = require_even_square(&mat, "M")?;
        let om = omega_mat(n);
        let r = max_abs(&(&mat * &om + &om * mat.transpose()));
        if r > tol * (1.0 + max_abs(&mat)) {
            return Err(SymplError::InvalidArgument(format!(
                "not in the symplectic algebra (residual {r:.3e})"
            )));
        }
        Ok(Self { mat })
    }

    /// `M = Ω H` for symmetric `H`.
    pub fn from_hamiltonian(h: &Mat) -> Result<Self> {
        let n = require_even_square(h, "H")?;
        require_symmetric(h, 1e-12)?;
        Ok(Self {
            mat: omega_mat(n) * h,
        })
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    /// The symmetric `H` with `M = Ω H`.
    pub fn hamiltonian(&self) -> Mat {
        let n = self.mat.nrows() / 2;
        -(omega_mat(n) * &self.mat)
    }
}

/// `S = exp(Ω H t)`.
pub fn exp_map(h: &Mat, t: f64) -> Result<SymplecticMatrix> {
    let n = require_even_square(h, "H")?;
    require_symmetric(h, 1e-12)?;
    let a = omega_mat(n) * h * t;
    let nrm = linalg::norm1(&a);
    if nrm > EXP_MAP_RANGE {
        return Err(SymplError::RangeError(nrm));
    }
    Ok(SymplecticMatrix::from_trusted(linalg::expm(&a)))
}

/// Symplectic Cayley transform `S = Id - (M + Id/2)^{-1}`.
pub fn cayley(m: &SpAlgebraElement) -> Result<SymplecticMatrix> {
    let dim = m.mat.nrows();
    let shifted = &m.mat + Mat::identity(dim, dim) * 0.5;
    let inv = shifted.try_inverse().ok_or(SymplError::SingularShift)?;
    Ok(SymplecticMatrix::from_trusted(
        Mat::identity(dim, dim) - inv,
    ))
}

/// Inverse Cayley transform: `M = (Id - S)^{-1} - Id/2`.
pub fn cayley_inverse(s: &Mat) -> Result<SpAlgebraElement> {
    let n = require_even_square(s, "S")?;
    let id = Mat::identity(2 * n, 2 * n);
    let inv = (&id - s)
        .try_inverse()
        .ok_or(SymplError::SingularIdMinusS)?;
    Ok(SpAlgebraElement {
        mat: inv - id * 0.5,
    })
}

#[derive(Debug, Clone)]
pub struct EulerDecomposition {
    /// Orthogonal symplectic left factor.
    pub r: Mat,
    /// Diagonal `(z1, 1/z1, z2, 1/z2, ...)`, with `z_j >= 1`.
    pub z: Mat,
    /// Orthogonal symplectic right factor.
    pub r_prime: Mat,
}

impl EulerDecomposition {
    pub fn squeezing(&self) -> Vec<f64> {
        (0..self.z.nrows() / 2)
            .map(|j| self.z[(2 * j, 2 * j)])
            .collect()
    }

    pub fn reconstruct(&self) -> Mat {
        &self.r * &self.z * &self.r_prime
    }
}

/// Orthonormal symplectic basis of an `Ω`-invariant subspace, returned as
/// `(q, p)` column pairs with `p = Ω q`.
fn unitary_pairs(basis: &Mat) -> Vec<(Vector, Vector)> {
    let mut rest = basis.clone();
    let mut pairs = Vec::new();
    while rest.ncols() >= 2 {
        let u: Vector = rest.column(0).into();
        let u = &u / u.norm();
        let proj = &rest * rest.transpose();
        let mut w = &proj * omega_times(&u);
        w -= &u * u.dot(&w);
        let w = &w / w.norm();
        // remove the pair from the span, keep an orthonormal basis of the rest
        let mut cols = Vec::new();
        for k in 0..rest.ncols() {
            let mut c: Vector = rest.column(k).into();
            c -= &u * u.dot(&c);
            c -= &w * w.dot(&c);
            cols.push(c);
        }
        let m = Mat::from_columns(&cols);
        let svd = m.svd(true, false);
        let u_left = svd.u.expect("u requested");
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > 1e-8)
            .collect();
        rest = Mat::from_fn(u_left.nrows(), keep.len(), |i, j| u_left[(i, keep[j])]);
        pairs.push((u, w));
    }
    pairs
}

/// `S = R Z R'` with `R, R'` orthogonal symplectic and `Z` diagonal.
pub fn euler_decompose(s: &Mat) -> Result<EulerDecomposition> {
    let n = require_even_square(s, "S")?;
    let dim = 2 * n;
    let p = linalg::symmetrize(&(s.transpose() * s));
    let (vals, vecs) = sym_eigen(&p);
    let delta = 1e-9;
    let big: Vec<usize> = (0..dim).rev().filter(|&k| vals[k] > 1.0 + delta).collect();
    let n_big = big.len();
    let mid: Vec<usize> = (0..dim)
        .filter(|&k| (vals[k] - 1.0).abs() <= delta)
        .collect();
    if 2 * n_big + mid.len() != dim {
        return Err(SymplError::NotSymplectic(symplectic_residual(s)?));
    }
    let mut w = Mat::zeros(dim, dim);
    let mut zdiag = Vector::from_element(dim, 1.0);
    for (j, &k) in big.iter().enumerate() {
        let v: Vector = vecs.column(k).into();
        let z = vals[k].sqrt();
        w.set_column(2 * j, &v);
        w.set_column(2 * j + 1, &omega_times(&v));
        zdiag[2 * j] = z;
        zdiag[2 * j + 1] = 1.0 / z;
    }
    if !mid.is_empty() {
        let basis = Mat::from_fn(dim, mid.len(), |i, c| vecs[(i, mid[c])]);
        for (j, (q, pv)) in unitary_pairs(&basis).into_iter().enumerate() {
            w.set_column(2 * (n_big + j), &q);
            w.set_column(2 * (n_big + j) + 1, &pv);
        }
    }
    let z = Mat::from_diagonal(&zdiag);
    let zinv = Mat::from_diagonal(&zdiag.map(|x| 1.0 / x));
    let r = s * &w * zinv;
    Ok(EulerDecomposition {
        r,
        z,
        r_prime: w.transpose(),
    })
}

/// Factors of `S = [[Id, 0], [P, Id]] [[L^t, 0], [0, L^{-1}]] [[V, W], [-W, V]]`
/// in grouped ordering.
#[derive(Debug, Clone)]
pub struct PreIwasawa {
    pub p: Mat,
    pub l: Mat,
    pub v: Mat,
    pub w: Mat,
}

impl PreIwasawa {
    /// The three factors as grouped-ordering matrices.
    pub fn factors(&self) -> (Mat, Mat, Mat) {
        let n = self.p.nrows();
        let id = Mat::identity(n, n);
        let z = Mat::zeros(n, n);
        let f1 = block2(&id, &z, &self.p, &id);
        let linv = self.l.clone().try_inverse().expect("L is invertible");
        let f2 = block2(&self.l.transpose(), &z, &z, &linv);
        let f3 = block2(&self.v, &self.w, &(-&self.w), &self.v);
        (f1, f2, f3)
    }

    /// Product of the factors, grouped ordering.
    pub fn reconstruct(&self) -> Mat {
        let (a, b, c) = self.factors();
        a * b * c
    }
}

pub(crate) fn block2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    let (ra, ca) = a.shape();
    let (_, cb) = b.shape();
    let (rc, _) = c.shape();
    let mut out = Mat::zeros(ra + rc, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((0, ca), (ra, cb)).copy_from(b);
    out.view_mut((ra, 0), (rc, ca)).copy_from(c);
    out.view_mut((ra, ca), (rc, cb)).copy_from(d);
    out
}

/// Pre-Iwasawa decomposition. The input may be in either ordering.
pub fn pre_iwasawa(s: &SymplecticMatrix) -> Result<PreIwasawa> {
    let g = s.to_ordering(ModeOrdering::Grouped).into_matrix();
    let n = g.nrows() / 2;
    let a = g.view((0, 0), (n, n)).into_owned();
    let b = g.view((0, n), (n, n)).into_owned();
    let c = g.view((n, 0), (n, n)).into_owned();
    let d = g.view((n, n), (n, n)).into_owned();
    let gram = &a * a.transpose() + &b * b.transpose();
    let l = linalg::sym_sqrt(&gram);
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(SymplError::NotPositiveDefinite)?;
    let ginv = gram.try_inverse().ok_or(SymplError::NotPositiveDefinite)?;
    let v = &linv * &a;
    let w = &linv * &b;
    let p = linalg::symmetrize(&((&c * a.transpose() + &d * b.transpose()) * ginv));
    Ok(PreIwasawa { p, l, v, w })
}

#[derive(Debug, Clone)]
pub struct Williamson {
    /// Symplectic `S` with `S V S^t = diag(ν1, ν1, ν2, ν2, ...)`.
    pub s: Mat,
    /// Symplectic eigenvalues `ν_j`, ascending.
    pub diag: Vec<f64>,
}

impl Williamson {
    pub fn diagonal_matrix(&self) -> Mat {
        let d: Vec<f64> = self.diag.iter().flat_map(|&x| [x, x]).collect();
        Mat::from_diagonal(&Vector::from_vec(d))
    }
}

/// Williamson normal form of a positive-definite covariance.
pub fn williamson(v: &Mat) -> Result<Williamson> {
    let n = require_even_square(v, "V")?;
    require_symmetric(v, 1e-10)?;
    let (vals, _) = sym_eigen(v);
    if vals[0] <= 0.0 {
        return Err(SymplError::NotPositiveDefinite);
    }
    let vsqrt = sym_fn(v, f64::sqrt);
    let vinvsqrt = sym_fn(v, |x| 1.0 / x.sqrt());
    let k = &vinvsqrt * omega_mat(n) * &vinvsqrt;
    // iK is Hermitian; its positive spectrum gives 1/ν_j.
    let ik = CMat::from_fn(2 * n, 2 * n, |i, j| Complex64::new(0.0, k[(i, j)]));
    let (evals, evecs) = herm_eigen(&ik);
    // largest N eigenvalues, descending (so ν ascending); ties keep lowest index
    let mut o = Mat::zeros(2 * n, 2 * n);
    let mut nus = Vec::with_capacity(n);
    for j in 0..n {
        let idx = 2 * n - 1 - j;
        let mu = evals[idx];
        if mu <= 0.0 {
            return Err(SymplError::NotPositiveDefinite);
        }
        let x = evecs.column(idx);
        let a = Vector::from_iterator(2 * n, x.iter().map(|z| z.re * std::f64::consts::SQRT_2));
        let b = Vector::from_iterator(2 * n, x.iter().map(|z| z.im * std::f64::consts::SQRT_2));
        o.set_column(2 * j, &a);
        o.set_column(2 * j + 1, &b);
        nus.push(1.0 / mu);
    }
    let dsqrt = Mat::from_diagonal(&Vector::from_iterator(
        2 * n,
        nus.iter().flat_map(|&x| [x.sqrt(), x.sqrt()]),
    ));
    let s = dsqrt * o.transpose() * vinvsqrt;
    let _ = vsqrt;
    Ok(Williamson { s, diag: nus })
}

/// Symplectic eigenvalues of a positive-definite `V`, ascending.
pub fn symplectic_eigenvalues(v: &Mat) -> Result<Vec<f64>> {
    Ok(williamson(v)?.diag)
}

#[derive(Debug, Clone)]
pub struct SymplecticSvd {
    pub s: Mat,
    /// Diagonal entries of `Λ`.
    pub lambda: Vec<f64>,
    pub q: Mat,
    /// Coordinates receiving the rows of `Λ`. These are the leading `n`
    /// coordinates whenever the column space has maximal symplectic rank.
    pub layout: Vec<usize>,
}

impl SymplecticSvd {
    /// The `2m x n` matrix `E Λ` placing `Λ` at `layout`.
    pub fn embedded_lambda(&self) -> Mat {
        let dim = self.s.nrows();
        let n = self.lambda.len();
        let mut e = Mat::zeros(dim, n);
        for (t, &row) in self.layout.iter().enumerate() {
            e[(row, t)] = self.lambda[t];
        }
        e
    }

    pub fn reconstruct(&self) -> Mat {
        &self.s * self.embedded_lambda() * &self.q
    }
}

/// Project `v` onto the symplectic complement of the given pairs.
fn symp_project(v: &Vector, pairs: &[(Vector, Vector)]) -> Vector {
    let mut out = v.clone();
    for _ in 0..2 {
        for (e, f) in pairs {
            let a = sigma(f, &out);
            let b = sigma(e, &out);
            out += f * b - e * a;
        }
    }
    out
}

/// Split an orthonormal basis of a subspace into symplectic pairs and an
/// isotropic remainder.
fn adapted_system(u: &Mat, tol: f64) -> (Vec<(Vector, Vector)>, Vec<Vector>) {
    let mut rest: Vec<Vector> = (0..u.ncols()).map(|k| u.column(k).into()).collect();
    let mut pairs = Vec::new();
    loop {
        let mut best = (0.0_f64, 0, 0);
        for a in 0..rest.len() {
            for b in a + 1..rest.len() {
                let s = sigma(&rest[a], &rest[b]);
                if s.abs() > best.0.abs() {
                    best = (s, a, b);
                }
            }
        }
        if best.0.abs() <= tol {
            break;
        }
        let (s, a, b) = best;
        let f = &rest[b] / (-s);
        let e = rest[a].clone();
        rest.remove(b);
        rest.remove(a);
        let pair = [(e.clone(), f.clone())];
        for v in rest.iter_mut() {
            *v = symp_project(v, &pair);
        }
        pairs.push((e, f));
    }
    let iso = if rest.is_empty() {
        rest
    } else {
        let m = Mat::from_columns(&rest);
        let qr = m.qr();
        let q = qr.q();
        (0..q.ncols()).map(|k| q.column(k).into()).collect()
    };
    (pairs, iso)
}

/// Complete a partial symplectic system to a full symplectic basis.
fn complete_symplectic_basis(
    dim: usize,
    pairs: &[(Vector, Vector)],
    iso: &[Vector],
) -> Vec<(Vector, Vector)> {
    let mut out: Vec<(Vector, Vector)> = pairs.to_vec();
    let mut partners: Vec<Vector> = Vec::new();
    for i in 0..iso.len() {
        let mut rows: Vec<Vector> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (e, f) in pairs {
            rows.push(e.clone());
            rhs.push(0.0);
            rows.push(f.clone());
            rhs.push(0.0);
        }
        for (k, g2) in iso.iter().enumerate() {
            rows.push(g2.clone());
            rhs.push(if k == i { -1.0 } else { 0.0 });
        }
        for h in &partners {
            rows.push(h.clone());
            rhs.push(0.0);
        }
        // σ(b, h) = b^t Ω h
        let a = Mat::from_fn(rows.len(), dim, |r, c| omega_times(&rows[r]).map(|x| -x)[c]);
        let h = pinv(&a, 1e-13) * Vector::from_vec(rhs);
        partners.push(h);
    }
    for (g, h) in iso.iter().zip(partners) {
        out.push((g.clone(), h));
    }
    while 2 * out.len() < dim {
        let mut best: Option<Vector> = None;
        let mut best_norm = 0.0;
        for k in 0..dim {
            let mut e = Vector::zeros(dim);
            e[k] = 1.0;
            let pe = symp_project(&e, &out);
            let nrm = pe.norm();
            if nrm > best_norm + 1e-12 {
                best_norm = nrm;
                best = Some(pe);
            }
        }
        let e = best.expect("complement is nonempty");
        let e = &e / e.norm();
        let f = symp_project(&omega_times(&e), &out);
        let s = sigma(&e, &f);
        out.push((e, f / (-s)));
    }
    out
}

/// `M = S [Λ; 0] Q` with `S` symplectic, `Λ` positive diagonal, `Q` orthogonal.
pub fn symplectic_svd(m: &Mat) -> Result<SymplecticSvd> {
    let dim = m.nrows();
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(SymplError::DimensionMismatch("M must have 2m rows".into()));
    }
    let ncols = m.ncols();
    let rk = linalg::rank(m, 1e-12);
    if rk < ncols || ncols == 0 {
        return Err(SymplError::RankDeficient {
            rank: rk,
            expected: ncols,
        });
    }
    let svd = m.clone().svd(true, false);
    let u_full = svd.u.expect("u requested");
    let u = u_full.columns(0, ncols).into_owned();
    let (pairs, iso) = adapted_system(&u, 1e-10);
    let r = pairs.len();
    let k = iso.len();
    let mut bcols: Vec<Vector> = Vec::with_capacity(ncols);
    for (e, f) in &pairs {
        bcols.push(e.clone());
        bcols.push(f.clone());
    }
    bcols.extend(iso.iter().cloned());
    let b = Mat::from_columns(&bcols);
    let c = pinv(&b, 1e-14) * m;
    let h = &c * c.transpose();
    let np = 2 * r;
    // A = [[S_P, 0], [X, G]] with C C^t = A Λ² A^t
    let mut amat = Mat::zeros(ncols, ncols);
    let mut lam2 = vec![0.0; ncols];
    let mut xmat = Mat::zeros(k, np);
    if r > 0 {
        let hpp = h.view((0, 0), (np, np)).into_owned();
        let wil = williamson(&hpp)?;
        let sp = linalg::inverse(&wil.s)?;
        amat.view_mut((0, 0), (np, np)).copy_from(&sp);
        for (j, &nu) in wil.diag.iter().enumerate() {
            lam2[2 * j] = nu;
            lam2[2 * j + 1] = nu;
        }
        if k > 0 {
            let hip = h.view((np, 0), (k, np)).into_owned();
            let lp_inv = Mat::from_diagonal(&Vector::from_iterator(
                np,
                lam2[..np].iter().map(|x| 1.0 / x),
            ));
            xmat = hip * linalg::inverse(&sp.transpose())? * lp_inv;
        }
    }
    if k > 0 {
        let hii = h.view((np, np), (k, k)).into_owned();
        let lp = Mat::from_diagonal(&Vector::from_iterator(np, lam2[..np].iter().cloned()));
        let schur = hii - &xmat * lp * xmat.transpose();
        let (vals, vecs) = sym_eigen(&schur);
        amat.view_mut((np, 0), (k, np)).copy_from(&xmat);
        amat.view_mut((np, np), (k, k)).copy_from(&vecs);
        for t in 0..k {
            lam2[np + t] = vals[t];
        }
    }
    if lam2.iter().any(|&x| x <= 0.0) {
        return Err(SymplError::RankDeficient {
            rank: rk,
            expected: ncols,
        });
    }
    let lambda: Vec<f64> = lam2.iter().map(|x| x.sqrt()).collect();
    let bnew = &b * &amat;
    let new_pairs: Vec<(Vector, Vector)> = (0..r)
        .map(|j| (bnew.column(2 * j).into(), bnew.column(2 * j + 1).into()))
        .collect();
    let new_iso: Vec<Vector> = (0..k).map(|t| bnew.column(np + t).into()).collect();
    let full = complete_symplectic_basis(dim, &new_pairs, &new_iso);
    let mut s = Mat::zeros(dim, dim);
    for (j, (e, f)) in full.iter().enumerate() {
        s.set_column(2 * j, e);
        s.set_column(2 * j + 1, f);
    }
    let mut layout: Vec<usize> = (0..np).collect();
    layout.extend((0..k).map(|t| 2 * (r + t)));
    let lam_inv = Mat::from_diagonal(&Vector::from_iterator(
        ncols,
        lambda.iter().map(|x| 1.0 / x),
    ));
    let q = lam_inv * linalg::inverse(&amat)? * c;
    Ok(SymplecticSvd {
        s,
        lambda,
        q,
        layout,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubspaceKind {
    Isotropic,
    Lagrangian,
    Symplectic,
    General,
}

/// Columns spanning a subspace of phase space (interleaved coordinates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    #[serde(with = "crate::json::matrix")]
    pub f: Mat,
    pub kind: SubspaceKind,
}

impl SubspaceBasis {
    /// Classify the span of `f`. Columns must be linearly independent.
    pub fn new(f: Mat, tol: f64) -> Result<Self> {
        if !f.nrows().is_multiple_of(2) {
            return Err(SymplError::DimensionMismatch(
                "basis rows must be even".into(),
            ));
        }
        if linalg::rank(&f, 1e-12) < f.ncols() {
            return Err(SymplError::RankDeficient {
                rank: linalg::rank(&f, 1e-12),
                expected: f.ncols(),
            });
        }
        let kind = classify(&f, tol);
        Ok(Self { f, kind })
    }

    /// Span of the listed coordinate axes.
    pub fn coordinates(n_modes: usize, idx: &[usize]) -> Result<Self> {
        let dim = 2 * n_modes;
        if idx.iter().any(|&i| i >= dim) {
            return Err(SymplError::InvalidArgument(
                "coordinate index out of range".into(),
            ));
        }
        let f = Mat::from_fn(dim, idx.len(), |r, c| if r == idx[c] { 1.0 } else { 0.0 });
        Self::new(f, 1e-12)
    }

    /// Full phase space of the listed modes (q and p of each).
    pub fn modes(n_modes: usize, modes: &[usize]) -> Result<Self> {
        Self::coordinates(n_modes, &mode_coordinates(modes))
    }

    /// The q-axes of the listed modes (a Lagrangian plane of their span).
    pub fn q_plane(n_modes: usize, modes: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = modes.iter().map(|&m| 2 * m).collect();
        Self::coordinates(n_modes, &idx)
    }

    pub fn p_plane(n_modes: usize, modes: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = modes.iter().map(|&m| 2 * m + 1).collect();
        Self::coordinates(n_modes, &idx)
    }

    pub fn full(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self {
            f: Mat::identity(dim, dim),
            kind: SubspaceKind::Symplectic,
        }
    }

    pub fn dim(&self) -> usize {
        self.f.ncols()
    }

    /// Conjugate plane `Ω F`; maps q-planes to p-planes.
    pub fn conjugate(&self) -> Self {
        let n = self.f.nrows() / 2;
        let f = omega_mat(n) * &self.f;
        let kind = self.kind;
        Self { f, kind }
    }

    pub fn is_lagrangian_within(&self, n_block_modes: usize) -> bool {
        self.kind == SubspaceKind::Lagrangian
            || (self.kind == SubspaceKind::Isotropic && self.dim() == n_block_modes)
    }
}

fn classify(f: &Mat, tol: f64) -> SubspaceKind {
    let n = f.nrows() / 2;
    let g = f.transpose() * omega_mat(n) * f;
    let scale = 1.0 + max_abs(&(f.transpose() * f));
    if max_abs(&g) <= tol * scale {
        if f.ncols() == n {
            SubspaceKind::Lagrangian
        } else {
            SubspaceKind::Isotropic
        }
    } else if f.ncols().is_multiple_of(2) && linalg::rank(&g, 1e-10) == f.ncols() {
        SubspaceKind::Symplectic
    } else {
        SubspaceKind::General
    }
}

/// Interleaved coordinates `[2m, 2m+1, ...]` of a mode list.
pub fn mode_coordinates(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

/// `F_r^t S F_c`.
pub fn submatrix(s: &Mat, rows: &SubspaceBasis, cols: &SubspaceBasis) -> Result<Mat> {
    if rows.f.nrows() != s.nrows() || cols.f.nrows() != s.ncols() {
        return Err(SymplError::DimensionMismatch(
            "submatrix basis rows vs S".into(),
        ));
    }
    Ok(rows.f.transpose() * s * &cols.f)
}

fn haar_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * phase;
        }
    }
    out
}

/// Orthogonal symplectic matrix of a unitary, interleaved ordering.
pub fn orthosymplectic_from_unitary(u: &CMat) -> Mat {
    let n = u.nrows();
    let mut g = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let x = u[(i, j)].re;
            let y = u[(i, j)].im;
            g[(i, j)] = x;
            g[(i, n + j)] = -y;
            g[(n + i, j)] = y;
            g[(n + i, n + j)] = x;
        }
    }
    convert_ordering(&g, ModeOrdering::Grouped, ModeOrdering::Interleaved)
}

pub fn random_orthosymplectic(n_modes: usize, rng: &mut impl Rng) -> Mat {
    orthosymplectic_from_unitary(&haar_unitary(n_modes, rng))
}

/// `R Z R'` with Haar orthosymplectic factors and log-uniform squeezing in
/// `[1/squeeze_bound, squeeze_bound]`.
pub fn random_symplectic_rng(
    n_modes: usize,
    squeeze_bound: f64,
    rng: &mut impl Rng,
) -> Result<SymplecticMatrix> {
    if n_modes == 0 {
        return Err(SymplError::InvalidArgument(
            "n_modes must be at least 1".into(),
        ));
    }
    if !(squeeze_bound >= 1.0) {
        return Err(SymplError::InvalidArgument(
            "squeeze_bound must be >= 1".into(),
        ));
    }
    let r = random_orthosymplectic(n_modes, rng);
    let rp = random_orthosymplectic(n_modes, rng);
    let ln = squeeze_bound.ln();
    let mut z = Vector::zeros(2 * n_modes);
    for j in 0..n_modes {
        let u: f64 = rng.random_range(-1.0..=1.0);
        let s = (u * ln).exp();
        z[2 * j] = s;
        z[2 * j + 1] = 1.0 / s;
    }
    Ok(SymplecticMatrix::from_trusted(
        r * Mat::from_diagonal(&z) * rp,
    ))
}

pub fn random_symplectic(
    n_modes: usize,
    seed: u64,
    squeeze_bound: f64,
) -> Result<SymplecticMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_symplectic_rng(n_modes, squeeze_bound, &mut rng)
}

/// Block direct sum of symplectic matrices.
pub fn symplectic_direct_sum(a: &Mat, b: &Mat) -> Mat {
    direct_sum(a, b)
}

/// Two-mode beamsplitter `[[c,0,-s,0],[0,c,0,-s],[s,0,c,0],[0,s,0,c]]`.
pub fn beamsplitter(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_row_slice(
        4,
        4,
        &[
            c, 0.0, -s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, s, 0.0, c,
        ],
    )
}

/// Single-mode squeezer `diag(z, 1/z)`.
pub fn squeezer(z: f64) -> Mat {
    Mat::from_diagonal(&Vector::from_vec(vec![z, 1.0 / z]))
}

/// Single-mode phase rotation.
pub fn rotation(phi: f64) -> Mat {
    let (s, c) = phi.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Error unless `m` is `rows x cols`.
pub(crate) fn check_dim(m: &Mat, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(SymplError::DimensionMismatch(format!(
            "{what}: expected {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_sym(n: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn omega_single_mode() {
        let f = omega(1, ModeOrdering::Interleaved).unwrap();
        assert_eq!(f.matrix, Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn omega_grouped_two_modes() {
        let f = omega(2, ModeOrdering::Grouped).unwrap();
        let mut want = Mat::zeros(4, 4);
        want[(0, 2)] = -1.0;
        want[(1, 3)] = -1.0;
        want[(2, 0)] = 1.0;
        want[(3, 1)] = 1.0;
        assert_eq!(f.matrix, want);
    }

    #[test]
    fn omega_squares_to_minus_identity() {
        for n in 1..5 {
            for o in [ModeOrdering::Interleaved, ModeOrdering::Grouped] {
                let w = omega_in(n, o);
                assert_eq!(&w * &w, -Mat::identity(2 * n, 2 * n));
                assert_eq!(w.transpose(), -&w);
            }
        }
    }

    #[test]
    fn ordering_round_trip() {
        let s = random_symplectic(3, 4, 3.0).unwrap();
        let g = s.to_ordering(ModeOrdering::Grouped);
        assert!(g.residual() < 1e-12);
        let back = g.to_ordering(ModeOrdering::Interleaved);
        assert_eq!(back.matrix(), s.matrix());
    }

    #[test]
    fn beamsplitter_is_symplectic_in_both_orderings() {
        let b = beamsplitter(0.37);
        assert!(is_symplectic_in(&b, ModeOrdering::Grouped, 1e-14).unwrap());
        assert!(is_symplectic(&b, 1e-14).unwrap());
    }

    #[test]
    fn scaled_identity_is_not_symplectic() {
        let d = Mat::identity(4, 4) * 2.0;
        assert!(!is_symplectic(&d, 1e-9).unwrap());
        assert!(is_symplectic(&Mat::identity(4, 4), 1e-15).unwrap());
    }

    #[test]
    fn odd_dimension_is_rejected() {
        assert!(matches!(
            is_symplectic(&Mat::identity(3, 3), 1e-9),
            Err(SymplError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn exp_map_single_mode_squeezer() {
        // e^{ΩHt} for H = [[0,1],[1,0]] is diag(e^{-t}, e^{t})
        let h = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = 0.7;
        let s = exp_map(&h, t).unwrap();
        let want = Mat::from_diagonal(&Vector::from_vec(vec![(-t).exp(), t.exp()]));
        assert!(max_abs(&(s.matrix() - want)) < 1e-13);
    }

    #[test]
    fn exp_map_at_zero_is_identity() {
        let h = rand_sym(6, 1);
        assert!(max_abs(&(exp_map(&h, 0.0).unwrap().matrix() - Mat::identity(6, 6))) < 1e-15);
    }

    #[test]
    fn exp_map_rejects_asymmetric_and_huge() {
        let h = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(exp_map(&h, 1.0), Err(SymplError::NotSymmetric(_))));
        let h = Mat::identity(2, 2);
        assert!(matches!(exp_map(&h, 100.0), Err(SymplError::RangeError(_))));
    }

    #[test]
    fn exp_map_random_is_symplectic() {
        let h = rand_sym(4, 9);
        let s = exp_map(&h, 0.3).unwrap();
        assert!(s.residual() < 1e-12);
    }

    #[test]
    fn cayley_of_zero_is_minus_identity() {
        let m = SpAlgebraElement::new(Mat::zeros(4, 4), 1e-12).unwrap();
        assert_eq!(cayley(&m).unwrap().into_matrix(), -Mat::identity(4, 4));
    }

    #[test]
    fn cayley_single_mode_rotation_generator() {
        let h = Mat::from_diagonal(&Vector::from_vec(vec![0.8, 0.8]));
        let m = SpAlgebraElement::from_hamiltonian(&h).unwrap();
        let s = cayley(&m).unwrap();
        assert!(s.residual() < 1e-14);
        // M = hΩ, so (M + Id/2)^{-1} = (Id/2 - hΩ)/(1/4 + h²)
        let hh = 0.8;
        let d = 0.25 + hh * hh;
        let want = Mat::identity(2, 2) - (Mat::identity(2, 2) * 0.5 - omega_mat(1) * hh) / d;
        assert!(max_abs(&(s.matrix() - want)) < 1e-14);
    }

    #[test]
    fn cayley_round_trip() {
        let h = rand_sym(4, 3);
        let m = SpAlgebraElement::from_hamiltonian(&h).unwrap();
        let s = cayley(&m).unwrap();
        let back = cayley_inverse(s.matrix()).unwrap();
        assert!(max_abs(&(back.matrix() - m.matrix())) < 1e-10);
    }

    #[test]
    fn cayley_singular_shift() {
        // M = -Id/2 is in the algebra only for zero... use a squeezing generator
        // with eigenvalues ±1/2.
        let m = Mat::from_diagonal(&Vector::from_vec(vec![-0.5, 0.5]));
        let m = SpAlgebraElement::new(m, 1e-12).unwrap();
        assert_eq!(cayley(&m), Err(SymplError::SingularShift));
    }

    #[test]
    fn euler_of_identity_and_diagonal() {
        let e = euler_decompose(&Mat::identity(4, 4)).unwrap();
        assert!(max_abs(&(e.reconstruct() - Mat::identity(4, 4))) < 1e-14);
        assert!(max_abs(&(&e.z - Mat::identity(4, 4))) < 1e-14);
        let d = squeezer(2.0);
        let e = euler_decompose(&d).unwrap();
        assert!((e.z[(0, 0)] - 2.0).abs() < 1e-12);
        assert!(max_abs(&(e.reconstruct() - d)) < 1e-14);
    }

    #[test]
    fn euler_random_six_by_six() {
        for seed in 0..20 {
            let s = random_symplectic(3, seed, 5.0).unwrap();
            let e = euler_decompose(s.matrix()).unwrap();
            assert!(max_abs(&(e.reconstruct() - s.matrix())) < 1e-9);
            let id = Mat::identity(6, 6);
            assert!(max_abs(&(&e.r * e.r.transpose() - &id)) < 1e-9);
            assert!(max_abs(&(&e.r_prime * e.r_prime.transpose() - &id)) < 1e-9);
            assert!(symplectic_residual(&e.r).unwrap() < 1e-9);
            assert!(symplectic_residual(&e.r_prime).unwrap() < 1e-9);
            assert!(symplectic_residual(&e.z).unwrap() < 1e-12);
        }
    }

    #[test]
    fn pre_iwasawa_identity_and_orthogonal() {
        let pi = pre_iwasawa(&SymplecticMatrix::identity(2)).unwrap();
        assert!(max_abs(&pi.p) < 1e-14);
        assert!(max_abs(&(&pi.l - Mat::identity(2, 2))) < 1e-14);
        assert!(max_abs(&pi.w) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = SymplecticMatrix::from_trusted(random_orthosymplectic(2, &mut rng));
        let pi = pre_iwasawa(&o).unwrap();
        assert!(max_abs(&pi.p) < 1e-12);
        assert!(max_abs(&(&pi.l - Mat::identity(2, 2))) < 1e-12);
        let g = o.to_ordering(ModeOrdering::Grouped).into_matrix();
        assert!(max_abs(&(&pi.v - g.view((0, 0), (2, 2)))) < 1e-12);
        assert!(max_abs(&(&pi.w - g.view((0, 2), (2, 2)))) < 1e-12);
    }

    #[test]
    fn pre_iwasawa_random_reconstructs() {
        for seed in 0..10 {
            let s = random_symplectic(2, seed, 4.0).unwrap();
            let pi = pre_iwasawa(&s).unwrap();
            let g = s.to_ordering(ModeOrdering::Grouped).into_matrix();
            assert!(max_abs(&(pi.reconstruct() - &g)) < 1e-9);
            let (f1, f2, f3) = pi.factors();
            for f in [f1, f2, f3] {
                assert!(is_symplectic_in(&f, ModeOrdering::Grouped, 1e-9).unwrap());
            }
            assert!(max_abs(&(&pi.p - pi.p.transpose())) < 1e-12);
        }
    }

    #[test]
    fn williamson_identity_and_thermal() {
        let w = williamson(&Mat::identity(4, 4)).unwrap();
        assert!(w.diag.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(max_abs(&(&w.s * w.s.transpose() - Mat::identity(4, 4))) < 1e-12);
        let v = Mat::from_diagonal(&Vector::from_vec(vec![3.0, 3.0, 5.0, 5.0]));
        let w = williamson(&v).unwrap();
        assert!((w.diag[0] - 3.0).abs() < 1e-12 && (w.diag[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn williamson_recovers_constructed_spectrum() {
        let s0 = random_symplectic(3, 17, 3.0).unwrap().into_matrix();
        let d = Mat::from_diagonal(&Vector::from_vec(vec![1.5, 1.5, 2.0, 2.0, 7.0, 7.0]));
        let v = &s0 * &d * s0.transpose();
        let w = williamson(&v).unwrap();
        assert!((w.diag[0] - 1.5).abs() < 1e-9);
        assert!((w.diag[1] - 2.0).abs() < 1e-9);
        assert!((w.diag[2] - 7.0).abs() < 1e-9);
        assert!(symplectic_residual(&w.s).unwrap() < 1e-9);
        assert!(max_abs(&(&w.s * &v * w.s.transpose() - w.diagonal_matrix())) < 1e-9);
    }

    #[test]
    fn williamson_rejects_indefinite() {
        let v = Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert_eq!(williamson(&v).unwrap_err(), SymplError::NotPositiveDefinite);
    }

    #[test]
    fn svd_of_q_plane() {
        // the q-axes of two modes: isotropic column space
        let mut m = Mat::zeros(4, 2);
        m[(0, 0)] = 1.0;
        m[(2, 1)] = 1.0;
        let d = symplectic_svd(&m).unwrap();
        assert!(max_abs(&(d.reconstruct() - &m)) < 1e-12);
        assert!(d.lambda.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(symplectic_residual(&d.s).unwrap() < 1e-12);
    }

    #[test]
    fn svd_single_column_norm() {
        let s0 = random_symplectic(2, 3, 2.0).unwrap().into_matrix();
        let col = s0.columns(0, 1).into_owned();
        let d = symplectic_svd(&col).unwrap();
        assert!((d.lambda[0] - col.norm()).abs() < 1e-12);
        assert!(max_abs(&(d.reconstruct() - &col)) < 1e-12);
    }

    #[test]
    fn svd_random_generic_uses_leading_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = Mat::from_fn(6, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = symplectic_svd(&m).unwrap();
        assert_eq!(d.layout, vec![0, 1]);
        assert!(max_abs(&(d.reconstruct() - &m)) < 1e-10);
        assert!(max_abs(&(&d.q * d.q.transpose() - Mat::identity(2, 2))) < 1e-10);
        assert!(symplectic_residual(&d.s).unwrap() < 1e-9);
    }

    #[test]
    fn svd_rank_deficient() {
        let m = Mat::from_row_slice(4, 2, &[1.0, 2.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            symplectic_svd(&m),
            Err(SymplError::RankDeficient { .. })
        ));
    }

    #[test]
    fn submatrix_of_beamsplitter() {
        let th = 0.4_f64;
        let b = beamsplitter(th);
        let rows = SubspaceBasis::modes(2, &[0]).unwrap();
        let cols = SubspaceBasis::q_plane(2, &[0, 1]).unwrap();
        let sub = submatrix(&b, &rows, &cols).unwrap();
        let want = Mat::from_row_slice(2, 2, &[th.cos(), -th.sin(), 0.0, 0.0]);
        assert!(max_abs(&(sub - want)) < 1e-15);
    }

    #[test]
    fn submatrix_blocks_reassemble() {
        let s = random_symplectic(3, 2, 3.0).unwrap().into_matrix();
        let a = SubspaceBasis::modes(3, &[0]).unwrap();
        let b = SubspaceBasis::modes(3, &[1, 2]).unwrap();
        let mut out = Mat::zeros(6, 6);
        for r in [&a, &b] {
            for c in [&a, &b] {
                let blk = submatrix(&s, r, c).unwrap();
                out += &r.f * blk * c.f.transpose();
            }
        }
        assert!(max_abs(&(out - &s)) < 1e-14);
        let full = SubspaceBasis::full(3);
        assert_eq!(submatrix(&s, &full, &full).unwrap(), s);
    }

    #[test]
    fn subspace_classification() {
        assert_eq!(
            SubspaceBasis::q_plane(2, &[0, 1]).unwrap().kind,
            SubspaceKind::Lagrangian
        );
        assert_eq!(
            SubspaceBasis::q_plane(3, &[0]).unwrap().kind,
            SubspaceKind::Isotropic
        );
        assert_eq!(
            SubspaceBasis::modes(3, &[1]).unwrap().kind,
            SubspaceKind::Symplectic
        );
        assert_eq!(
            SubspaceBasis::coordinates(2, &[0, 1, 2]).unwrap().kind,
            SubspaceKind::General
        );
        let c = SubspaceBasis::q_plane(2, &[1]).unwrap().conjugate();
        assert_eq!(
            c.f.column(0).iter().cloned().collect::<Vec<_>>(),
            vec![0.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn inverse_matches_lu() {
        let s = random_symplectic(2, 11, 3.0).unwrap().into_matrix();
        let a = inverse(&s).unwrap();
        let b = s.clone().try_inverse().unwrap();
        assert!(max_abs(&(&a - &b)) < 1e-10);
        assert!(max_abs(&(&s * &a - Mat::identity(4, 4))) < 1e-11);
        let z = squeezer(2.0);
        assert_eq!(inverse(&z).unwrap(), squeezer(0.5));
    }

    #[test]
    fn random_symplectic_properties() {
        let a = random_symplectic(2, 42, 4.0).unwrap();
        let b = random_symplectic(2, 42, 4.0).unwrap();
        assert_eq!(a, b);
        assert!(a.residual() < 1e-12);
        let e = euler_decompose(a.matrix()).unwrap();
        assert!(e
            .squeezing()
            .iter()
            .all(|&z| (0.25 - 1e-9..=4.0 + 1e-9).contains(&z)));
        let o = random_symplectic(1, 7, 1.0).unwrap().into_matrix();
        assert!(max_abs(&(&o * o.transpose() - Mat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let a = random_symplectic(2, 1, 2.0).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with("{\"n_modes\":2,\"ordering\":\"interleaved\",\"data\":["));
        let b: SymplecticMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refine_removes_small_defects() {
        let s = random_symplectic(3, 5, 3.0).unwrap().interleaved();
        let noisy = &s + rand_sym(6, 9) * 1e-7;
        assert!(symplectic_residual(&noisy).unwrap() > 1e-8);
        let fixed = refine(&noisy).unwrap();
        assert!(symplectic_residual(&fixed).unwrap() < 1e-13);
        assert!(max_abs(&(&fixed - &s)) < 1e-5);
    }
}
