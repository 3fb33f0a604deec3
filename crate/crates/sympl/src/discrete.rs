//! Exact symplectic arithmetic over `Z/dZ` for qudit Clifford circuits.
//!
//! Conventions, all checked against dense clock/shift matrices in [`dense`]:
//! * a label `u = (q1, p1, ..., qN, pN)` names `D(u) = ⊗ X^{q_j} Z^{p_j}`;
//! * `σ(u, v) = Σ q_j v_{p,j} - p_j v_{q,j}`, and `D(u) D(v) = ω^{-σ(u,v)} D(v) D(u)`;
//! * a Clifford `U` with matrix `S` acts as `U D(v) U† ∝ D(S v)`, so a circuit
//!   `g1, g2, ..., gk` (in time order) has matrix `S_k ⋯ S_2 S_1`.
//!
//! Nothing here uses floating point except the [`dense`] reference operators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SymplError};

/// A matrix with entries in `Z/dZ`, stored row-major and always reduced.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ModMatrixRepr", into = "ModMatrixRepr")]
pub struct ModMatrix {
    modulus: u64,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct ModMatrixRepr {
    modulus: u64,
    rows: Vec<Vec<i64>>,
}

impl TryFrom<ModMatrixRepr> for ModMatrix {
    type Error = SymplError;
    fn try_from(r: ModMatrixRepr) -> Result<Self> {
        let rows: Vec<&[i64]> = r.rows.iter().map(|v| v.as_slice()).collect();
        ModMatrix::from_rows(r.modulus, &rows)
    }
}

impl From<ModMatrix> for ModMatrixRepr {
    fn from(m: ModMatrix) -> Self {
        ModMatrixRepr {
            modulus: m.modulus,
            rows: (0..m.rows)
                .map(|i| m.row(i).iter().map(|&x| x as i64).collect())
                .collect(),
        }
    }
}

fn check_modulus(d: u64) -> Result<()> {
    if d < 2 {
        return Err(SymplError::InvalidArgument(format!(
            "modulus must be >= 2, got {d}"
        )));
    }
    if d > u32::MAX as u64 {
        return Err(SymplError::InvalidArgument(format!(
            "modulus {d} is too large"
        )));
    }
    Ok(())
}

fn reduce(x: i64, d: u64) -> u64 {
    x.rem_euclid(d as i64) as u64
}

impl ModMatrix {
    pub fn zeros(modulus: u64, rows: usize, cols: usize) -> Result<Self> {
        check_modulus(modulus)?;
        Ok(Self {
            modulus,
            rows,
            cols,
            data: vec![0; rows * cols],
        })
    }

    pub fn identity(n: usize, modulus: u64) -> Result<Self> {
        let mut m = Self::zeros(modulus, n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        Ok(m)
    }

    /// Build from signed rows; entries are reduced into `0..d`.
    pub fn from_rows(modulus: u64, rows: &[&[i64]]) -> Result<Self> {
        check_modulus(modulus)?;
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SymplError::DimensionMismatch("ragged rows".into()));
        }
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| reduce(x, modulus)))
            .collect();
        Ok(Self {
            modulus,
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: i64) {
        self.data[i * self.cols + j] = reduce(x, self.modulus);
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ModVector {
        ModVector {
            modulus: self.modulus,
            data: (0..self.rows).map(|i| self.get(i, j)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self {
            modulus: self.modulus,
            rows: self.cols,
            cols: self.rows,
            data: vec![0; self.data.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        if self.cols != other.rows {
            return Err(SymplError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let d = self.modulus as u128;
        let mut out = Self {
            modulus: self.modulus,
            rows: self.rows,
            cols: other.cols,
            data: vec![0; self.rows * other.cols],
        };
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u128;
                for k in 0..self.cols {
                    acc = (acc + self.get(i, k) as u128 * other.get(k, j) as u128) % d;
                }
                out.data[i * other.cols + j] = acc as u64;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &ModVector) -> Result<ModVector> {
        let col = ModMatrix {
            modulus: v.modulus,
            rows: v.data.len(),
            cols: 1,
            data: v.data.clone(),
        };
        Ok(self.mul(&col)?.column(0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + (other.modulus - b))
    }

    pub fn neg(&self) -> Self {
        let d = self.modulus;
        Self {
            data: self.data.iter().map(|&x| (d - x) % d).collect(),
            ..self.clone()
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.same_modulus(other)?;
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(SymplError::DimensionMismatch("shape mismatch".into()));
        }
        let d = self.modulus;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b) % d)
            .collect();
        Ok(Self {
            data,
            ..self.clone()
        })
    }

    fn same_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(SymplError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(())
    }

    /// Entries at the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self {
            modulus: self.modulus,
            rows: rows.len(),
            cols: cols.len(),
            data: Vec::with_capacity(rows.len() * cols.len()),
        };
        for &i in rows {
            for &j in cols {
                out.data.push(self.get(i, j));
            }
        }
        out
    }

    /// Reduce into `Z/mZ` for a divisor `m` of the modulus.
    pub fn reduce_mod(&self, m: u64) -> Result<Self> {
        check_modulus(m)?;
        if !self.modulus.is_multiple_of(m) {
            return Err(SymplError::InvalidArgument(format!(
                "{m} does not divide {}",
                self.modulus
            )));
        }
        Ok(Self {
            modulus: m,
            data: self.data.iter().map(|x| x % m).collect(),
            ..self.clone()
        })
    }

    /// Exact inverse, by unit-pivot elimination on each prime-power factor.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(SymplError::DimensionMismatch(
                "inverse of a non-square matrix".into(),
            ));
        }
        let crt = crt_split(self.modulus)?;
        let mut parts = Vec::with_capacity(crt.moduli.len());
        for &m in &crt.moduli {
            parts.push(
                gauss_jordan_local(&self.reduce_mod(m)?)
                    .ok_or(SymplError::NonInvertibleBlock(self.modulus))?,
            );
        }
        crt.combine_matrices(&parts)
    }
}

impl fmt::Display for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Elimination over `Z/p^r` where a pivot must be a unit (not divisible by `p`).
fn gauss_jordan_local(m: &ModMatrix) -> Option<ModMatrix> {
    let n = m.rows;
    let d = m.modulus;
    let mut a: Vec<Vec<u64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<u64>> = (0..n)
        .map(|i| (0..n).map(|j| u64::from(i == j)).collect())
        .collect();
    let mulm = |x: u64, y: u64| ((x as u128 * y as u128) % d as u128) as u64;
    for col in 0..n {
        let piv = (col..n).find(|&r| inv_mod(a[r][col], d).is_some())?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let s = inv_mod(a[col][col], d)?;
        for j in 0..n {
            a[col][j] = mulm(a[col][j], s);
            inv[col][j] = mulm(inv[col][j], s);
        }
        for r in 0..n {
            if r != col && a[r][col] != 0 {
                let f = a[r][col];
                for j in 0..n {
                    a[r][j] = (a[r][j] + d - mulm(f, a[col][j])) % d;
                    inv[r][j] = (inv[r][j] + d - mulm(f, inv[col][j])) % d;
                }
            }
        }
    }
    Some(ModMatrix {
        modulus: d,
        rows: n,
        cols: n,
        data: inv.into_iter().flatten().collect(),
    })
}

/// A vector over `Z/dZ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModVector {
    pub modulus: u64,
    pub data: Vec<u64>,
}

impl ModVector {
    pub fn new(modulus: u64, entries: &[i64]) -> Result<Self> {
        check_modulus(modulus)?;
        Ok(Self {
            modulus,
            data: entries.iter().map(|&x| reduce(x, modulus)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reduce_mod(&self, m: u64) -> Self {
        Self {
            modulus: m,
            data: self.data.iter().map(|x| x % m).collect(),
        }
    }
}

/// `σ(u, v) = Σ u_{q,j} v_{p,j} - u_{p,j} v_{q,j} mod d` on interleaved labels.
pub fn pauli_phase(u: &ModVector, v: &ModVector) -> Result<u64> {
    if u.modulus != v.modulus {
        return Err(SymplError::ModulusMismatch(u.modulus, v.modulus));
    }
    if u.len() != v.len() || !u.len().is_multiple_of(2) {
        return Err(SymplError::DimensionMismatch(format!(
            "labels of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let d = u.modulus as u128;
    let mut acc = 0u128;
    for j in 0..u.len() / 2 {
        let (uq, up) = (u.data[2 * j] as u128, u.data[2 * j + 1] as u128);
        let (vq, vp) = (v.data[2 * j] as u128, v.data[2 * j + 1] as u128);
        acc = (acc + uq * vp % d + d - up * vq % d) % d;
    }
    Ok(acc as u64)
}

/// The Gram matrix `J` of `σ` on `n` qudits: `J_{q,p} = 1`, `J_{p,q} = -1`.
pub fn symplectic_form(n: usize, modulus: u64) -> Result<ModMatrix> {
    let mut j = ModMatrix::zeros(modulus, 2 * n, 2 * n)?;
    for k in 0..n {
        j.set(2 * k, 2 * k + 1, 1);
        j.set(2 * k + 1, 2 * k, -1);
    }
    Ok(j)
}

/// Modular inverse of `a` in `Z/mZ`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

/// Prime factorization `d = Π p^r`, primes ascending.
pub fn factorize(mut d: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= d {
        if d.is_multiple_of(p) {
            let mut r = 0;
            while d.is_multiple_of(p) {
                d /= p;
                r += 1;
            }
            out.push((p, r));
        }
        p += 1;
    }
    if d > 1 {
        out.push((d, 1));
    }
    out
}

pub fn is_prime(d: u64) -> bool {
    d >= 2 && factorize(d) == vec![(d, 1)]
}

/// `Z/dZ ≅ Π Z/n_lZ` over the prime-power factors `n_l` of `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrtRep {
    pub modulus: u64,
    pub moduli: Vec<u64>,
    /// `(p, r)` with `n_l = p^r`.
    pub factors: Vec<(u64, u32)>,
}

pub fn crt_split(d: u64) -> Result<CrtRep> {
    check_modulus(d)?;
    let factors = factorize(d);
    let moduli = factors.iter().map(|&(p, r)| p.pow(r)).collect();
    Ok(CrtRep {
        modulus: d,
        moduli,
        factors,
    })
}

impl CrtRep {
    pub fn split(&self, x: u64) -> Vec<u64> {
        self.moduli.iter().map(|m| x % m).collect()
    }

    /// The unique `x mod d` with the given residues.
    pub fn combine(&self, residues: &[u64]) -> Result<u64> {
        if residues.len() != self.moduli.len() {
            return Err(SymplError::DimensionMismatch("residue count".into()));
        }
        let d = self.modulus as u128;
        let mut x = 0u128;
        for (&a, &m) in residues.iter().zip(&self.moduli) {
            let rest = self.modulus / m;
            let inv = inv_mod(rest % m, m).expect("CRT factors are coprime") as u128;
            x = (x + (a % m) as u128 * rest as u128 % d * inv) % d;
        }
        Ok(x as u64)
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.moduli)
            .map(|((x, y), m)| (x + y) % m)
            .collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.moduli)
            .map(|((x, y), m)| x * y % m)
            .collect()
    }

    pub fn split_matrix(&self, s: &ModMatrix) -> Result<Vec<ModMatrix>> {
        self.moduli.iter().map(|&m| s.reduce_mod(m)).collect()
    }

    pub fn combine_matrices(&self, parts: &[ModMatrix]) -> Result<ModMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| SymplError::InvalidArgument("no components".into()))?;
        let mut out = ModMatrix::zeros(self.modulus, first.rows, first.cols)?;
        for idx in 0..out.data.len() {
            let residues: Vec<u64> = parts.iter().map(|p| p.data[idx]).collect();
            out.data[idx] = self.combine(&residues)?;
        }
        Ok(out)
    }
}

/// A polynomial over `F_p`, untruncated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpPoly {
    pub p: u64,
    /// `coeffs[j]` multiplies `x^j`; trailing zeros are trimmed.
    pub coeffs: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, coeffs: &[u64]) -> Self {
        let mut c: Vec<u64> = coeffs.iter().map(|a| a % p).collect();
        while c.last() == Some(&0) {
            c.pop();
        }
        Self { p, coeffs: c }
    }

    pub fn zero(p: u64) -> Self {
        Self {
            p,
            coeffs: Vec::new(),
        }
    }

    pub fn coeff(&self, j: usize) -> u64 {
        self.coeffs.get(j).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let c: Vec<u64> = (0..n).map(|j| self.coeff(j) + o.coeff(j)).collect();
        Self::new(self.p, &c)
    }

    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let c: Vec<u64> = (0..n)
            .map(|j| self.coeff(j) + self.p - o.coeff(j))
            .collect();
        Self::new(self.p, &c)
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.p);
        }
        let mut c = vec![0u64; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] = (c[i + j] + a * b) % self.p;
            }
        }
        Self::new(self.p, &c)
    }

    /// Formal derivative `d(Σ a_j x^j) = Σ j a_j x^{j-1}`.
    pub fn derivative(&self) -> Self {
        let c: Vec<u64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, a)| (j as u64 % self.p) * a)
            .collect();
        Self::new(self.p, &c)
    }

    /// Image in `F_p[x]/(x^r)`.
    pub fn truncate(&self, r: usize) -> LocalRingElement {
        let c: Vec<u64> = (0..r).map(|j| self.coeff(j)).collect();
        LocalRingElement {
            p: self.p,
            coeffs: c,
        }
    }
}

/// An element `Σ a_j x^j` of `F_p[x]/(x^r)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalRingElement {
    pub p: u64,
    /// Exactly `r` coefficients.
    pub coeffs: Vec<u64>,
}

impl LocalRingElement {
    /// Base-`p` digits of `x mod p^r`: `Σ a_j p^j ↦ Σ a_j x^j`.
    pub fn from_integer(x: u64, p: u64, r: u32) -> Self {
        let mut x = x % p.pow(r);
        let mut c = Vec::with_capacity(r as usize);
        for _ in 0..r {
            c.push(x % p);
            x /= p;
        }
        Self { p, coeffs: c }
    }

    pub fn to_integer(&self) -> u64 {
        self.coeffs.iter().rev().fold(0, |acc, a| acc * self.p + a)
    }

    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    pub fn lift(&self) -> FpPoly {
        FpPoly::new(self.p, &self.coeffs)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.lift().add(&o.lift()).truncate(self.r())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.lift().mul(&o.lift()).truncate(self.r())
    }

    /// The value at the maximal ideal, `a_0`.
    pub fn at_p(&self) -> u64 {
        self.coeffs.first().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0)
    }
}

/// `d^l b`, differentiated in `F_p[x]` and then mapped to `F_p[x]/(x^r)`.
pub fn ring_diff(b: &FpPoly, l: usize, r: usize) -> LocalRingElement {
    let mut f = b.clone();
    for _ in 0..l {
        f = f.derivative();
    }
    f.truncate(r)
}

/// `σ(u, v)` of two vectors over `F_p[x]/(x^r)`, computed in `F_p[x]`.
pub fn sigma_lifted(u: &[LocalRingElement], v: &[LocalRingElement]) -> FpPoly {
    let p = u[0].p;
    let mut acc = FpPoly::zero(p);
    for j in 0..u.len() / 2 {
        let a = u[2 * j].lift().mul(&v[2 * j + 1].lift());
        let b = u[2 * j + 1].lift().mul(&v[2 * j].lift());
        acc = acc.add(&a).sub(&b);
    }
    acc
}

fn local_column(s: &ModMatrix, j: usize, p: u64, r: u32) -> Vec<LocalRingElement> {
    (0..s.rows)
        .map(|i| LocalRingElement::from_integer(s.get(i, j), p, r))
        .collect()
}

fn shift(v: &[LocalRingElement], a: usize) -> Vec<LocalRingElement> {
    let mut x = vec![0u64; a + 1];
    x[a] = 1;
    let xa = FpPoly::new(v[0].p, &x);
    v.iter()
        .map(|e| xa.mul(&e.lift()).truncate(e.r()))
        .collect()
}

fn unit(dim: usize, i: usize, p: u64, r: u32) -> Vec<LocalRingElement> {
    (0..dim)
        .map(|k| LocalRingElement::from_integer(u64::from(k == i), p, r))
        .collect()
}

/// Orders `l` at which `(d^l σ(Su, Sv))_p = (d^l σ(u, v))_p` fails, over
/// the `F_p`-basis `{x^a e_i}` of the module.
pub fn differential_failures(s: &ModMatrix, p: u64, r: u32) -> Vec<usize> {
    let dim = s.rows;
    let ru = r as usize;
    let mut bad = vec![false; ru];
    let images: Vec<Vec<LocalRingElement>> = (0..dim).map(|j| local_column(s, j, p, r)).collect();
    for i in 0..dim {
        for k in 0..dim {
            for a in 0..ru {
                for b in 0..ru {
                    let lhs = sigma_lifted(&shift(&images[i], a), &shift(&images[k], b));
                    let rhs = sigma_lifted(
                        &shift(&unit(dim, i, p, r), a),
                        &shift(&unit(dim, k, p, r), b),
                    );
                    for (l, flag) in bad.iter_mut().enumerate() {
                        if ring_diff(&lhs, l, ru).at_p() != ring_diff(&rhs, l, ru).at_p() {
                            *flag = true;
                        }
                    }
                }
            }
        }
    }
    bad.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(l, _)| l)
        .collect()
}

/// Per-factor verdict of [`dv_symplectic_report`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorVerdict {
    pub modulus: u64,
    pub prime: u64,
    pub exponent: u32,
    /// `SᵗJS ≡ J` modulo this factor.
    pub congruence: bool,
    /// Orders `l` whose digit-ring differential condition fails. Always empty
    /// for prime factors. Diagnostic only: the digit map `Z/p^r → F_p[x]/(x^r)`
    /// is not multiplicative, so these disagree with the congruence.
    pub differential_failures: Vec<usize>,
}

impl FactorVerdict {
    pub fn ok(&self) -> bool {
        self.congruence
    }
}

/// Symplectic membership, factor by factor over the CRT split of `d`.
pub fn dv_symplectic_report(s: &ModMatrix) -> Result<Vec<FactorVerdict>> {
    if s.rows != s.cols || !s.rows.is_multiple_of(2) {
        return Err(SymplError::DimensionMismatch(format!(
            "{}x{} is not even square",
            s.rows, s.cols
        )));
    }
    let crt = crt_split(s.modulus)?;
    let mut out = Vec::new();
    for (&(p, r), &m) in crt.factors.iter().zip(&crt.moduli) {
        let sm = s.reduce_mod(m)?;
        let j = symplectic_form(s.rows / 2, m)?;
        let congruence = sm.transpose().mul(&j)?.mul(&sm)? == j;
        let differential_failures = if r == 1 {
            vec![]
        } else {
            differential_failures(&sm, p, r)
        };
        out.push(FactorVerdict {
            modulus: m,
            prime: p,
            exponent: r,
            congruence,
            differential_failures,
        });
    }
    Ok(out)
}

pub fn is_dv_symplectic(s: &ModMatrix) -> bool {
    dv_symplectic_report(s)
        .map(|v| v.iter().all(FactorVerdict::ok))
        .unwrap_or(false)
}

/// A matrix that passed [`is_dv_symplectic`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DvSymplecticMatrix {
    s: ModMatrix,
}

impl DvSymplecticMatrix {
    pub fn new(s: ModMatrix) -> Result<Self> {
        if !is_dv_symplectic(&s) {
            return Err(SymplError::InvalidArgument(format!(
                "matrix is not symplectic modulo {}",
                s.modulus
            )));
        }
        Ok(Self { s })
    }

    pub fn identity(n_qudits: usize, modulus: u64) -> Result<Self> {
        Ok(Self {
            s: ModMatrix::identity(2 * n_qudits, modulus)?,
        })
    }

    pub fn matrix(&self) -> &ModMatrix {
        &self.s
    }

    pub fn n_qudits(&self) -> usize {
        self.s.rows / 2
    }

    pub fn modulus(&self) -> u64 {
        self.s.modulus
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            s: self.s.mul(&other.s)?,
        })
    }

    /// `S⁻¹ = -J Sᵗ J`.
    pub fn inverse(&self) -> Result<Self> {
        let j = symplectic_form(self.n_qudits(), self.s.modulus)?;
        Ok(Self {
            s: j.mul(&self.s.transpose())?.mul(&j)?.neg(),
        })
    }
}

/// A Clifford gate. `H`/`Fourier` and `CNOT`/`Sum` are the same gates;
/// the qubit names are kept for readability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H {
        qudit: usize,
    },
    Fourier {
        qudit: usize,
    },
    Phase {
        qudit: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Sum {
        control: usize,
        target: usize,
    },
    Multiply {
        qudit: usize,
        factor: u64,
    },
    /// `images[k]` is the label of `U D(e_k) U†` restricted to `qudits`.
    Custom {
        qudits: Vec<usize>,
        images: Vec<Vec<i64>>,
    },
}

impl Gate {
    /// Parse `"H 0"`, `"CNOT 0 1"`, `"SUM 1 2"`, `"F 0"`, `"P 0"`, `"MUL 0 2"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut it = s.split_whitespace();
        let name = it.next().unwrap_or("").to_ascii_uppercase();
        let args: Vec<usize> = it
            .map(|a| {
                a.parse()
                    .map_err(|_| SymplError::InvalidArgument(format!("bad gate argument in {s:?}")))
            })
            .collect::<Result<_>>()?;
        let need = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(SymplError::InvalidArgument(format!(
                    "{name} takes {k} arguments"
                )))
            }
        };
        match name.as_str() {
            "H" => need(1).map(|_| Gate::H { qudit: args[0] }),
            "F" | "FOURIER" => need(1).map(|_| Gate::Fourier { qudit: args[0] }),
            "P" | "S" | "PHASE" => need(1).map(|_| Gate::Phase { qudit: args[0] }),
            "CNOT" | "CX" => need(2).map(|_| Gate::Cnot {
                control: args[0],
                target: args[1],
            }),
            "SUM" => need(2).map(|_| Gate::Sum {
                control: args[0],
                target: args[1],
            }),
            "MUL" | "MULTIPLY" => need(2).map(|_| Gate::Multiply {
                qudit: args[0],
                factor: args[1] as u64,
            }),
            _ => Err(SymplError::UnknownGate(name)),
        }
    }

    pub fn qudits(&self) -> Vec<usize> {
        match self {
            Gate::H { qudit }
            | Gate::Fourier { qudit }
            | Gate::Phase { qudit }
            | Gate::Multiply { qudit, .. } => {
                vec![*qudit]
            }
            Gate::Cnot { control, target } | Gate::Sum { control, target } => {
                vec![*control, *target]
            }
            Gate::Custom { qudits, .. } => qudits.clone(),
        }
    }

    /// The gate's matrix on its own qudits.
    fn local(&self, d: u64) -> Result<ModMatrix> {
        let di = d as i64;
        match self {
            Gate::H { .. } | Gate::Fourier { .. } => ModMatrix::from_rows(d, &[&[0, -1], &[1, 0]]),
            Gate::Phase { .. } => ModMatrix::from_rows(d, &[&[1, 0], &[1, 1]]),
            Gate::Cnot { .. } | Gate::Sum { .. } => ModMatrix::from_rows(
                d,
                &[&[1, 0, 0, 0], &[0, 1, 0, -1], &[1, 0, 1, 0], &[0, 0, 0, 1]],
            ),
            Gate::Multiply { factor, .. } => {
                let inv = inv_mod(*factor, d).ok_or_else(|| {
                    SymplError::InvalidArgument(format!("{factor} is not a unit modulo {d}"))
                })?;
                ModMatrix::from_rows(d, &[&[(*factor % d) as i64, 0], &[0, inv as i64]])
            }
            Gate::Custom { qudits, images } => {
                let k = 2 * qudits.len();
                if images.len() != k || images.iter().any(|c| c.len() != k) {
                    return Err(SymplError::DimensionMismatch(format!(
                        "custom gate on {} qudits needs {k} images of length {k}",
                        qudits.len()
                    )));
                }
                let mut m = ModMatrix::zeros(d, k, k)?;
                for (j, img) in images.iter().enumerate() {
                    for (i, &x) in img.iter().enumerate() {
                        m.set(i, j, x.rem_euclid(di));
                    }
                }
                Ok(m)
            }
        }
    }
}

/// Matrix of `gate` on `n` qudits, identity elsewhere.
pub fn gate_to_symplectic(gate: &Gate, n: usize, d: u64) -> Result<DvSymplecticMatrix> {
    let qs = gate.qudits();
    if let Some(&q) = qs.iter().find(|&&q| q >= n) {
        return Err(SymplError::InvalidArgument(format!(
            "qudit {q} out of range for {n} qudits"
        )));
    }
    let mut sorted = qs.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != qs.len() {
        return Err(SymplError::InvalidArgument(
            "gate acts twice on one qudit".into(),
        ));
    }
    let local = gate.local(d)?;
    let idx: Vec<usize> = qs.iter().flat_map(|&q| [2 * q, 2 * q + 1]).collect();
    let mut s = ModMatrix::identity(2 * n, d)?;
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            s.set(i, j, local.get(a, b) as i64);
        }
    }
    if let Gate::Custom { .. } = gate {
        return DvSymplecticMatrix::new(s);
    }
    Ok(DvSymplecticMatrix { s })
}

/// A gate list in time order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qudits: usize,
    pub modulus: u64,
    pub gates: Vec<Gate>,
}

/// `S_k ⋯ S_1` for gates `g_1, ..., g_k` in time order.
pub fn circuit_compose(c: &Circuit) -> Result<DvSymplecticMatrix> {
    let mut s = DvSymplecticMatrix::identity(c.n_qudits, c.modulus)?;
    for g in &c.gates {
        s = gate_to_symplectic(g, c.n_qudits, c.modulus)?.compose(&s)?;
    }
    Ok(s)
}

/// Preparation or measurement basis of one qudit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Computational basis, eigenstates of `Z`.
    Z,
    /// Fourier basis, eigenstates of `X`.
    X,
}

/// Roles of the qudits in a teleportation-style circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DvPartition {
    pub n_qudits: usize,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    /// Ancillas and the basis each one is prepared in.
    pub ancilla: Vec<(usize, Basis)>,
    /// Measured qudits, in syndrome order, with their measurement basis.
    pub measured: Vec<(usize, Basis)>,
}

impl DvPartition {
    fn validate(&self) -> Result<()> {
        let all = self
            .input
            .iter()
            .chain(&self.output)
            .chain(self.ancilla.iter().map(|a| &a.0))
            .chain(self.measured.iter().map(|m| &m.0));
        if let Some(q) = all.into_iter().find(|&&q| q >= self.n_qudits) {
            return Err(SymplError::InvalidArgument(format!(
                "qudit {q} out of range"
            )));
        }
        if self.input.len() != self.output.len() {
            return Err(SymplError::DimensionMismatch(
                "input and output sizes differ".into(),
            ));
        }
        if self.ancilla.len() != self.measured.len() {
            return Err(SymplError::DimensionMismatch(
                "one measurement per ancilla is required".into(),
            ));
        }
        Ok(())
    }

    fn full(qs: &[usize]) -> Vec<usize> {
        qs.iter().flat_map(|&q| [2 * q, 2 * q + 1]).collect()
    }

    pub fn in_coords(&self) -> Vec<usize> {
        Self::full(&self.input)
    }

    pub fn out_coords(&self) -> Vec<usize> {
        Self::full(&self.output)
    }

    /// Ancilla coordinate left free by the preparation: `p` for `Z`, `q` for `X`.
    pub fn zprime_coords(&self) -> Vec<usize> {
        self.ancilla
            .iter()
            .map(|&(q, b)| if b == Basis::Z { 2 * q + 1 } else { 2 * q })
            .collect()
    }

    /// Coordinate read by each measurement: `q` for `Z`, `p` for `X`.
    pub fn h_coords(&self) -> Vec<usize> {
        self.measured
            .iter()
            .map(|&(q, b)| if b == Basis::Z { 2 * q } else { 2 * q + 1 })
            .collect()
    }
}

/// Result of [`dv_teleport_transform`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DvTeleport {
    pub s_out_in: ModMatrix,
    pub s_out_zp: ModMatrix,
    pub s_h_zp: ModMatrix,
    pub s_h_in: ModMatrix,
    /// `S̃ = S_out,in - S_out,z' S_h,z'⁻¹ S_h,in`.
    pub s_tilde: ModMatrix,
    /// `F⋆ = S_out,z' S_h,z'⁻¹`.
    pub f_star: ModMatrix,
}

pub fn dv_teleport_transform(s: &ModMatrix, partition: &DvPartition) -> Result<DvTeleport> {
    partition.validate()?;
    if s.rows != 2 * partition.n_qudits || s.cols != s.rows {
        return Err(SymplError::DimensionMismatch(format!(
            "S is {}x{}, partition has {} qudits",
            s.rows, s.cols, partition.n_qudits
        )));
    }
    let (inn, out, zp, h) = (
        partition.in_coords(),
        partition.out_coords(),
        partition.zprime_coords(),
        partition.h_coords(),
    );
    let s_out_in = s.select(&out, &inn);
    let s_out_zp = s.select(&out, &zp);
    let s_h_zp = s.select(&h, &zp);
    let s_h_in = s.select(&h, &inn);
    let inv = s_h_zp.inverse()?;
    let f_star = s_out_zp.mul(&inv)?;
    let s_tilde = s_out_in.sub(&f_star.mul(&s_h_in)?)?;
    Ok(DvTeleport {
        s_out_in,
        s_out_zp,
        s_h_zp,
        s_h_in,
        s_tilde,
        f_star,
    })
}

/// One row of the feedforward table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedforwardEntry {
    /// Measurement outcomes, in `DvPartition::measured` order.
    pub syndrome: Vec<u64>,
    /// Label `c = -F⋆ m` of the correction `D(c)` on the output qudits.
    pub correction: Vec<u64>,
    pub pauli: String,
}

/// Corrections for every syndrome. Afterwards the output holds `U_S̃` applied
/// to the input.
pub fn feedforward_table(f_star: &ModMatrix) -> Result<Vec<FeedforwardEntry>> {
    let d = f_star.modulus;
    let k = f_star.cols;
    let count = (d as usize)
        .checked_pow(k as u32)
        .filter(|&c| c <= 1 << 16)
        .ok_or_else(|| SymplError::InvalidArgument("feedforward table too large".into()))?;
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut m = vec![0i64; k];
        let mut rest = idx;
        for j in (0..k).rev() {
            m[j] = (rest % d as usize) as i64;
            rest /= d as usize;
        }
        let c = f_star.mul_vec(&ModVector::new(d, &m)?)?;
        let neg: Vec<u64> = c.data.iter().map(|&x| (d - x) % d).collect();
        out.push(FeedforwardEntry {
            syndrome: m.iter().map(|&x| x as u64).collect(),
            pauli: pauli_string(&neg, d),
            correction: neg,
        });
    }
    Ok(out)
}

/// Human-readable `D(u)`, e.g. `"X Z"` or `"X^2 I"`.
pub fn pauli_string(u: &[u64], d: u64) -> String {
    let pow = |name: &str, e: u64| match e % d {
        0 => String::new(),
        1 => name.to_string(),
        e => format!("{name}^{e}"),
    };
    u.chunks(2)
        .map(|c| {
            let s = pow("X", c[0]) + &pow("Z", c[1]);
            if s.is_empty() {
                "I".to_string()
            } else {
                s
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per-factor data of [`dv_symplectic_basis_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisComponent {
    pub modulus: u64,
    pub gram: ModMatrix,
    /// Gram matrix equals the standard form modulo this factor.
    pub ok: bool,
    /// Digit-ring differentials `d^l σ`, `l ≥ 1`, all vanish at `p`.
    /// Diagnostic only, see [`FactorVerdict::differential_failures`].
    pub differentials_vanish: bool,
}

/// Certificate returned by [`dv_symplectic_basis_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCheck {
    pub is_basis: bool,
    /// `σ(b_i, b_j)` modulo `d`.
    pub gram: ModMatrix,
    pub components: Vec<BasisComponent>,
}

/// Check `{e_1..e_N, f_1..f_N}` (in that order) on every CRT factor: all
/// pairings `e/e`, `f/f` and `e/f` must take their standard values.
pub fn dv_symplectic_basis_check(vectors: &[ModVector]) -> Result<BasisCheck> {
    let first = vectors
        .first()
        .ok_or_else(|| SymplError::InvalidArgument("empty basis".into()))?;
    let d = first.modulus;
    let dim = first.len();
    if dim % 2 != 0
        || vectors.len() != dim
        || vectors.iter().any(|v| v.len() != dim || v.modulus != d)
    {
        return Err(SymplError::DimensionMismatch(format!(
            "need {dim} vectors of length {dim} mod {d}"
        )));
    }
    let n = dim / 2;
    let target = |i: usize, j: usize| -> i64 {
        match (i < n, j < n) {
            (true, false) if j - n == i => 1,
            (false, true) if i - n == j => -1,
            _ => 0,
        }
    };
    let gram_of = |vs: &[ModVector], m: u64| -> Result<ModMatrix> {
        let mut g = ModMatrix::zeros(m, dim, dim)?;
        for i in 0..dim {
            for j in 0..dim {
                g.set(i, j, pauli_phase(&vs[i], &vs[j])? as i64);
            }
        }
        Ok(g)
    };
    let gram = gram_of(vectors, d)?;
    let crt = crt_split(d)?;
    let mut components = Vec::new();
    for (&(p, r), &m) in crt.factors.iter().zip(&crt.moduli) {
        let vs: Vec<ModVector> = vectors.iter().map(|v| v.reduce_mod(m)).collect();
        let g = gram_of(&vs, m)?;
        let ok = (0..dim).all(|i| (0..dim).all(|j| g.get(i, j) == reduce(target(i, j), m)));
        let local: Vec<Vec<LocalRingElement>> = vs
            .iter()
            .map(|v| {
                v.data
                    .iter()
                    .map(|&x| LocalRingElement::from_integer(x, p, r))
                    .collect()
            })
            .collect();
        let differentials_vanish = (0..dim).all(|i| {
            (0..dim).all(|j| {
                let s = sigma_lifted(&local[i], &local[j]);
                (1..r as usize).all(|l| ring_diff(&s, l, r as usize).at_p() == 0)
            })
        });
        components.push(BasisComponent {
            modulus: m,
            gram: g,
            ok,
            differentials_vanish,
        });
    }
    let is_basis = components.iter().all(|c| c.ok);
    Ok(BasisCheck {
        is_basis,
        gram,
        components,
    })
}

/// Lagrangian test by projection onto each CRT factor: the projected span
/// must be isotropic and reduce to rank `N` modulo `p`.
pub fn is_lagrangian(vectors: &[ModVector], n_qudits: usize) -> Result<bool> {
    let first = vectors
        .first()
        .ok_or_else(|| SymplError::InvalidArgument("empty set".into()))?;
    let d = first.modulus;
    if vectors
        .iter()
        .any(|v| v.len() != 2 * n_qudits || v.modulus != d)
    {
        return Err(SymplError::DimensionMismatch(
            "vector length or modulus mismatch".into(),
        ));
    }
    let crt = crt_split(d)?;
    for (&(p, _), &m) in crt.factors.iter().zip(&crt.moduli) {
        let vs: Vec<ModVector> = vectors.iter().map(|v| v.reduce_mod(m)).collect();
        for a in &vs {
            for b in &vs {
                if pauli_phase(a, b)? != 0 {
                    return Ok(false);
                }
            }
        }
        let rows: Vec<Vec<u64>> = vs
            .iter()
            .map(|v| v.data.iter().map(|x| x % p).collect())
            .collect();
        if rank_mod_prime(rows, p) != n_qudits {
            return Ok(false);
        }
    }
    Ok(true)
}

#[allow(clippy::needless_range_loop)]
fn rank_mod_prime(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][c].is_multiple_of(p)) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = inv_mod(rows[rank][c], p).expect("nonzero mod prime");
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != 0 {
                let f = rows[r][c] * inv % p;
                for k in 0..cols {
                    rows[r][k] = (rows[r][k] + p * p - f * rows[rank][k] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Dense clock/shift reference operators, used to check the label calculus.
pub mod dense {
    use super::*;
    use crate::linalg::CMat;
    use num_complex::Complex64;

    fn omega(d: u64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64)
    }

    /// `X|j> = |j+1>`.
    pub fn shift(d: u64) -> CMat {
        let d = d as usize;
        let mut m = CMat::zeros(d, d);
        for j in 0..d {
            m[((j + 1) % d, j)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `Z|j> = ω^j |j>`.
    pub fn clock(d: u64) -> CMat {
        let w = omega(d);
        CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d as usize,
            (0..d).map(|j| w.powu(j as u32)),
        ))
    }

    fn kron_all(ops: &[CMat]) -> CMat {
        ops.iter()
            .skip(1)
            .fold(ops[0].clone(), |acc, m| acc.kronecker(m))
    }

    fn mpow(m: &CMat, e: u64) -> CMat {
        (0..e).fold(CMat::identity(m.nrows(), m.ncols()), |acc, _| acc * m)
    }

    /// `D(u) = ⊗ X^{q_j} Z^{p_j}`; qudit 0 is the most significant factor.
    pub fn pauli_operator(u: &[u64], d: u64) -> CMat {
        let (x, z) = (shift(d), clock(d));
        let ops: Vec<CMat> = u
            .chunks(2)
            .map(|c| mpow(&x, c[0] % d) * mpow(&z, c[1] % d))
            .collect();
        kron_all(&ops)
    }

    fn embed(local: &CMat, qudits: &[usize], n: usize, d: u64) -> CMat {
        let du = d as usize;
        let dim = du.pow(n as u32);
        let k = qudits.len();
        let mut u = CMat::zeros(dim, dim);
        for col in 0..dim {
            let digits: Vec<usize> = (0..n)
                .map(|q| col / du.pow((n - 1 - q) as u32) % du)
                .collect();
            let sub_in = qudits.iter().fold(0, |acc, &q| acc * du + digits[q]);
            for sub_out in 0..du.pow(k as u32) {
                let amp = local[(sub_out, sub_in)];
                if amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut out = digits.clone();
                for (t, &q) in qudits.iter().enumerate() {
                    out[q] = sub_out / du.pow((k - 1 - t) as u32) % du;
                }
                let row = out.iter().fold(0, |acc, &x| acc * du + x);
                u[(row, col)] += amp;
            }
        }
        u
    }

    /// Unitary of a gate on `n` qudits of dimension `d`.
    pub fn gate_unitary(gate: &Gate, n: usize, d: u64) -> Result<CMat> {
        let du = d as usize;
        let w = omega(d);
        let local = match gate {
            Gate::H { .. } | Gate::Fourier { .. } => {
                let s = 1.0 / (d as f64).sqrt();
                CMat::from_fn(du, du, |j, k| w.powu((j * k) as u32) * s)
            }
            Gate::Phase { .. } => {
                let diag = (0..du).map(|j| {
                    if d % 2 == 1 {
                        w.powu(((j * j.saturating_sub(1)) / 2 % du) as u32)
                    } else {
                        Complex64::from_polar(1.0, std::f64::consts::PI * (j * j) as f64 / d as f64)
                    }
                });
                CMat::from_diagonal(&nalgebra::DVector::from_iterator(du, diag))
            }
            Gate::Cnot { .. } | Gate::Sum { .. } => {
                let mut m = CMat::zeros(du * du, du * du);
                for x in 0..du {
                    for y in 0..du {
                        m[(x * du + (x + y) % du, x * du + y)] = Complex64::new(1.0, 0.0);
                    }
                }
                m
            }
            Gate::Multiply { factor, .. } => {
                if inv_mod(*factor, d).is_none() {
                    return Err(SymplError::InvalidArgument(format!(
                        "{factor} is not a unit modulo {d}"
                    )));
                }
                let mut m = CMat::zeros(du, du);
                for j in 0..du {
                    m[((j * *factor as usize) % du, j)] = Complex64::new(1.0, 0.0);
                }
                m
            }
            Gate::Custom { .. } => {
                return Err(SymplError::InvalidArgument(
                    "custom gates have no dense form".into(),
                ))
            }
        };
        Ok(embed(&local, &gate.qudits(), n, d))
    }

    /// `U = U_k ⋯ U_1`.
    pub fn circuit_unitary(c: &Circuit) -> Result<CMat> {
        let dim = (c.modulus as usize).pow(c.n_qudits as u32);
        c.gates.iter().try_fold(CMat::identity(dim, dim), |acc, g| {
            Ok(gate_unitary(g, c.n_qudits, c.modulus)? * acc)
        })
    }

    /// True when `A = λ Id` for some `|λ| = 1`.
    pub fn is_phase_multiple(a: &CMat, tol: f64) -> bool {
        let l = a[(0, 0)];
        if (l.norm() - 1.0).abs() > tol {
            return false;
        }
        a.iter().enumerate().all(|(k, z)| {
            let (i, j) = (k % a.nrows(), k / a.nrows());
            let want = if i == j { l } else { Complex64::new(0.0, 0.0) };
            (z - want).norm() <= tol
        })
    }

    /// Checks `U D(e_k) U† ∝ D(S e_k)` for every generator label `e_k`.
    pub fn conjugation_matches(u: &CMat, s: &ModMatrix, tol: f64) -> Result<bool> {
        let d = s.modulus();
        for k in 0..s.ncols() {
            let mut e = vec![0u64; s.ncols()];
            e[k] = 1;
            let image = s.column(k);
            let lhs = u * pauli_operator(&e, d) * u.adjoint();
            if !is_phase_multiple(&(lhs * pauli_operator(&image.data, d).adjoint()), tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Single-qudit characteristic function `χ(u) = Tr[D(-u) ρ] / d`.
    pub fn characteristic(rho: &CMat, u: &[u64], d: u64) -> Complex64 {
        let neg: Vec<u64> = u.iter().map(|&x| (d - x % d) % d).collect();
        (pauli_operator(&neg, d) * rho).trace() / d as f64
    }

    /// Single-qudit Wigner function `W(u) = Σ_v ω^{σ(u,v)} χ(v) / d`.
    pub fn wigner(rho: &CMat, u: &[u64], d: u64) -> Result<Complex64> {
        if u.len() != 2 || rho.nrows() != d as usize {
            return Err(SymplError::InvalidArgument(
                "Wigner function is implemented for one qudit".into(),
            ));
        }
        let w = omega(d);
        let uv = ModVector {
            modulus: d,
            data: u.to_vec(),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for q in 0..d {
            for p in 0..d {
                let v = ModVector {
                    modulus: d,
                    data: vec![q, p],
                };
                acc += w.powu(pauli_phase(&uv, &v)? as u32) * characteristic(rho, &v.data, d);
            }
        }
        Ok(acc / d as f64)
    }
}

/// The qubit teleportation circuit, its roles, and the expected matrix.
pub mod examples {
    use super::*;

    pub fn teleportation_circuit() -> Circuit {
        Circuit {
            n_qudits: 3,
            modulus: 2,
            gates: vec![
                Gate::H { qudit: 1 },
                Gate::Cnot {
                    control: 1,
                    target: 2,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::H { qudit: 0 },
            ],
        }
    }

    pub fn teleportation_partition() -> DvPartition {
        DvPartition {
            n_qudits: 3,
            input: vec![0],
            output: vec![2],
            ancilla: vec![(1, Basis::Z), (2, Basis::Z)],
            measured: vec![(0, Basis::Z), (1, Basis::Z)],
        }
    }

    pub fn teleportation_matrix() -> ModMatrix {
        ModMatrix::from_rows(
            2,
            &[
                &[0, 1, 1, 0, 0, 1],
                &[1, 0, 0, 0, 0, 0],
                &[1, 0, 0, 1, 0, 0],
                &[0, 0, 1, 0, 0, 1],
                &[0, 0, 0, 1, 1, 0],
                &[0, 0, 0, 0, 0, 1],
            ],
        )
        .expect("valid literal")
    }

    /// Gate teleportation of a CNOT between qubits 0 and 3.
    pub fn gate_teleportation_circuit() -> Circuit {
        Circuit {
            n_qudits: 4,
            modulus: 2,
            gates: vec![
                Gate::H { qudit: 1 },
                Gate::Cnot {
                    control: 1,
                    target: 2,
                },
                Gate::Cnot {
                    control: 2,
                    target: 3,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
        }
    }

    pub fn gate_teleportation_partition() -> DvPartition {
        DvPartition {
            n_qudits: 4,
            input: vec![0, 3],
            output: vec![0, 3],
            ancilla: vec![(1, Basis::Z), (2, Basis::Z)],
            measured: vec![(1, Basis::Z), (2, Basis::X)],
        }
    }

    pub fn gate_teleportation_matrix() -> ModMatrix {
        ModMatrix::from_rows(
            2,
            &[
                &[1, 0, 0, 0, 0, 0, 0, 0],
                &[0, 1, 1, 0, 0, 1, 0, 0],
                &[1, 0, 0, 1, 0, 0, 0, 0],
                &[0, 0, 1, 0, 0, 1, 0, 0],
                &[0, 0, 0, 1, 1, 0, 0, 0],
                &[0, 0, 0, 0, 0, 1, 0, 1],
                &[0, 0, 0, 1, 1, 0, 1, 0],
                &[0, 0, 0, 0, 0, 0, 0, 1],
            ],
        )
        .expect("valid literal")
    }

    pub fn cnot_matrix() -> ModMatrix {
        ModMatrix::from_rows(
            2,
            &[&[1, 0, 0, 0], &[0, 1, 0, 1], &[1, 0, 1, 0], &[0, 0, 0, 1]],
        )
        .expect("valid literal")
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;

    fn v(d: u64, e: &[i64]) -> ModVector {
        ModVector::new(d, e).unwrap()
    }

    #[test]
    fn qubit_z_and_x_anticommute() {
        assert_eq!(pauli_phase(&v(2, &[1, 0]), &v(2, &[0, 1])).unwrap(), 1);
        assert_eq!(pauli_phase(&v(5, &[3, 4]), &v(5, &[3, 4])).unwrap(), 0);
        assert_eq!(
            pauli_phase(&v(2, &[1, 0]), &v(3, &[0, 1])).unwrap_err(),
            SymplError::ModulusMismatch(2, 3)
        );
    }

    #[test]
    fn phase_is_antisymmetric_and_bilinear() {
        let d = 7;
        let (a, b, c) = (
            v(d, &[1, 2, 3, 4]),
            v(d, &[5, 6, 0, 1]),
            v(d, &[2, 2, 6, 3]),
        );
        let ab = pauli_phase(&a, &b).unwrap();
        assert_eq!((ab + pauli_phase(&b, &a).unwrap()) % d, 0);
        let bc = ModVector {
            modulus: d,
            data: b
                .data
                .iter()
                .zip(&c.data)
                .map(|(x, y)| (x + y) % d)
                .collect(),
        };
        assert_eq!(
            pauli_phase(&a, &bc).unwrap(),
            (ab + pauli_phase(&a, &c).unwrap()) % d
        );
    }

    #[test]
    fn qubit_gates_match_the_worked_matrices() {
        let h = gate_to_symplectic(&Gate::H { qudit: 0 }, 1, 2).unwrap();
        assert_eq!(
            h.matrix(),
            &ModMatrix::from_rows(2, &[&[0, 1], &[1, 0]]).unwrap()
        );
        let c = gate_to_symplectic(
            &Gate::Cnot {
                control: 0,
                target: 1,
            },
            2,
            2,
        )
        .unwrap();
        assert_eq!(c.matrix(), &cnot_matrix());
        assert_eq!(
            c.compose(&c).unwrap().matrix(),
            &ModMatrix::identity(4, 2).unwrap()
        );
    }

    #[test]
    fn teleportation_circuit_composes_to_the_worked_matrix() {
        let s = circuit_compose(&teleportation_circuit()).unwrap();
        assert_eq!(s.matrix(), &teleportation_matrix());
        let empty = Circuit {
            n_qudits: 2,
            modulus: 3,
            gates: vec![],
        };
        assert_eq!(
            circuit_compose(&empty).unwrap().matrix(),
            &ModMatrix::identity(4, 3).unwrap()
        );
    }

    #[test]
    fn teleportation_reduces_to_identity_with_swap_feedforward() {
        let t = dv_teleport_transform(&teleportation_matrix(), &teleportation_partition()).unwrap();
        assert!(t.s_out_in.is_zero());
        assert_eq!(t.s_out_zp, ModMatrix::identity(2, 2).unwrap());
        let swap = ModMatrix::from_rows(2, &[&[0, 1], &[1, 0]]).unwrap();
        assert_eq!(t.s_h_zp, swap);
        assert_eq!(t.s_h_in, swap);
        assert_eq!(t.s_tilde, ModMatrix::identity(2, 2).unwrap());
        assert_eq!(t.f_star, swap);
    }

    #[test]
    fn feedforward_table_names_the_corrections() {
        let t = dv_teleport_transform(&teleportation_matrix(), &teleportation_partition()).unwrap();
        let table = feedforward_table(&t.f_star).unwrap();
        assert_eq!(table.len(), 4);
        let row = |m: [u64; 2]| table.iter().find(|e| e.syndrome == m).unwrap().clone();
        assert_eq!(row([0, 1]).correction, vec![1, 0]);
        // qubit 0 found in |1>, qubit 1 in |0>
        assert_eq!(row([1, 0]).pauli, "Z");
        assert_eq!(row([1, 1]).pauli, "XZ");
        assert_eq!(row([0, 0]).pauli, "I");
    }

    #[test]
    fn gate_teleportation_recovers_cnot() {
        let s = circuit_compose(&gate_teleportation_circuit()).unwrap();
        assert_eq!(s.matrix(), &gate_teleportation_matrix());
        let t = dv_teleport_transform(s.matrix(), &gate_teleportation_partition()).unwrap();
        assert_eq!(t.s_out_in, ModMatrix::identity(4, 2).unwrap());
        assert_eq!(t.s_h_zp, ModMatrix::identity(2, 2).unwrap());
        assert_eq!(
            t.s_h_in,
            ModMatrix::from_rows(2, &[&[1, 0, 0, 0], &[0, 0, 0, 1]]).unwrap()
        );
        assert_eq!(t.s_tilde, cnot_matrix());
        assert_eq!(
            t.f_star,
            ModMatrix::from_rows(2, &[&[0, 0], &[0, 1], &[1, 0], &[0, 0]]).unwrap()
        );
    }

    #[test]
    fn singular_feedforward_block_is_reported() {
        let p = DvPartition {
            n_qudits: 2,
            input: vec![0],
            output: vec![0],
            ancilla: vec![(1, Basis::Z)],
            measured: vec![(1, Basis::X)],
        };
        // X readout of qudit 1 sees the free p coordinate; Z readout sees nothing
        let id = ModMatrix::identity(4, 2).unwrap();
        assert!(dv_teleport_transform(&id, &p).is_ok());
        let p2 = DvPartition {
            measured: vec![(1, Basis::Z)],
            ..p
        };
        assert_eq!(
            dv_teleport_transform(&id, &p2).unwrap_err(),
            SymplError::NonInvertibleBlock(2)
        );
    }

    #[test]
    fn x_basis_ancilla_replaces_a_leading_fourier() {
        let full = teleportation_circuit();
        let mut short = full.clone();
        short.gates.remove(0);
        let a = dv_teleport_transform(
            circuit_compose(&full).unwrap().matrix(),
            &teleportation_partition(),
        )
        .unwrap();
        let mut part = teleportation_partition();
        part.ancilla[0].1 = Basis::X;
        let b = dv_teleport_transform(circuit_compose(&short).unwrap().matrix(), &part).unwrap();
        assert_eq!(a.s_tilde, b.s_tilde);
        assert_eq!(a.f_star, b.f_star);
    }

    #[test]
    fn composite_modulus_example_is_symplectic() {
        let s = ModMatrix::from_rows(
            6,
            &[&[5, 4, 0, 0], &[3, 5, 0, 0], &[0, 0, 5, 3], &[0, 0, 2, 5]],
        )
        .unwrap();
        assert!(is_dv_symplectic(&s));
        let crt = crt_split(6).unwrap();
        let parts = crt.split_matrix(&s).unwrap();
        assert_eq!(
            parts[0],
            ModMatrix::from_rows(
                2,
                &[&[1, 0, 0, 0], &[1, 1, 0, 0], &[0, 0, 1, 1], &[0, 0, 0, 1]]
            )
            .unwrap()
        );
        assert_eq!(
            parts[1],
            ModMatrix::from_rows(
                3,
                &[&[2, 1, 0, 0], &[0, 2, 0, 0], &[0, 0, 2, 0], &[0, 0, 2, 2]]
            )
            .unwrap()
        );
        assert_eq!(crt.combine_matrices(&parts).unwrap(), s);
        // grouped form J = [[0, I], [-I, 0]] is preserved too
        let j = ModMatrix::from_rows(
            6,
            &[&[0, 0, 1, 0], &[0, 0, 0, 1], &[5, 0, 0, 0], &[0, 5, 0, 0]],
        )
        .unwrap();
        assert_eq!(s.mul(&j).unwrap().mul(&s.transpose()).unwrap(), j);
    }

    #[test]
    fn crt_arithmetic_on_six() {
        let crt = crt_split(6).unwrap();
        assert_eq!(crt.moduli, vec![2, 3]);
        let table: Vec<Vec<u64>> = (0..6).map(|x| crt.split(x)).collect();
        assert_eq!(
            table,
            vec![
                vec![0, 0],
                vec![1, 1],
                vec![0, 2],
                vec![1, 0],
                vec![0, 1],
                vec![1, 2]
            ]
        );
        let prod = crt.mul(&crt.split(2), &crt.split(5));
        assert_eq!(prod, vec![0, 1]);
        assert_eq!(crt.combine(&prod).unwrap(), 4);
        assert_eq!(
            crt.combine(&crt.add(&crt.split(2), &crt.split(5))).unwrap(),
            1
        );
        assert_eq!(crt_split(7).unwrap().moduli, vec![7]);
        for x in 0..360 {
            let c = crt_split(360).unwrap();
            assert_eq!(c.combine(&c.split(x)).unwrap(), x);
        }
    }

    #[test]
    fn differential_obstruction_on_nine() {
        // u = (x, 0), v = (0, x) over F_3[x]/(x^2)
        let x = LocalRingElement::from_integer(3, 3, 2);
        let z = LocalRingElement::from_integer(0, 3, 2);
        let s = sigma_lifted(&[x.clone(), z.clone()], &[z, x]);
        assert!(s.truncate(2).is_zero());
        let ds = ring_diff(&s, 1, 2);
        assert_eq!(ds.coeffs, vec![0, 2]);
        assert!(!ds.is_zero());
    }

    #[test]
    fn ring_differential_is_leibniz() {
        let a = FpPoly::new(5, &[1, 3, 4]);
        let b = FpPoly::new(5, &[2, 0, 1, 3]);
        let lhs = a.mul(&b).derivative();
        let rhs = a.derivative().mul(&b).add(&a.mul(&b.derivative()));
        assert_eq!(lhs, rhs);
        let e = LocalRingElement::from_integer(7, 3, 2);
        assert_eq!(e.coeffs, vec![1, 2]);
        assert_eq!(e.to_integer(), 7);
    }

    #[test]
    fn prime_power_membership_uses_differentials() {
        assert!(is_dv_symplectic(&ModMatrix::identity(4, 9).unwrap()));
        // diag(1, 1 + x): the value at p is preserved, the first differential is not
        let s = ModMatrix::from_rows(9, &[&[1, 0], &[0, 4]]).unwrap();
        let report = dv_symplectic_report(&s).unwrap();
        assert_eq!(report[0].differential_failures, vec![1]);
        assert!(!is_dv_symplectic(&s));
        // a unit-determinant shear passes every order
        let shear = ModMatrix::from_rows(9, &[&[1, 4], &[0, 1]]).unwrap();
        assert!(is_dv_symplectic(&shear));
    }

    #[test]
    fn symplectic_group_closure_and_inverse() {
        let d = 5;
        let n = 2;
        let gates = [
            Gate::Fourier { qudit: 0 },
            Gate::Sum {
                control: 0,
                target: 1,
            },
            Gate::Phase { qudit: 1 },
            Gate::Multiply {
                qudit: 0,
                factor: 3,
            },
        ];
        let mut s = DvSymplecticMatrix::identity(n, d).unwrap();
        for g in &gates {
            s = gate_to_symplectic(g, n, d).unwrap().compose(&s).unwrap();
            assert!(is_dv_symplectic(s.matrix()));
        }
        let inv = s.inverse().unwrap();
        assert_eq!(
            inv.compose(&s).unwrap().matrix(),
            &ModMatrix::identity(4, d).unwrap()
        );
        assert_eq!(s.matrix().inverse().unwrap(), *inv.matrix());
    }

    #[test]
    fn gate_parsing() {
        assert_eq!(
            Gate::parse("cnot 0 2").unwrap(),
            Gate::Cnot {
                control: 0,
                target: 2
            }
        );
        assert_eq!(Gate::parse("H 1").unwrap(), Gate::H { qudit: 1 });
        assert_eq!(
            Gate::parse("TOFFOLI 0 1 2").unwrap_err(),
            SymplError::UnknownGate("TOFFOLI".into())
        );
        assert!(Gate::parse("H").is_err());
        assert!(gate_to_symplectic(
            &Gate::Multiply {
                qudit: 0,
                factor: 2
            },
            1,
            4
        )
        .is_err());
    }

    #[test]
    fn custom_gate_from_conjugation_table() {
        // images of X and Z under the qubit Fourier gate
        let g = Gate::Custom {
            qudits: vec![1],
            images: vec![vec![0, 1], vec![1, 0]],
        };
        let s = gate_to_symplectic(&g, 2, 2).unwrap();
        assert_eq!(
            s.matrix(),
            gate_to_symplectic(&Gate::H { qudit: 1 }, 2, 2)
                .unwrap()
                .matrix()
        );
        let bad = Gate::Custom {
            qudits: vec![0],
            images: vec![vec![1, 1], vec![1, 1]],
        };
        assert!(gate_to_symplectic(&bad, 1, 2).is_err());
    }

    #[test]
    fn basis_checks_on_six() {
        let good = dv_symplectic_basis_check(&[v(6, &[5, 3]), v(6, &[2, 5])]).unwrap();
        assert!(good.is_basis);
        assert_eq!(good.gram.get(0, 1), 1);
        let bad = dv_symplectic_basis_check(&[v(6, &[2, 0]), v(6, &[0, 3])]).unwrap();
        assert!(!bad.is_basis);
        assert_eq!(bad.gram.get(0, 1), 0);
        assert!(!bad.components[0].ok && !bad.components[1].ok);
        for d in [2, 4, 6, 9, 12] {
            let std = dv_symplectic_basis_check(&[
                v(d, &[1, 0, 0, 0]),
                v(d, &[0, 0, 1, 0]),
                v(d, &[0, 1, 0, 0]),
                v(d, &[0, 0, 0, 1]),
            ])
            .unwrap();
            assert!(std.is_basis, "d = {d}");
        }
    }

    #[test]
    fn lagrangian_by_projection() {
        assert!(is_lagrangian(&[v(6, &[1, 0])], 1).unwrap());
        assert!(!is_lagrangian(&[v(6, &[2, 0])], 1).unwrap());
        assert!(!is_lagrangian(&[v(6, &[1, 0]), v(6, &[0, 1])], 1).unwrap());
    }

    #[test]
    fn modular_inverse_and_factorization() {
        assert_eq!(inv_mod(3, 7), Some(5));
        assert_eq!(inv_mod(2, 4), None);
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert!(is_prime(13) && !is_prime(9));
    }

    #[test]
    fn serde_round_trip() {
        let m = teleportation_matrix();
        let s = serde_json::to_string(&m).unwrap();
        let back: ModMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let c: Circuit = serde_json::from_str(
            r#"{"n_qudits":2,"modulus":2,"gates":[{"gate":"h","qudit":0},{"gate":"cnot","control":0,"target":1}]}"#,
        )
        .unwrap();
        assert_eq!(c.gates.len(), 2);
    }
}
