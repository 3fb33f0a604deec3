//! Symplectic matrices from quadratic Hamiltonians and input-output scattering.
//!
//! Two frames appear here. Passive scattering and Hamiltonian flows act on `N`
//! modes. Active scattering mixes the `+ω` and `-ω` sidebands, so its native
//! ordering is `(Q[ω], P[ω], Q[-ω], P[-ω])` with `N` entries per block, and the
//! symplectic form there is `e1 e2 ⊗ Id`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SymplError};
use crate::linalg::{max_abs, require_square, CMat, Mat};
use crate::symplectic::{
    cayley_inverse, check_dim, convert_ordering, omega_in, symplectic_residual, ModeOrdering,
    SymplecticMatrix, TOL_SYMP,
};

/// Default tolerance for the Hermitian/symmetric checks on `Y` and `W`.
pub const HAMILTONIAN_TOL: f64 = 1e-12;

/// `H = Σ Y_jk a_j† a_k + ½ W_jk a_j† a_k† + ½ W*_jk a_j a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticHamiltonian {
    y: CMat,
    w: CMat,
}

impl QuadraticHamiltonian {
    pub fn new(y: CMat, w: CMat, tol: f64) -> Result<Self> {
        let n = require_square(&y.map(|z| z.re), "Y")?;
        if w.nrows() != n || w.ncols() != n {
            return Err(SymplError::DimensionMismatch(format!(
                "W is {}x{}, Y is {n}x{n}",
                w.nrows(),
                w.ncols()
            )));
        }
        let herm = cmax_abs(&(&y - y.adjoint()));
        if herm > tol * (1.0 + cmax_abs(&y)) {
            return Err(SymplError::InvalidArgument(format!(
                "Y is not Hermitian (residual {herm:.3e})"
            )));
        }
        let sym = cmax_abs(&(&w - w.transpose()));
        if sym > tol * (1.0 + cmax_abs(&w)) {
            return Err(SymplError::InvalidArgument(format!(
                "W is not symmetric (residual {sym:.3e})"
            )));
        }
        Ok(Self { y, w })
    }

    pub fn zero(n_modes: usize) -> Self {
        Self {
            y: CMat::zeros(n_modes, n_modes),
            w: CMat::zeros(n_modes, n_modes),
        }
    }

    /// Beam-splitter part only.
    pub fn passive(y: CMat) -> Result<Self> {
        let n = y.nrows();
        Self::new(y, CMat::zeros(n, n), HAMILTONIAN_TOL)
    }

    pub fn n_modes(&self) -> usize {
        self.y.nrows()
    }

    pub fn y(&self) -> &CMat {
        &self.y
    }

    pub fn w(&self) -> &CMat {
        &self.w
    }

    /// Generator `[[Im(Y+W), Re(Y-W)], [-Re(Y+W), Im(Y-W)]]` in grouped ordering.
    pub fn generator(&self) -> Mat {
        let n = self.n_modes();
        let sum = &self.y + &self.w;
        let diff = &self.y - &self.w;
        let mut g = Mat::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&sum.map(|z| z.im));
        g.view_mut((0, n), (n, n)).copy_from(&diff.map(|z| z.re));
        g.view_mut((n, 0), (n, n)).copy_from(&sum.map(|z| -z.re));
        g.view_mut((n, n), (n, n)).copy_from(&diff.map(|z| z.im));
        g
    }

    /// Symmetric quadrature Hamiltonian `H` with `generator = Ω H`, grouped ordering.
    pub fn quadrature_hamiltonian(&self) -> Mat {
        let om = omega_in(self.n_modes(), ModeOrdering::Grouped);
        -(om * self.generator())
    }
}

/// `S = exp(generator · t)`, returned in grouped ordering.
pub fn hamiltonian_flow(h: &QuadraticHamiltonian, t: f64) -> Result<SymplecticMatrix> {
    let s = crate::linalg::expm(&(h.generator() * t));
    let tol = TOL_SYMP * (1.0 + max_abs_sq(&s));
    SymplecticMatrix::with_ordering(s, ModeOrdering::Grouped, tol)
}

/// Coupling between the system modes and the propagating modes, in mode basis.
///
/// `b`, `c`, `d` act on annihilation operators; the creation operators see
/// their complex conjugates.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingData {
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
    /// Probe frequency in rad/s.
    pub omega: f64,
}

impl CouplingData {
    pub fn new(b: CMat, c: CMat, d: CMat, omega: f64) -> Result<Self> {
        let n = b.nrows();
        for (m, name) in [(&b, "B"), (&c, "C"), (&d, "D")] {
            if m.nrows() != n || m.ncols() != n {
                return Err(SymplError::DimensionMismatch(format!(
                    "{name} must be {n}x{n}"
                )));
            }
        }
        if !omega.is_finite() || omega < 0.0 {
            return Err(SymplError::InvalidArgument(format!(
                "omega must be >= 0, got {omega}"
            )));
        }
        Ok(Self { b, c, d, omega })
    }

    /// `B = diag(κ)`, `C = D = diag(√κ)`.
    pub fn damped(kappa: &[f64], omega: f64) -> Result<Self> {
        if let Some(i) = kappa.iter().position(|k| !(*k > 0.0)) {
            return Err(SymplError::NonPositive(kappa[i], i));
        }
        let b = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            kappa.len(),
            kappa.iter().map(|k| Complex64::new(*k, 0.0)),
        ));
        let c = b.map(|z| Complex64::new(z.re.sqrt(), 0.0));
        Self::new(b, c.clone(), c, omega)
    }

    pub fn n_modes(&self) -> usize {
        self.b.nrows()
    }

    /// Dimensionless parameters of the active formula:
    /// `Y = C⁻¹𝒴D⁻¹`, `W = C⁻¹𝒲D⁻¹`, `Θ = ωB⁻¹`, `Γ = C⁻¹BD⁻¹/2`.
    pub fn normalize(&self, h: &QuadraticHamiltonian) -> Result<ActiveParameters> {
        let n = self.n_modes();
        if h.n_modes() != n {
            return Err(SymplError::DimensionMismatch(format!(
                "Hamiltonian has {} modes, coupling {n}",
                h.n_modes()
            )));
        }
        let ci = cinverse(&self.c)?;
        let di = cinverse(&self.d)?;
        let bi = cinverse(&self.b)?;
        let theta = bi * Complex64::new(self.omega, 0.0);
        let gamma = &ci * &self.b * &di * Complex64::new(0.5, 0.0);
        Ok(ActiveParameters {
            y: &ci * h.y() * &di,
            w: &ci * h.w() * &di,
            theta: real_part(&theta, "Theta")?,
            gamma: real_part(&gamma, "Gamma")?,
        })
    }

    /// True when `C⁻¹BD⁻¹ = Id`, the no-intrinsic-loss condition.
    pub fn is_lossless(&self, tol: f64) -> Result<bool> {
        let n = self.n_modes();
        let ci = cinverse(&self.c)?;
        let di = cinverse(&self.d)?;
        let r = cmax_abs(&(ci * &self.b * di - CMat::identity(n, n)));
        Ok(r <= tol)
    }
}

/// Inputs of the active scattering formula.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveParameters {
    pub y: CMat,
    pub w: CMat,
    pub theta: Mat,
    pub gamma: Mat,
}

impl ActiveParameters {
    /// Lossless parameters with `Γ = ½ Id`.
    pub fn lossless(y: CMat, w: CMat, theta: Mat) -> Self {
        let n = y.nrows();
        Self {
            y,
            w,
            theta,
            gamma: Mat::identity(n, n) * 0.5,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.y.nrows()
    }
}

/// A scattering matrix in interleaved ordering, kept even when it is lossy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringMatrix {
    #[serde(with = "crate::json::matrix")]
    pub mat: Mat,
    /// `max|SᵗΩS - Ω|`.
    pub residual: f64,
}

impl ScatteringMatrix {
    fn from_interleaved(mat: Mat) -> Result<Self> {
        let residual = symplectic_residual(&mat)?;
        Ok(Self { mat, residual })
    }

    pub fn n_modes(&self) -> usize {
        self.mat.nrows() / 2
    }

    /// Symplectic within `1e-9`, scaled by the entry size.
    pub fn is_symplectic(&self) -> bool {
        self.residual <= TOL_SYMP * (1.0 + max_abs_sq(&self.mat))
    }

    pub fn into_symplectic(self) -> Result<SymplecticMatrix> {
        if !self.is_symplectic() {
            return Err(SymplError::NotSymplectic(self.residual));
        }
        Ok(SymplecticMatrix::from_trusted(self.mat))
    }
}

/// `S = Id - D (H + ωΩ + B/2)⁻¹ C` in quadrature basis, for `W = 0`.
///
/// The leading minus matches the active formula, so that `C = D = √κ`
/// describes a lossless port.
pub fn passive_scattering(y: &CMat, coupling: &CouplingData) -> Result<ScatteringMatrix> {
    let h = QuadraticHamiltonian::passive(y.clone())?;
    let n = h.n_modes();
    if coupling.n_modes() != n {
        return Err(SymplError::DimensionMismatch(format!(
            "Y has {n} modes, coupling {}",
            coupling.n_modes()
        )));
    }
    let om = omega_in(n, ModeOrdering::Grouped);
    let resolvent = h.generator() + om * coupling.omega + quadrature(&coupling.b) * 0.5;
    let inv = resolvent
        .try_inverse()
        .ok_or(SymplError::SingularResolvent)?;
    let s = Mat::identity(2 * n, 2 * n) - quadrature(&coupling.d) * inv * quadrature(&coupling.c);
    ScatteringMatrix::from_interleaved(convert_ordering(
        &s,
        ModeOrdering::Grouped,
        ModeOrdering::Interleaved,
    ))
}

/// Output of [`active_scattering`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveScattering {
    /// Native sideband ordering `(Q[ω], P[ω], Q[-ω], P[-ω])`.
    pub native: Mat,
    /// The assembled matrix whose inverse is subtracted from `Id`.
    pub assembly: Mat,
    /// Same map over `2N` modes, `+ω` modes first, interleaved.
    pub interleaved: ScatteringMatrix,
}

impl ActiveScattering {
    pub fn n_modes(&self) -> usize {
        self.native.nrows() / 4
    }

    /// At zero frequency the two sidebands coincide; fold them onto `N` modes.
    pub fn fold_zero_frequency(&self, theta: &Mat) -> Result<ScatteringMatrix> {
        if max_abs(theta) != 0.0 {
            return Err(SymplError::InvalidArgument(
                "sideband folding needs Theta = 0".into(),
            ));
        }
        let n = self.n_modes();
        let plus = self.native.view((0, 0), (2 * n, 2 * n)).into_owned();
        let cross = self.native.view((0, 2 * n), (2 * n, 2 * n)).into_owned();
        ScatteringMatrix::from_interleaved(convert_ordering(
            &(plus + cross),
            ModeOrdering::Grouped,
            ModeOrdering::Interleaved,
        ))
    }
}

/// `S = Id - (Id⊗(Im Y + Γ) - e1⊗Re W + e2⊗Im W - e1e2⊗Re Y + e1e2e3⊗Θ)⁻¹`.
pub fn active_scattering(p: &ActiveParameters) -> Result<ActiveScattering> {
    let n = p.n_modes();
    check_dim(&p.y.map(|z| z.re), n, n, "Y")?;
    check_dim(&p.w.map(|z| z.re), n, n, "W")?;
    check_dim(&p.theta, n, n, "Theta")?;
    check_dim(&p.gamma, n, n, "Gamma")?;
    let cl = clifford_basis();
    let [e1, e2, e3] = &cl.e;
    let e12 = e1 * e2;
    let e123 = &e12 * e3;
    let re = |m: &CMat| m.map(|z| z.re);
    let im = |m: &CMat| m.map(|z| z.im);
    let assembly = Mat::identity(4, 4).kronecker(&(im(&p.y) + &p.gamma)) - e1.kronecker(&re(&p.w))
        + e2.kronecker(&im(&p.w))
        - e12.kronecker(&re(&p.y))
        + e123.kronecker(&p.theta);
    let inv = assembly
        .clone()
        .try_inverse()
        .ok_or(SymplError::SingularAssembly)?;
    let native = Mat::identity(4 * n, 4 * n) - inv;
    let perm = sideband_to_interleaved(n);
    let interleaved = ScatteringMatrix::from_interleaved(&perm * &native * perm.transpose())?;
    Ok(ActiveScattering {
        native,
        assembly,
        interleaved,
    })
}

/// The symplectic form `e1 e2 ⊗ Id` of the sideband frame.
pub fn sideband_omega(n_modes: usize) -> Mat {
    let cl = clifford_basis();
    (&cl.e[0] * &cl.e[1]).kronecker(&Mat::identity(n_modes, n_modes))
}

/// Permutation `P` with `x_interleaved = P x_sideband` over `2N` modes.
pub fn sideband_to_interleaved(n_modes: usize) -> Mat {
    let n = n_modes;
    let mut p = Mat::zeros(4 * n, 4 * n);
    for j in 0..n {
        p[(2 * j, j)] = 1.0;
        p[(2 * j + 1, n + j)] = 1.0;
        p[(2 * (n + j), 2 * n + j)] = 1.0;
        p[(2 * (n + j) + 1, 3 * n + j)] = 1.0;
    }
    p
}

/// Symmetric `M` with `ΩM + ½Id = (Id - S)⁻¹`, interleaved ordering.
pub fn cayley_hamiltonian(s: &Mat) -> Result<Mat> {
    let m = cayley_inverse(s)?.hamiltonian();
    let asym = max_abs(&(&m - m.transpose()));
    if asym > 1e-9 * (1.0 + max_abs(&m)) {
        return Err(SymplError::NotSymmetric(asym));
    }
    Ok(crate::linalg::symmetrize(&m))
}

/// Integer form of the two `Cl(3,0)` representations.
///
/// `eps` and `e` are exact; `v = √2 U` has Gaussian-integer entries, so
/// `e_k = U⁻¹ ε_k U` reads `2 e_k = v† ε_k v`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerClifford {
    pub eps: [DMatrix<num_complex::Complex<i64>>; 3],
    pub e: [DMatrix<i64>; 3],
    pub v: DMatrix<num_complex::Complex<i64>>,
}

pub fn clifford_integer_basis() -> IntegerClifford {
    type Z = num_complex::Complex<i64>;
    let r = |x: i64| Z::new(x, 0);
    let i = |x: i64| Z::new(0, x);
    let z = Z::new(0, 0);
    let eps1 = DMatrix::from_row_slice(
        4,
        4,
        &[z, i(1), z, z, i(-1), z, z, z, z, z, z, i(1), z, z, i(-1), z],
    );
    let eps2 = DMatrix::from_row_slice(
        4,
        4,
        &[z, r(1), z, z, r(1), z, z, z, z, z, z, r(1), z, z, r(1), z],
    );
    let eps3 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![r(1), r(-1), r(-1), r(1)]));
    let e1 = DMatrix::from_row_slice(4, 4, &[0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0]);
    let e2 = DMatrix::from_row_slice(4, 4, &[0, 0, 1, 0, 0, 0, 0, -1, 1, 0, 0, 0, 0, -1, 0, 0]);
    let e3 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1, 1, -1, -1]));
    let v = DMatrix::from_row_slice(
        4,
        4,
        &[
            r(1),
            i(1),
            z,
            z,
            z,
            z,
            r(1),
            i(-1),
            z,
            z,
            r(1),
            i(1),
            r(1),
            i(-1),
            z,
            z,
        ],
    );
    IntegerClifford {
        eps: [eps1, eps2, eps3],
        e: [e1, e2, e3],
        v,
    }
}

/// Floating-point copies of the `Cl(3,0)` representations and `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordBasis {
    pub eps: [CMat; 3],
    pub e: [Mat; 3],
    pub u: CMat,
}

pub fn clifford_basis() -> CliffordBasis {
    let ib = clifford_integer_basis();
    let to_c = |m: &DMatrix<num_complex::Complex<i64>>| {
        m.map(|z| Complex64::new(z.re as f64, z.im as f64))
    };
    let to_r = |m: &DMatrix<i64>| m.map(|x| x as f64);
    CliffordBasis {
        eps: [to_c(&ib.eps[0]), to_c(&ib.eps[1]), to_c(&ib.eps[2])],
        e: [to_r(&ib.e[0]), to_r(&ib.e[1]), to_r(&ib.e[2])],
        u: to_c(&ib.v) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    }
}

/// Real form of a mode-basis operator acting as `X` on `a` and `X̄` on `a†`.
pub fn quadrature(x: &CMat) -> Mat {
    let n = x.nrows();
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&x.map(|z| z.re));
    m.view_mut((0, n), (n, n)).copy_from(&x.map(|z| -z.im));
    m.view_mut((n, 0), (n, n)).copy_from(&x.map(|z| z.im));
    m.view_mut((n, n), (n, n)).copy_from(&x.map(|z| z.re));
    m
}

/// Beam-splitter coupling `g(a1†a2 + a2†a1)` with cooperativity `4g²/(κ1κ2)`.
pub fn beamsplitter_hamiltonian(
    cooperativity: f64,
    kappa: [f64; 2],
) -> Result<QuadraticHamiltonian> {
    let g = coupling_strength(cooperativity, kappa)?;
    QuadraticHamiltonian::passive(offdiag(g))
}

/// Two-mode squeezing `g(a1†a2† + a1a2)` with cooperativity `4g²/(κ1κ2)`.
pub fn squeezing_hamiltonian(cooperativity: f64, kappa: [f64; 2]) -> Result<QuadraticHamiltonian> {
    let g = coupling_strength(cooperativity, kappa)?;
    QuadraticHamiltonian::new(CMat::zeros(2, 2), offdiag(g), HAMILTONIAN_TOL)
}

/// Two-mode passive coupler at `ω = 0`, physical port labels.
pub fn passive_two_mode(cooperativity: f64, kappa: [f64; 2]) -> Result<ScatteringMatrix> {
    let h = beamsplitter_hamiltonian(cooperativity, kappa)?;
    passive_scattering(h.y(), &CouplingData::damped(&kappa, 0.0)?)
}

/// Two-mode active coupler at `ω = 0`, sidebands folded, physical port labels.
pub fn active_two_mode(cooperativity: f64, kappa: [f64; 2]) -> Result<ScatteringMatrix> {
    let h = squeezing_hamiltonian(cooperativity, kappa)?;
    let p = CouplingData::damped(&kappa, 0.0)?.normalize(&h)?;
    active_scattering(&p)?.fold_zero_frequency(&p.theta)
}

/// Relabel a two-mode coupler into the convention used by the transducer
/// examples: output ports crossed and mode 2 read with a `π` phase.
pub fn coupler_frame(s: &Mat) -> Result<Mat> {
    if s.nrows() != 4 || s.ncols() != 4 {
        return Err(SymplError::DimensionMismatch(
            "coupler_frame needs a 4x4 matrix".into(),
        ));
    }
    let g = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0, -1.0]));
    let mut swap = Mat::zeros(4, 4);
    for (i, j) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        swap[(i, j)] = 1.0;
    }
    Ok(swap * &g * s * g)
}

/// The passive transducer example matrix, built from the scattering formula.
pub fn passive_example_matrix(cooperativity: f64) -> Result<Mat> {
    coupler_frame(&passive_two_mode(cooperativity, [1.0, 1.0])?.mat)
}

/// The active transducer example matrix, built from the scattering formula.
pub fn active_example_matrix(cooperativity: f64) -> Result<Mat> {
    coupler_frame(&active_two_mode(cooperativity, [1.0, 1.0])?.mat)
}

fn coupling_strength(cooperativity: f64, kappa: [f64; 2]) -> Result<f64> {
    if !(cooperativity >= 0.0) {
        return Err(SymplError::InvalidArgument(format!(
            "cooperativity must be >= 0, got {cooperativity}"
        )));
    }
    if let Some(i) = kappa.iter().position(|k| !(*k > 0.0)) {
        return Err(SymplError::NonPositive(kappa[i], i));
    }
    Ok(0.5 * (cooperativity * kappa[0] * kappa[1]).sqrt())
}

fn offdiag(g: f64) -> CMat {
    let z = Complex64::new(0.0, 0.0);
    let gc = Complex64::new(g, 0.0);
    CMat::from_row_slice(2, 2, &[z, gc, gc, z])
}

fn cmax_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn max_abs_sq(m: &Mat) -> f64 {
    let a = max_abs(m);
    a * a
}

fn cinverse(m: &CMat) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| SymplError::InvalidArgument("coupling matrix is singular".into()))
}

fn real_part(m: &CMat, what: &str) -> Result<Mat> {
    let im = m.iter().fold(0.0_f64, |a, z| a.max(z.im.abs()));
    if im > 1e-12 * (1.0 + cmax_abs(m)) {
        return Err(SymplError::InvalidArgument(format!("{what} must be real")));
    }
    Ok(m.map(|z| z.re))
}
