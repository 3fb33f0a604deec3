//! Gaussian states and Gaussian measurements.
//!
//! A state is a pair `(x̄, V)` with `V` scaled so the vacuum has `V = Id`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SymplError};
use crate::linalg::{
    self, direct_sum, direct_sum_vec, max_abs, min_eig_hermitian_parts, pinv, select, select_vec,
    Mat, Vector,
};
use crate::symplectic::{
    mode_coordinates, omega_mat, ModeOrdering, SubspaceBasis, SubspaceKind, SymplecticMatrix,
};

/// Tolerance used by the physicality check `V + iΩ ⪰ 0`.
pub const TOL_PHYS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    #[serde(with = "crate::json::vector")]
    pub x_bar: Vector,
    #[serde(rename = "V", with = "crate::json::matrix")]
    pub v: Mat,
    pub ordering: ModeOrdering,
}

impl GaussianState {
    /// Checked constructor (interleaved ordering).
    pub fn new(x_bar: Vector, v: Mat) -> Result<Self> {
        let n = linalg::require_even_square(&v, "V")?;
        if x_bar.len() != 2 * n {
            return Err(SymplError::DimensionMismatch(format!(
                "x_bar has length {}, V is {}x{}",
                x_bar.len(),
                v.nrows(),
                v.ncols()
            )));
        }
        linalg::require_symmetric(&v, 1e-10)?;
        let s = Self {
            x_bar,
            v,
            ordering: ModeOrdering::Interleaved,
        };
        let m = s.physicality_margin();
        if m < -TOL_PHYS {
            return Err(SymplError::InvalidArgument(format!(
                "covariance violates V + iΩ ⪰ 0 (min eigenvalue {m:.3e})"
            )));
        }
        Ok(s)
    }

    /// Build without the physicality check; still requires consistent shapes.
    pub fn unchecked(x_bar: Vector, v: Mat) -> Self {
        Self {
            x_bar,
            v,
            ordering: ModeOrdering::Interleaved,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.v.nrows() / 2
    }

    /// Smallest eigenvalue of `V + iΩ`; nonnegative for physical states.
    pub fn physicality_margin(&self) -> f64 {
        min_eig_hermitian_parts(&self.v, &omega_mat(self.n_modes()))
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.physicality_margin() >= -tol
    }

    /// Copy with interleaved ordering, whatever the stored ordering.
    pub fn interleaved(&self) -> Self {
        if self.ordering == ModeOrdering::Interleaved {
            return self.clone();
        }
        let p = crate::symplectic::reorder_matrix(
            self.n_modes(),
            self.ordering,
            ModeOrdering::Interleaved,
        );
        Self {
            x_bar: &p * &self.x_bar,
            v: &p * &self.v * p.transpose(),
            ordering: ModeOrdering::Interleaved,
        }
    }
}

pub fn vacuum(n: usize) -> Result<GaussianState> {
    if n == 0 {
        return Err(SymplError::InvalidArgument("n must be at least 1".into()));
    }
    Ok(GaussianState::unchecked(
        Vector::zeros(2 * n),
        Mat::identity(2 * n, 2 * n),
    ))
}

pub fn coherent(u: &Vector) -> Result<GaussianState> {
    if u.is_empty() || !u.len().is_multiple_of(2) {
        return Err(SymplError::DimensionMismatch(
            "coherent amplitude must have even length".into(),
        ));
    }
    let d = u.len();
    Ok(GaussianState::unchecked(u.clone(), Mat::identity(d, d)))
}

pub fn thermal(nbar: &[f64]) -> Result<GaussianState> {
    if nbar.is_empty() {
        return Err(SymplError::InvalidArgument(
            "at least one mode required".into(),
        ));
    }
    if let Some((i, &x)) = nbar.iter().enumerate().find(|(_, &x)| !(x >= 0.0)) {
        return Err(SymplError::NonPositive(x, i));
    }
    let d = Vector::from_iterator(
        2 * nbar.len(),
        nbar.iter().flat_map(|&n| [2.0 * n + 1.0; 2]),
    );
    Ok(GaussianState::unchecked(
        Vector::zeros(d.len()),
        Mat::from_diagonal(&d),
    ))
}

/// Squeezed vacuum with `V = diag(e^{-2ξ}, e^{2ξ})` per mode.
pub fn squeezed_vacuum(xi: &[f64]) -> Result<GaussianState> {
    if xi.is_empty() {
        return Err(SymplError::InvalidArgument(
            "at least one mode required".into(),
        ));
    }
    let d = Vector::from_iterator(
        2 * xi.len(),
        xi.iter().flat_map(|&x| [(-2.0 * x).exp(), (2.0 * x).exp()]),
    );
    Ok(GaussianState::unchecked(
        Vector::zeros(d.len()),
        Mat::from_diagonal(&d),
    ))
}

/// Two-mode squeezed vacuum with squeezing parameter `r`.
pub fn two_mode_squeezed(r: f64) -> GaussianState {
    let c = (2.0 * r).cosh();
    let s = (2.0 * r).sinh();
    let v = Mat::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c,
        ],
    );
    GaussianState::unchecked(Vector::zeros(4), v)
}

/// `(x̄, V) → (S x̄ + v, S V S^t)`.
pub fn apply_gaussian_unitary(
    state: &GaussianState,
    s: &SymplecticMatrix,
    shift: Option<&Vector>,
) -> Result<GaussianState> {
    let st = state.interleaved();
    let sm = s.interleaved();
    if sm.nrows() != st.v.nrows() {
        return Err(SymplError::DimensionMismatch(format!(
            "S is {}x{} but the state has {} modes",
            sm.nrows(),
            sm.ncols(),
            st.n_modes()
        )));
    }
    let mut x = &sm * &st.x_bar;
    if let Some(v) = shift {
        if v.len() != x.len() {
            return Err(SymplError::DimensionMismatch("shift length".into()));
        }
        x += v;
    }
    let v = linalg::symmetrize(&(&sm * &st.v * sm.transpose()));
    Ok(GaussianState::unchecked(x, v))
}

/// Gaussian Wigner function, normalized to integrate to one.
pub fn wigner_eval(state: &GaussianState, u: &Vector) -> Result<f64> {
    let st = state.interleaved();
    if u.len() != st.x_bar.len() {
        return Err(SymplError::DimensionMismatch(
            "evaluation point length".into(),
        ));
    }
    let chol =
        st.v.clone()
            .cholesky()
            .ok_or(SymplError::SingularCovariance)?;
    let d = u - &st.x_bar;
    let y = chol.solve(&d);
    let det = chol.determinant();
    let n = st.n_modes() as i32;
    Ok((-0.5 * d.dot(&y)).exp() / ((2.0 * PI).powi(n) * det.sqrt()))
}

/// `χ(v) = ∫ W(u) e^{i u^t Ω v} du`, so `χ(0) = 1`.
pub fn characteristic_eval(state: &GaussianState, v: &Vector) -> Result<Complex64> {
    let st = state.interleaved();
    if v.len() != st.x_bar.len() {
        return Err(SymplError::DimensionMismatch(
            "evaluation point length".into(),
        ));
    }
    let w = omega_mat(st.n_modes()) * v;
    let quad = w.dot(&(&st.v * &w));
    let phase = st.x_bar.dot(&w);
    Ok(Complex64::from_polar((-0.5 * quad).exp(), phase))
}

pub fn tensor(a: &GaussianState, b: &GaussianState) -> GaussianState {
    let a = a.interleaved();
    let b = b.interleaved();
    GaussianState::unchecked(direct_sum_vec(&a.x_bar, &b.x_bar), direct_sum(&a.v, &b.v))
}

fn check_modes(n: usize, modes: &[usize], what: &str) -> Result<()> {
    if modes.is_empty() {
        return Err(SymplError::InvalidArgument(format!(
            "{what}: empty mode set"
        )));
    }
    let mut seen = vec![false; n];
    for &m in modes {
        if m >= n || seen[m] {
            return Err(SymplError::InvalidArgument(format!(
                "{what}: mode {m} out of range or repeated"
            )));
        }
        seen[m] = true;
    }
    Ok(())
}

/// Restrict to the listed modes, in the given order.
pub fn partial_trace(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    let st = state.interleaved();
    check_modes(st.n_modes(), keep, "keep")?;
    let idx = mode_coordinates(keep);
    Ok(GaussianState::unchecked(
        select_vec(&st.x_bar, &idx),
        select(&st.v, &idx, &idx),
    ))
}

fn complement(n: usize, modes: &[usize]) -> Vec<usize> {
    (0..n).filter(|m| !modes.contains(m)).collect()
}

/// Outcome of a Gaussian measurement on part of a state.
#[derive(Debug, Clone)]
pub struct Conditioned {
    /// Probability density of the outcome in plane coordinates.
    pub density: f64,
    /// Posterior state of the unmeasured modes, in ascending mode order.
    pub state: GaussianState,
    /// Mean and covariance of the outcome distribution.
    pub outcome_mean: Vector,
    pub outcome_cov: Mat,
}

/// Gaussian density with a pseudo-inverse for degenerate covariance.
fn gaussian_density(x: &Vector, mean: &Vector, cov: &Mat, cutoff: f64) -> f64 {
    let (vals, vecs) = linalg::sym_eigen(cov);
    let d = x - mean;
    let y = vecs.transpose() * &d;
    let mut expo = 0.0;
    let mut logdet = 0.0;
    let mut k = 0;
    for i in 0..vals.len() {
        if vals[i] > cutoff {
            expo += y[i] * y[i] / vals[i];
            logdet += vals[i].ln();
            k += 1;
        } else if y[i].abs() > 1e-9 {
            return 0.0;
        }
    }
    (-0.5 * expo - 0.5 * logdet - 0.5 * k as f64 * (2.0 * PI).ln()).exp()
}

/// Ideal homodyne measurement of `plane` on the `measured` modes.
///
/// `plane` lives in the phase space of the measured modes (listed order) and
/// must be Lagrangian there. The outcome `eta` is `F^t x` on those modes.
pub fn condition_on_homodyne(
    state: &GaussianState,
    measured: &[usize],
    plane: &SubspaceBasis,
    eta: &Vector,
) -> Result<Conditioned> {
    let st = state.interleaved();
    let n = st.n_modes();
    check_modes(n, measured, "measured")?;
    let keep = complement(n, measured);
    if keep.is_empty() {
        return Err(SymplError::InvalidArgument(
            "no modes left after measurement".into(),
        ));
    }
    if plane.f.nrows() != 2 * measured.len() || plane.kind != SubspaceKind::Lagrangian {
        return Err(SymplError::InvalidArgument(
            "plane must be Lagrangian on the measured modes".into(),
        ));
    }
    if eta.len() != measured.len() {
        return Err(SymplError::DimensionMismatch("outcome length".into()));
    }
    let mi = mode_coordinates(measured);
    let ki = mode_coordinates(&keep);
    let f = &plane.f;
    let sigma = f.transpose() * select(&st.v, &mi, &mi) * f;
    let c = select(&st.v, &ki, &mi) * f;
    let mean = f.transpose() * select_vec(&st.x_bar, &mi);
    let cutoff = 1e-12 * max_abs(&st.v).max(1.0);
    let sinv = pinv(&sigma, 1e-12);
    let gain = &c * &sinv;
    let x = select_vec(&st.x_bar, &ki) + &gain * (eta - &mean);
    let v = linalg::symmetrize(&(select(&st.v, &ki, &ki) - &gain * c.transpose()));
    Ok(Conditioned {
        density: gaussian_density(eta, &mean, &sigma, cutoff),
        state: GaussianState::unchecked(x, v),
        outcome_mean: mean,
        outcome_cov: sigma,
    })
}

/// An ideal infinitely squeezed state `Π_l(η)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfSqueezedProjector {
    pub plane: SubspaceBasis,
    #[serde(with = "crate::json::vector")]
    pub eta: Vector,
}

impl InfSqueezedProjector {
    pub fn new(plane: SubspaceBasis, eta: Vector) -> Result<Self> {
        if plane.kind != SubspaceKind::Lagrangian {
            return Err(SymplError::InvalidArgument(
                "projector plane must be Lagrangian".into(),
            ));
        }
        if eta.len() != plane.dim() {
            return Err(SymplError::DimensionMismatch("eta length vs plane".into()));
        }
        Ok(Self { plane, eta })
    }

    /// Finite-squeezing stand-in: variance `ζ²` along the plane, `ζ⁻²` across.
    pub fn approximate(&self, zeta: f64) -> Result<GaussianState> {
        let n = self.plane.f.nrows() / 2;
        let vac = GaussianState::unchecked(
            self.plane.f.clone() * &self.eta / zeta,
            Mat::identity(2 * n, 2 * n),
        );
        approx_inf_squeezed(&vac, &self.plane, zeta)
    }
}

/// The symplectic `ζ P_l + ζ⁻¹ P_{Ωl}` for an orthonormal Lagrangian basis.
pub fn plane_squeezer(plane: &SubspaceBasis, zeta: f64) -> Result<SymplecticMatrix> {
    if plane.kind != SubspaceKind::Lagrangian {
        return Err(SymplError::InvalidArgument(
            "plane must be Lagrangian".into(),
        ));
    }
    let f = &plane.f;
    let g = f.transpose() * f;
    let id = Mat::identity(g.nrows(), g.nrows());
    if max_abs(&(g - &id)) > 1e-10 {
        return Err(SymplError::InvalidArgument(
            "plane basis must be orthonormal".into(),
        ));
    }
    let c = plane.conjugate().f;
    let s = f * f.transpose() * zeta + &c * c.transpose() / zeta;
    Ok(SymplecticMatrix::from_trusted(s))
}

/// Squeeze a state along a Lagrangian plane of its full phase space.
pub fn approx_inf_squeezed(
    state: &GaussianState,
    plane: &SubspaceBasis,
    zeta: f64,
) -> Result<GaussianState> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(SymplError::InvalidArgument(
            "zeta must lie in (0, 1]".into(),
        ));
    }
    if plane.f.nrows() != state.v.nrows() {
        return Err(SymplError::DimensionMismatch("plane vs state".into()));
    }
    let s = plane_squeezer(plane, zeta)?;
    apply_gaussian_unitary(state, &s, None)
}

/// Beamsplitter-like `H(τ)` on (signal, environment), interleaved.
pub fn h_tau(tau: f64) -> Mat {
    let a = (1.0 - tau).sqrt();
    let b = tau.sqrt();
    Mat::from_row_slice(
        4,
        4,
        &[
            a, 0.0, b, 0.0, 0.0, a, 0.0, b, -b, 0.0, a, 0.0, 0.0, -b, 0.0, a,
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementSpec {
    IdealHomodyne {
        plane: SubspaceBasis,
    },
    IdealHeterodyne,
    /// Mix the measured modes with `env`, then homodyne `plane` on all of them.
    GeneralDyne {
        mix: SymplecticMatrix,
        env: GaussianState,
        plane: SubspaceBasis,
    },
}

impl MeasurementSpec {
    /// Heterodyne as a general-dyne: `H(1/2)` with vacuum, `q` of the first
    /// output and `p` of the second, mode by mode.
    pub fn heterodyne_as_general_dyne(n_measured: usize) -> Result<Self> {
        let m = n_measured;
        let mut mix = Mat::identity(4 * m, 4 * m);
        let h = h_tau(0.5);
        // ordering: measured modes 0..m, then env modes m..2m; pair j with m+j
        let mut idx = Vec::new();
        let mut cols = Vec::new();
        for j in 0..m {
            let c = [2 * j, 2 * j + 1, 2 * (m + j), 2 * (m + j) + 1];
            for r in 0..4 {
                for s in 0..4 {
                    mix[(c[r], c[s])] = h[(r, s)];
                }
            }
            idx.push(2 * j);
            idx.push(2 * (m + j) + 1);
            cols.push(c);
        }
        let f = Mat::from_fn(4 * m, 2 * m, |r, c| if r == idx[c] { 1.0 } else { 0.0 });
        Ok(MeasurementSpec::GeneralDyne {
            mix: SymplecticMatrix::new(mix, 1e-12)?,
            env: vacuum(m)?,
            plane: SubspaceBasis::new(f, 1e-12)?,
        })
    }
}

/// Perform a Gaussian measurement and return the posterior.
///
/// For heterodyne the outcome is the complex amplitude `(q, p)` per mode, with
/// POVM elements `ρ(η, Id)`.
pub fn measure(
    state: &GaussianState,
    measured: &[usize],
    spec: &MeasurementSpec,
    outcome: &Vector,
) -> Result<Conditioned> {
    match spec {
        MeasurementSpec::IdealHomodyne { plane } => {
            condition_on_homodyne(state, measured, plane, outcome)
        }
        MeasurementSpec::IdealHeterodyne => {
            let m = measured.len();
            if outcome.len() != 2 * m {
                return Err(SymplError::DimensionMismatch(
                    "heterodyne outcome length".into(),
                ));
            }
            let spec = MeasurementSpec::heterodyne_as_general_dyne(m)?;
            // homodyne coordinates y relate to the amplitude by η = diag(√2, -√2) y
            let y = Vector::from_fn(2 * m, |i, _| {
                if i % 2 == 0 {
                    outcome[i] / std::f64::consts::SQRT_2
                } else {
                    -outcome[i] / std::f64::consts::SQRT_2
                }
            });
            let mut out = measure(state, measured, &spec, &y)?;
            let jac = 2f64.powi(m as i32);
            out.density /= jac;
            let scale = Mat::from_diagonal(&Vector::from_fn(2 * m, |i, _| {
                if i % 2 == 0 {
                    std::f64::consts::SQRT_2
                } else {
                    -std::f64::consts::SQRT_2
                }
            }));
            out.outcome_mean = &scale * &out.outcome_mean;
            out.outcome_cov = &scale * &out.outcome_cov * &scale;
            Ok(out)
        }
        MeasurementSpec::GeneralDyne { mix, env, plane } => {
            let st = state.interleaved();
            let n = st.n_modes();
            check_modes(n, measured, "measured")?;
            let m = measured.len();
            let ne = env.n_modes();
            if mix.n_modes() != m + ne {
                return Err(SymplError::DimensionMismatch(
                    "mix acts on measured + env modes".into(),
                ));
            }
            // reorder: measured modes first, then the rest, then the environment
            let keep = complement(n, measured);
            let mut order = measured.to_vec();
            order.extend(&keep);
            let reordered = partial_trace(&st, &order)?;
            let joint = tensor(&reordered, env);
            let total = n + ne;
            let mut big = Mat::identity(2 * total, 2 * total);
            let act: Vec<usize> = (0..m).chain(n..n + ne).collect();
            let ci = mode_coordinates(&act);
            let mm = mix.interleaved();
            for (r, &i) in ci.iter().enumerate() {
                for (c, &j) in ci.iter().enumerate() {
                    big[(i, j)] = mm[(r, c)];
                }
            }
            let mixed = apply_gaussian_unitary(&joint, &SymplecticMatrix::from_trusted(big), None)?;
            let mut out = condition_on_homodyne(&mixed, &act, plane, outcome)?;
            // posterior comes back ordered as `keep` (ascending), matching the contract
            out.state = out.state.interleaved();
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{random_symplectic, squeezer};

    #[test]
    fn named_states() {
        let v = vacuum(1).unwrap();
        assert_eq!(v.v, Mat::identity(2, 2));
        let t = thermal(&[0.5]).unwrap();
        assert_eq!(t.v, Mat::identity(2, 2) * 2.0);
        assert_eq!(coherent(&Vector::zeros(2)).unwrap(), v);
        assert!(matches!(thermal(&[-1.0]), Err(SymplError::NonPositive(..))));
        let s = squeezed_vacuum(&[0.3]).unwrap();
        assert!((s.v[(0, 0)] - (-0.6f64).exp()).abs() < 1e-15);
        assert!(s.physicality_margin().abs() < 1e-12);
    }

    #[test]
    fn unphysical_state_rejected() {
        let v = Mat::from_diagonal(&Vector::from_vec(vec![0.5, 0.5]));
        assert!(GaussianState::new(Vector::zeros(2), v).is_err());
    }

    #[test]
    fn squeezing_the_vacuum() {
        let z = SymplecticMatrix::from_trusted(squeezer(0.1));
        let out = apply_gaussian_unitary(&vacuum(1).unwrap(), &z, None).unwrap();
        assert!((out.v[(0, 0)] - 0.01).abs() < 1e-15);
        assert!((out.v[(1, 1)] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_wigner_peak() {
        let w = wigner_eval(&vacuum(1).unwrap(), &Vector::zeros(2)).unwrap();
        assert!((w - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let c = characteristic_eval(&thermal(&[1.0]).unwrap(), &Vector::zeros(2)).unwrap();
        assert_eq!(c, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn wigner_singular_covariance() {
        let s = GaussianState::unchecked(Vector::zeros(2), Mat::zeros(2, 2));
        assert_eq!(
            wigner_eval(&s, &Vector::zeros(2)),
            Err(SymplError::SingularCovariance)
        );
    }

    #[test]
    fn wigner_integrates_to_one() {
        let s0 = random_symplectic(1, 3, 1.5).unwrap();
        let st = apply_gaussian_unitary(
            &thermal(&[0.3]).unwrap(),
            &s0,
            Some(&Vector::from_vec(vec![0.4, -0.2])),
        )
        .unwrap();
        let h = 0.05;
        let mut sum = 0.0;
        for i in -240..=240 {
            for j in -240..=240 {
                let u = Vector::from_vec(vec![i as f64 * h, j as f64 * h]);
                sum += wigner_eval(&st, &u).unwrap();
            }
        }
        assert!((sum * h * h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_mode_squeezed_marginal_is_thermal() {
        let r = 0.7_f64;
        let t = partial_trace(&two_mode_squeezed(r), &[1]).unwrap();
        let want = thermal(&[r.sinh().powi(2)]).unwrap();
        assert!(max_abs(&(t.v - want.v)) < 1e-12);
        assert!(two_mode_squeezed(r).physicality_margin() > -1e-12);
    }

    #[test]
    fn homodyne_on_product_state() {
        let st = tensor(&thermal(&[0.2]).unwrap(), &vacuum(1).unwrap());
        let plane = SubspaceBasis::q_plane(1, &[0]).unwrap();
        for eta in [-1.0, 0.0, 2.5] {
            let c = condition_on_homodyne(&st, &[0], &plane, &Vector::from_vec(vec![eta])).unwrap();
            assert_eq!(c.state.v, Mat::identity(2, 2));
            assert_eq!(c.state.x_bar, Vector::zeros(2));
        }
    }

    #[test]
    fn homodyne_on_squeezed_concentrates() {
        let xi = 4.0;
        let st = tensor(&squeezed_vacuum(&[xi]).unwrap(), &vacuum(1).unwrap());
        let plane = SubspaceBasis::q_plane(1, &[0]).unwrap();
        let c = condition_on_homodyne(&st, &[0], &plane, &Vector::zeros(1)).unwrap();
        assert!((c.outcome_cov[(0, 0)] - (-2.0 * xi).exp()).abs() < 1e-15);
    }

    #[test]
    fn heterodyne_matches_povm_covariance() {
        // posterior of a heterodyne with POVM ρ(η, Id): Schur complement with V_mm + Id
        let s0 = random_symplectic(2, 5, 2.0).unwrap();
        let st = apply_gaussian_unitary(&thermal(&[0.4, 0.1]).unwrap(), &s0, None).unwrap();
        let eta = Vector::from_vec(vec![0.3, -0.8]);
        let out = measure(&st, &[0], &MeasurementSpec::IdealHeterodyne, &eta).unwrap();
        let vmm = select(&st.v, &[0, 1], &[0, 1]) + Mat::identity(2, 2);
        let c = select(&st.v, &[2, 3], &[0, 1]);
        let inv = vmm.clone().try_inverse().unwrap();
        let want_v = select(&st.v, &[2, 3], &[2, 3]) - &c * &inv * c.transpose();
        let want_x = &c * &inv * &eta;
        assert!(max_abs(&(&out.state.v - want_v)) < 1e-12);
        assert!((&out.state.x_bar - want_x).amax() < 1e-12);
        assert!(max_abs(&(&out.outcome_cov - vmm)) < 1e-12);
    }

    #[test]
    fn approx_squeeze_of_vacuum() {
        let plane = SubspaceBasis::q_plane(1, &[0]).unwrap();
        let st = approx_inf_squeezed(&vacuum(1).unwrap(), &plane, 1e-3).unwrap();
        assert!((st.v[(0, 0)] - 1e-6).abs() < 1e-18);
        assert!((st.v[(1, 1)] - 1e6).abs() < 1e-6);
        let same = approx_inf_squeezed(&vacuum(1).unwrap(), &plane, 1.0).unwrap();
        assert_eq!(same.v, Mat::identity(2, 2));
    }

    #[test]
    fn projector_approximation_has_mean_on_plane() {
        let plane = SubspaceBasis::q_plane(2, &[0, 1]).unwrap();
        let p = InfSqueezedProjector::new(plane, Vector::from_vec(vec![1.0, -2.0])).unwrap();
        let st = p.approximate(1e-2).unwrap();
        assert!((st.x_bar[0] - 1.0).abs() < 1e-12 && (st.x_bar[2] + 2.0).abs() < 1e-12);
        assert!(st.x_bar[1].abs() < 1e-12);
    }
}
