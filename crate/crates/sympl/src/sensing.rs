//! Gaussian Fisher information and exceptional-point probe models.
//!
//! A probe model maps the parameter `θ` to a linear response `G_θ` and
//! produces `x̄_out = (Id - G_θ) x̄_in` and
//! `V_out = (Id - G_θ) V_in (Id - G_θ)ᵗ + G_θ R V_env Rᵗ G_θᵗ`.
//! Everything is stored in interleaved ordering.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SymplError};
use crate::linalg::{self, max_abs, CMat, Mat, Vector};
use crate::states::GaussianState;
use crate::symplectic::{self, convert_ordering, omega_mat, ModeOrdering};

/// `det V` above which the large-noise approximation of `Φ` may be used.
pub const APPROX_DET_THRESHOLD: f64 = 1e6;
/// Eigenvalue magnitude of the response denominator treated as a pole.
pub const POLE_TOL: f64 = 1e-8;

type ResponseFn = Arc<dyn Fn(f64) -> Result<Mat> + Send + Sync>;

/// Parameter dependence of the response matrix.
#[derive(Clone)]
pub enum Response {
    /// `G_θ = scale · (M₀ + θ M₁)⁻¹`.
    Pencil { scale: f64, m0: Mat, m1: Mat },
    /// Arbitrary `θ ↦ G_θ`, differentiated numerically.
    Custom(ResponseFn),
}

impl std::fmt::Debug for Response {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Response::Pencil { scale, m0, m1 } => f
                .debug_struct("Pencil")
                .field("scale", scale)
                .field("m0", m0)
                .field("m1", m1)
                .finish(),
            Response::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Linear probe: response, environment coupling and input state.
#[derive(Debug, Clone)]
pub struct ProbeModel {
    pub response: Response,
    pub r: Mat,
    pub v_env: Mat,
    pub input: GaussianState,
}

/// How a derivative was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    Analytic,
    Richardson,
}

/// Output moments and their `θ` derivatives.
#[derive(Debug, Clone)]
pub struct OutputMoments {
    pub state: GaussianState,
    pub dx: Vector,
    pub dv: Mat,
    pub method: DerivativeMethod,
}

fn richardson<T, F>(f: F, theta: f64, h: f64) -> Result<T>
where
    F: Fn(f64) -> Result<T>,
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + Clone,
{
    let d = |h: f64| -> Result<T> { Ok((f(theta + h)? - f(theta - h)?) * (0.5 / h)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok(fine * (4.0 / 3.0) - coarse * (1.0 / 3.0))
}

/// Central-difference step `1e-6 · max(1, |θ|)`.
pub fn default_step(theta: f64) -> f64 {
    1e-6 * theta.abs().max(1.0)
}

fn check_poles(denominator: &Mat, theta: f64) -> Result<()> {
    let eig = denominator.clone().complex_eigenvalues();
    let scale = max_abs(denominator).max(1.0);
    if eig.iter().any(|z| z.norm() < POLE_TOL * scale) {
        return Err(SymplError::SingularResponse(theta));
    }
    Ok(())
}

impl ProbeModel {
    pub fn new(response: Response, r: Mat, v_env: Mat, input: GaussianState) -> Result<Self> {
        let d = input.v.nrows();
        if r.nrows() != d || r.ncols() != v_env.nrows() {
            return Err(SymplError::DimensionMismatch(
                "R must map env phase space into probe phase space".into(),
            ));
        }
        linalg::require_symmetric(&v_env, 1e-10)?;
        if let Response::Pencil { m0, m1, .. } = &response {
            if m0.shape() != (d, d) || m1.shape() != (d, d) {
                return Err(SymplError::DimensionMismatch(
                    "pencil matrices vs probe".into(),
                ));
            }
        }
        Ok(Self {
            response,
            r,
            v_env,
            input: input.interleaved(),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.input.v.nrows() / 2
    }

    pub fn with_input(&self, input: GaussianState) -> Result<Self> {
        Self::new(
            self.response.clone(),
            self.r.clone(),
            self.v_env.clone(),
            input,
        )
    }

    /// `G_θ`.
    pub fn response_at(&self, theta: f64) -> Result<Mat> {
        match &self.response {
            Response::Pencil { scale, m0, m1 } => {
                let den = m0 + m1 * theta;
                check_poles(&den, theta)?;
                let inv = den
                    .try_inverse()
                    .ok_or(SymplError::SingularResponse(theta))?;
                Ok(inv * *scale)
            }
            Response::Custom(f) => f(theta),
        }
    }

    fn response_derivative(&self, theta: f64, g: &Mat) -> Result<(Mat, DerivativeMethod)> {
        match &self.response {
            Response::Pencil { scale, m1, .. } => {
                Ok((-(g * m1 * g) / *scale, DerivativeMethod::Analytic))
            }
            Response::Custom(_) => Ok((
                richardson(|t| self.response_at(t), theta, default_step(theta))?,
                DerivativeMethod::Richardson,
            )),
        }
    }

    /// Environment noise `R V_env Rᵗ`.
    pub fn env_noise(&self) -> Mat {
        &self.r * &self.v_env * self.r.transpose()
    }

    /// The output state as a Gaussian channel applied to the input.
    pub fn channel(&self, theta: f64) -> Result<crate::channels::GaussianChannel> {
        let g = self.response_at(theta)?;
        let d = g.nrows();
        let n = linalg::symmetrize(&(&g * self.env_noise() * g.transpose()));
        crate::channels::GaussianChannel::new(Mat::identity(d, d) - g, n, None)
    }

    pub fn output_state(&self, theta: f64) -> Result<GaussianState> {
        Ok(self.output_moments(theta)?.state)
    }

    pub fn output_moments(&self, theta: f64) -> Result<OutputMoments> {
        let g = self.response_at(theta)?;
        let (dg, method) = self.response_derivative(theta, &g)?;
        let d = g.nrows();
        let t = Mat::identity(d, d) - &g;
        let ne = self.env_noise();
        let vin = &self.input.v;
        let x = &t * &self.input.x_bar;
        let v = linalg::symmetrize(&(&t * vin * t.transpose() + &g * &ne * g.transpose()));
        let dx = -(&dg * &self.input.x_bar);
        let a = -(&dg * vin * t.transpose()) + &dg * &ne * g.transpose();
        let dv = linalg::symmetrize(&(&a + a.transpose()));
        Ok(OutputMoments {
            state: GaussianState::unchecked(x, v),
            dx,
            dv,
            method,
        })
    }
}

/// Real form on interleaved `(q, p)` of a complex matrix acting on mode amplitudes.
pub fn realify(z: &CMat) -> Mat {
    let n = z.nrows();
    let m = z.ncols();
    let mut out = Mat::zeros(2 * n, 2 * m);
    for i in 0..n {
        for j in 0..m {
            let c = z[(i, j)];
            out[(2 * i, 2 * j)] = c.re;
            out[(2 * i, 2 * j + 1)] = -c.im;
            out[(2 * i + 1, 2 * j)] = c.im;
            out[(2 * i + 1, 2 * j + 1)] = c.re;
        }
    }
    out
}

/// Intrinsic noise channel attached to one system mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rate", rename_all = "snake_case")]
pub enum NoiseChannel {
    Loss(f64),
    Gain(f64),
}

/// Probe built from input-output theory at zero detuning.
///
/// `h0` is the non-Hermitian effective Hamiltonian at `θ = 0` (damping
/// included), `θ` shifts every resonance by `θκ`, each mode couples to its
/// probing channel at rate `κ`, and `noise[j]` describes the intrinsic channel
/// of mode `j`. Then `G_θ = κ (i H_θ)⁻¹`.
pub fn langevin_model(
    h0: &CMat,
    kappa: f64,
    noise: &[NoiseChannel],
    input: GaussianState,
) -> Result<ProbeModel> {
    let n = h0.nrows();
    if !(kappa > 0.0) {
        return Err(SymplError::NonPositive(kappa, 0));
    }
    if noise.len() != n {
        return Err(SymplError::DimensionMismatch(
            "one noise channel per mode".into(),
        ));
    }
    let i = Complex64::new(0.0, 1.0);
    let m0 = realify(&h0.map(|z| z * i));
    let m1 = realify(&(CMat::identity(n, n) * (i * kappa)));
    let mut r = Mat::zeros(2 * n, 2 * n);
    for (j, ch) in noise.iter().enumerate() {
        let (rate, sq, sp) = match *ch {
            NoiseChannel::Loss(e) => (e, 1.0, 1.0),
            // the gain channel enters conjugated and with a minus sign
            NoiseChannel::Gain(e) => (e, -1.0, 1.0),
        };
        if rate < 0.0 {
            return Err(SymplError::NonPositive(rate, j));
        }
        let a = (rate / kappa).sqrt();
        r[(2 * j, 2 * j)] = sq * a;
        r[(2 * j + 1, 2 * j + 1)] = sp * a;
    }
    ProbeModel::new(
        Response::Pencil {
            scale: kappa,
            m0,
            m1,
        },
        r,
        Mat::identity(2 * n, 2 * n),
        input,
    )
}

/// Two coupled modes with loss `η₁` on the first and gain `η₂` on the second.
///
/// The exceptional point sits at `g = (η₁+κ)/2 = (η₂-κ)/2`; with `strict`
/// set, parameters off that point are rejected.
pub fn ep_two_mode_model(
    kappa: f64,
    g: f64,
    eta1: f64,
    eta2: f64,
    strict: bool,
) -> Result<ProbeModel> {
    if !(kappa > 0.0) || !(g > 0.0) {
        return Err(SymplError::InvalidArgument(
            "kappa and g must be positive".into(),
        ));
    }
    if strict {
        let (a, b) = ((eta1 + kappa) / 2.0, (eta2 - kappa) / 2.0);
        if (a - g).abs() > 1e-12 * g || (b - g).abs() > 1e-12 * g {
            return Err(SymplError::InvalidArgument(format!(
                "not at the exceptional point: (η₁+κ)/2 = {a}, (η₂-κ)/2 = {b}, g = {g}"
            )));
        }
    }
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let h0 = CMat::from_row_slice(
        2,
        2,
        &[
            c(0.0, -(eta1 + kappa) / 2.0),
            c(g, 0.0),
            c(g, 0.0),
            c(0.0, (eta2 - kappa) / 2.0),
        ],
    );
    let input = crate::states::vacuum(2)?;
    langevin_model(
        &h0,
        kappa,
        &[NoiseChannel::Loss(eta1), NoiseChannel::Gain(eta2)],
        input,
    )
}

/// The EP model with the response matrix as printed (grouped ordering) and
/// `R` the printed diagonal coupling. Kept for comparison.
pub fn ep_two_mode_printed(kappa: f64, g: f64, eta1: f64, eta2: f64) -> Result<ProbeModel> {
    let m0 = Mat::from_row_slice(
        4,
        4,
        &[
            -1.0, 0.0, 0.0, 1.0, //
            0.0, 1.0, 1.0, 0.0, //
            0.0, -1.0, -1.0, 0.0, //
            -1.0, 0.0, 0.0, 1.0,
        ],
    );
    let m1 = Mat::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, -1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ],
    );
    let (a, b) = ((eta1 / kappa).sqrt(), (eta2 / kappa).sqrt());
    let r = Mat::from_diagonal(&Vector::from_vec(vec![a, -b, a, b]));
    let to = |m: &Mat| convert_ordering(m, ModeOrdering::Grouped, ModeOrdering::Interleaved);
    ProbeModel::new(
        Response::Pencil {
            scale: kappa / (2.0 * g),
            m0: to(&m0),
            m1: to(&m1),
        },
        to(&r),
        Mat::identity(4, 4),
        crate::states::vacuum(2)?,
    )
}

/// Single resonant mode whose probing loss is balanced by an equal gain:
/// `G_θ = κ (iθκ)⁻¹` has a simple pole, the conventional-sensor control.
pub fn balanced_single_mode_model(kappa: f64) -> Result<ProbeModel> {
    let h0 = CMat::from_element(1, 1, Complex64::new(0.0, 0.0));
    langevin_model(
        &h0,
        kappa,
        &[NoiseChannel::Gain(kappa)],
        crate::states::vacuum(1)?,
    )
}

/// Heterodyne Fisher information split into mean and covariance parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalFisher {
    pub i_mu: f64,
    pub i_sigma: f64,
}

impl ClassicalFisher {
    pub fn total(&self) -> f64 {
        self.i_mu + self.i_sigma
    }
}

/// `I_μ = μ'ᵗ Σ⁻¹ μ'` and `I_Σ = ½ Tr[Σ⁻¹ Σ' Σ⁻¹ Σ']`.
pub fn classical_fisher(sigma: &Mat, dmu: &Vector, dsigma: &Mat) -> Result<ClassicalFisher> {
    let chol = sigma.clone().cholesky().ok_or(SymplError::SingularSigma)?;
    let a = chol.solve(dsigma);
    let i_sigma = 0.5 * (&a * &a).trace();
    let i_mu = dmu.dot(&chol.solve(dmu));
    Ok(ClassicalFisher { i_mu, i_sigma })
}

/// Heterodyne on every mode: `μ = x̄`, `Σ = V + Id`.
pub fn heterodyne_fisher(state: &GaussianState, dx: &Vector, dv: &Mat) -> Result<ClassicalFisher> {
    let d = state.v.nrows();
    classical_fisher(&(&state.v + Mat::identity(d, d)), dx, dv)
}

/// How `Φ` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMethod {
    /// Always solve `dV = VΦV - ΩΦΩᵗ` exactly.
    Exact,
    /// Use `Φ ≈ V⁻¹ dV V⁻¹` when `det V` exceeds the threshold.
    Auto { threshold: f64 },
}

#[derive(Debug, Clone)]
pub struct QuantumFisher {
    pub qfi_xbar: f64,
    pub qfi_v: f64,
    pub phi: Mat,
    pub residual: f64,
    pub approx_used: bool,
}

impl QuantumFisher {
    pub fn total(&self) -> f64 {
        self.qfi_xbar + self.qfi_v
    }
}

/// Residual `‖VΦV - ΩΦΩᵗ - dV‖_max`.
pub fn phi_residual(v: &Mat, phi: &Mat, dv: &Mat) -> f64 {
    let om = omega_mat(v.nrows() / 2);
    max_abs(&(v * phi * v - &om * phi * om.transpose() - dv))
}

/// Solves `dV = VΦV - ΩΦΩᵗ` in Williamson coordinates.
///
/// With `V = A D Aᵗ` and `Φ = A⁻ᵗ Φ̃ A⁻¹` the equation decouples into 2×2
/// systems on the entries `(i, j)` and `(i', j')` of conjugate coordinates.
/// Pure pairs (`ν_i ν_j = 1`) take the minimum-norm solution.
///
/// A few rounds of iterative refinement recover the accuracy lost when `V`
/// is badly conditioned.
pub fn solve_phi(v: &Mat, dv: &Mat) -> Result<Mat> {
    let n = linalg::require_even_square(v, "V")?;
    let w = symplectic::williamson(v)?;
    let nu: Vec<f64> = w.diag.iter().flat_map(|&x| [x, x]).collect();
    let mut phi = phi_step(&w.s, &nu, dv);
    let om = omega_mat(n);
    let mut best = phi_residual(v, &phi, dv);
    for _ in 0..4 {
        if best == 0.0 {
            break;
        }
        let r = dv - (v * &phi * v - &om * &phi * om.transpose());
        let cand = &phi + phi_step(&w.s, &nu, &linalg::symmetrize(&r));
        let res = phi_residual(v, &cand, dv);
        if res >= best {
            break;
        }
        phi = cand;
        best = res;
    }
    Ok(phi)
}

fn phi_step(s: &Mat, nu: &[f64], dv: &Mat) -> Mat {
    let dim = nu.len();
    let dt = s * dv * s.transpose();
    let sign = |i: usize| if i.is_multiple_of(2) { -1.0 } else { 1.0 };
    let mut pt = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (ip, jp) = (i ^ 1, j ^ 1);
            let p = nu[i] * nu[j];
            let s = sign(i) * sign(j);
            pt[(i, j)] = if p - 1.0 > 1e-9 {
                (p * dt[(i, j)] + s * dt[(ip, jp)]) / (p * p - 1.0)
            } else {
                (dt[(i, j)] - s * dt[(ip, jp)]) / 4.0
            };
        }
    }
    linalg::symmetrize(&(s.transpose() * pt * s))
}

/// Quantum Fisher information of a Gaussian family at one point.
pub fn quantum_fisher(
    state: &GaussianState,
    dx: &Vector,
    dv: &Mat,
    method: PhiMethod,
) -> Result<QuantumFisher> {
    let v = &state.v;
    let d = v.nrows();
    if dx.len() != d || dv.shape() != (d, d) {
        return Err(SymplError::DimensionMismatch("derivatives vs state".into()));
    }
    linalg::require_symmetric(dv, 1e-9 * max_abs(dv).max(1.0))?;
    let chol = v
        .clone()
        .cholesky()
        .ok_or(SymplError::NotPositiveDefinite)?;
    let qfi_xbar = dx.dot(&chol.solve(dx));
    let use_approx = matches!(method, PhiMethod::Auto { threshold } if v.determinant() > threshold);
    let phi = if use_approx {
        let vinv = chol.inverse();
        linalg::symmetrize(&(&vinv * dv * &vinv))
    } else {
        solve_phi(v, dv)?
    };
    let residual = phi_residual(v, &phi, dv);
    if !use_approx {
        let scale = max_abs(dv).max(1.0);
        if residual > 1e-10 * scale {
            return Err(SymplError::IllConditionedSolve(residual));
        }
    }
    let qfi_v = 0.5 * (&phi * dv).trace();
    Ok(QuantumFisher {
        qfi_xbar,
        qfi_v,
        phi,
        residual,
        approx_used: use_approx,
    })
}

/// Fisher components of a probe at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub theta: f64,
    pub i_mu: f64,
    pub i_sigma: f64,
    pub qfi_xbar: f64,
    pub qfi_v: f64,
    pub approx_used: bool,
    pub derivative: DerivativeMethod,
}

pub fn fisher_at(model: &ProbeModel, theta: f64, method: PhiMethod) -> Result<FisherResult> {
    let out = model.output_moments(theta)?;
    let c = heterodyne_fisher(&out.state, &out.dx, &out.dv)?;
    let q = quantum_fisher(&out.state, &out.dx, &out.dv, method)?;
    Ok(FisherResult {
        theta,
        i_mu: c.i_mu,
        i_sigma: c.i_sigma,
        qfi_xbar: q.qfi_xbar,
        qfi_v: q.qfi_v,
        approx_used: q.approx_used,
        derivative: out.method,
    })
}

/// Quantity fitted by [`scaling_exponent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherQuantity {
    IMu,
    ISigma,
    QfiXbar,
    QfiV,
}

impl FisherQuantity {
    pub fn pick(&self, r: &FisherResult) -> f64 {
        match self {
            FisherQuantity::IMu => r.i_mu,
            FisherQuantity::ISigma => r.i_sigma,
            FisherQuantity::QfiXbar => r.qfi_xbar,
            FisherQuantity::QfiV => r.qfi_v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(SymplError::InvalidArgument(
            "need at least three points".into(),
        ));
    }
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        if !(x > 0.0) {
            return Err(SymplError::NonPositive(x, i));
        }
        if !(y > 0.0) {
            return Err(SymplError::NonPositive(y, i));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
    })
}

/// Log-spaced grid with `per_decade` points per decade, endpoints included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(SymplError::InvalidArgument(
            "need 0 < lo < hi and per_decade > 0".into(),
        ));
    }
    let decades = (hi / lo).log10();
    let steps = ((decades * per_decade as f64).ceil() as usize).max(1);
    Ok((0..=steps)
        .map(|k| lo * (hi / lo).powf(k as f64 / steps as f64))
        .collect())
}

/// Fitted log-log slope of a Fisher component over `grid`. Grids sparser
/// than six points per decade are rejected.
///
/// Near an exceptional point `V_out` grows like `θ^{-4}` while some of its
/// symplectic eigenvalues stay close to 1, so the exact `Φ` solve loses all
/// accuracy; `PhiMethod::Auto` switches to the large-noise form there.
pub fn scaling_exponent(
    model: &ProbeModel,
    grid: &[f64],
    quantity: FisherQuantity,
    method: PhiMethod,
) -> Result<SlopeFit> {
    let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().cloned().fold(0.0, f64::max);
    let decades = (hi / lo).log10().max(1e-12);
    if (grid.len() as f64) < 6.0 * decades {
        return Err(SymplError::InvalidArgument(
            "grid needs at least six points per decade".into(),
        ));
    }
    let ys = grid
        .iter()
        .map(|&t| fisher_at(model, t, method).map(|r| quantity.pick(&r)))
        .collect::<Result<Vec<_>>>()?;
    log_log_fit(grid, &ys)
}

/// Fidelity `F = |⟨ψ|φ⟩|²`-type overlap of two single-mode Gaussian states.
pub fn fidelity_single_mode(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.v.nrows() != 2 || b.v.nrows() != 2 {
        return Err(SymplError::DimensionMismatch("single-mode fidelity".into()));
    }
    let sum = &a.v + &b.v;
    let delta = sum.determinant() / 4.0;
    let small = (a.v.determinant() - 1.0) * (b.v.determinant() - 1.0) / 16.0;
    let d = &a.x_bar - &b.x_bar;
    let inv = sum.try_inverse().ok_or(SymplError::SingularCovariance)?;
    let expo = (-0.5 * d.dot(&(inv * &d))).exp();
    Ok(expo / ((delta + small).sqrt() - small.max(0.0).sqrt()))
}

/// `8 (1 - √F(θ-h, θ+h)) / (2h)²`, the Bures-metric form of the QFI.
pub fn fidelity_qfi<F>(family: F, theta: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<GaussianState>,
{
    let f = fidelity_single_mode(&family(theta - h)?, &family(theta + h)?)?;
    Ok(8.0 * (1.0 - f.sqrt()) / (4.0 * h * h))
}

/// `W_θ = S_θ⁻¹ dS_θ/dθ` with a Richardson-refined central difference.
pub fn sensitivity_matrix<F>(s_of_theta: F, theta: f64, h: Option<f64>) -> Result<Mat>
where
    F: Fn(f64) -> Result<Mat>,
{
    let h = h.unwrap_or_else(|| default_step(theta));
    let s = s_of_theta(theta)?;
    let ds = richardson(&s_of_theta, theta, h)?;
    Ok(symplectic::inverse(&s)? * ds)
}

/// `W_θ = (ΩM - ½Id)⁻¹ Ω dM (ΩM + ½Id)⁻¹` together with the smallest
/// singular values of both factors.
#[derive(Debug, Clone)]
pub struct CayleySensitivity {
    pub w: Mat,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
}

pub fn sensitivity_matrix_cayley(m: &Mat, dm: &Mat, tol: f64) -> Result<CayleySensitivity> {
    let n = linalg::require_even_square(m, "M")?;
    let om = omega_mat(n);
    let id = Mat::identity(2 * n, 2 * n);
    let minus = &om * m - &id * 0.5;
    let plus = &om * m + &id * 0.5;
    let sigma_minus = linalg::smallest_singular_value(&minus);
    let sigma_plus = linalg::smallest_singular_value(&plus);
    let worst = sigma_minus.min(sigma_plus);
    if worst < tol {
        return Err(SymplError::SingularFactor(worst));
    }
    let a = minus
        .try_inverse()
        .ok_or(SymplError::SingularFactor(sigma_minus))?;
    let b = plus
        .try_inverse()
        .ok_or(SymplError::SingularFactor(sigma_plus))?;
    Ok(CayleySensitivity {
        w: a * &om * dm * b,
        sigma_minus,
        sigma_plus,
    })
}
