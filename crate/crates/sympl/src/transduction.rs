//! Generalized teleportation and adaptive quantum transduction.
//!
//! The transducer `S` acts on the modes `in ∪ anc` (columns) and produces
//! `out ∪ idl` (rows). The ancilla is squeezed along the Lagrangian plane
//! `l_z` and the idlers are homodyned along `l_h`; the conjugate planes are
//! `l_z' = Ω l_z` and `l_h' = Ω l_h`.

use serde::{Deserialize, Serialize};

use crate::channels::GaussianChannel;
use crate::error::{Result, SymplError};
use crate::linalg::{self, max_abs, Mat, Vector};
use crate::symplectic::{self, omega_mat, SubspaceBasis, SubspaceKind, SymplecticMatrix};

/// Condition number above which `S_{h,z'}` counts as singular.
pub const FEEDFORWARD_COND_LIMIT: f64 = 1e12;

/// Mode split of a transducer together with the squeezing and measurement planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub n_modes: usize,
    pub in_modes: Vec<usize>,
    pub anc_modes: Vec<usize>,
    pub out_modes: Vec<usize>,
    pub idl_modes: Vec<usize>,
    /// Basis of `l_z` in the phase space of `anc_modes` (listed order).
    #[serde(with = "crate::json::matrix")]
    pub l_z: Mat,
    /// Basis of `l_h` in the phase space of `idl_modes` (listed order).
    #[serde(with = "crate::json::matrix")]
    pub l_h: Mat,
}

fn check_cover(n: usize, a: &[usize], b: &[usize], what: &str) -> Result<()> {
    let mut seen = vec![false; n];
    for &m in a.iter().chain(b) {
        if m >= n || seen[m] {
            return Err(SymplError::InvalidArgument(format!(
                "{what}: mode {m} repeated or out of range"
            )));
        }
        seen[m] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(SymplError::InvalidArgument(format!(
            "{what}: modes do not cover the system"
        )));
    }
    Ok(())
}

impl PartitionSpec {
    pub fn new(
        n_modes: usize,
        in_modes: Vec<usize>,
        anc_modes: Vec<usize>,
        out_modes: Vec<usize>,
        idl_modes: Vec<usize>,
        l_z: Mat,
        l_h: Mat,
    ) -> Result<Self> {
        check_cover(n_modes, &in_modes, &anc_modes, "in/anc")?;
        check_cover(n_modes, &out_modes, &idl_modes, "out/idl")?;
        if in_modes.len() != out_modes.len() {
            return Err(SymplError::DimensionMismatch(
                "in and out must have equal size".into(),
            ));
        }
        if anc_modes.is_empty() {
            return Err(SymplError::InvalidArgument(
                "at least one ancilla mode is required".into(),
            ));
        }
        for (plane, modes, what) in [(&l_z, &anc_modes, "l_z"), (&l_h, &idl_modes, "l_h")] {
            let b = SubspaceBasis::new(plane.clone(), 1e-10)?;
            if plane.nrows() != 2 * modes.len() || b.kind != SubspaceKind::Lagrangian {
                return Err(SymplError::InvalidArgument(format!(
                    "{what} must be Lagrangian in its block"
                )));
            }
            if max_abs(&(plane.transpose() * plane - Mat::identity(plane.ncols(), plane.ncols())))
                > 1e-10
            {
                return Err(SymplError::InvalidArgument(format!(
                    "{what} basis must be orthonormal"
                )));
            }
        }
        Ok(Self {
            n_modes,
            in_modes,
            anc_modes,
            out_modes,
            idl_modes,
            l_z,
            l_h,
        })
    }

    /// Mode 0 is the signal on both sides, every other mode is ancilla and
    /// idler, and both planes are spanned by `q` quadratures.
    pub fn default_for(n_modes: usize) -> Result<Self> {
        if n_modes < 2 {
            return Err(SymplError::InvalidArgument(
                "need at least two modes".into(),
            ));
        }
        let rest: Vec<usize> = (1..n_modes).collect();
        let q = SubspaceBasis::q_plane(n_modes - 1, &(0..n_modes - 1).collect::<Vec<_>>())?.f;
        Self::new(n_modes, vec![0], rest.clone(), vec![0], rest, q.clone(), q)
    }

    /// Explicit-index variant: any signal mode, q-planes elsewhere.
    pub fn with_signal(n_modes: usize, signal_in: usize, signal_out: usize) -> Result<Self> {
        let anc: Vec<usize> = (0..n_modes).filter(|&m| m != signal_in).collect();
        let idl: Vec<usize> = (0..n_modes).filter(|&m| m != signal_out).collect();
        let q = SubspaceBasis::q_plane(n_modes - 1, &(0..n_modes - 1).collect::<Vec<_>>())?.f;
        Self::new(
            n_modes,
            vec![signal_in],
            anc,
            vec![signal_out],
            idl,
            q.clone(),
            q,
        )
    }

    fn embed(&self, modes: &[usize], local: &Mat) -> Mat {
        let dim = 2 * self.n_modes;
        let mut out = Mat::zeros(dim, local.ncols());
        for (k, &m) in modes.iter().enumerate() {
            for c in 0..local.ncols() {
                out[(2 * m, c)] = local[(2 * k, c)];
                out[(2 * m + 1, c)] = local[(2 * k + 1, c)];
            }
        }
        out
    }

    fn whole(&self, modes: &[usize]) -> Mat {
        let d = 2 * modes.len();
        self.embed(modes, &Mat::identity(d, d))
    }

    /// Full-space bases of the named subspaces.
    pub fn basis(&self, which: Subspace) -> Mat {
        let conj = |m: &Mat| omega_mat(m.nrows() / 2) * m;
        match which {
            Subspace::In => self.whole(&self.in_modes),
            Subspace::Anc => self.whole(&self.anc_modes),
            Subspace::Out => self.whole(&self.out_modes),
            Subspace::Idl => self.whole(&self.idl_modes),
            Subspace::Z => self.embed(&self.anc_modes, &self.l_z),
            Subspace::ZPrime => self.embed(&self.anc_modes, &conj(&self.l_z)),
            Subspace::H => self.embed(&self.idl_modes, &self.l_h),
            Subspace::HPrime => self.embed(&self.idl_modes, &conj(&self.l_h)),
        }
    }

    /// `F_r^t S F_c`.
    pub fn block(&self, s: &Mat, rows: Subspace, cols: Subspace) -> Mat {
        self.basis(rows).transpose() * s * self.basis(cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    In,
    Anc,
    Out,
    Idl,
    Z,
    ZPrime,
    H,
    HPrime,
}

/// Ancilla and measurement imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionCoefficients {
    pub nu: f64,
    pub mu: f64,
    pub raw: Option<RawImperfections>,
}

/// Squeezing `ξ`, ancilla thermal number `n_z`, fictitious transmittance `τ`
/// and environment thermal number `n_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawImperfections {
    pub xi: f64,
    pub n_z: f64,
    pub tau: f64,
    pub n_h: f64,
}

impl ImperfectionCoefficients {
    pub fn new(nu: f64, mu: f64) -> Result<Self> {
        if !(nu >= 0.0) {
            return Err(SymplError::NonPositive(nu, 0));
        }
        if !(mu >= 0.0) {
            return Err(SymplError::NonPositive(mu, 1));
        }
        Ok(Self { nu, mu, raw: None })
    }

    /// `ν = e^{-2ξ}(2n_z+1)` and `μ = τ/(1-τ)(2n_h+1)`.
    pub fn from_raw(raw: RawImperfections) -> Result<Self> {
        if !(raw.n_z >= 0.0 && raw.n_h >= 0.0) || !(0.0..1.0).contains(&raw.tau) {
            return Err(SymplError::InvalidArgument(
                "need n_z, n_h >= 0 and 0 <= tau < 1".into(),
            ));
        }
        let nu = (-2.0 * raw.xi).exp() * (2.0 * raw.n_z + 1.0);
        let mu = raw.tau / (1.0 - raw.tau) * (2.0 * raw.n_h + 1.0);
        Ok(Self {
            nu,
            mu,
            raw: Some(raw),
        })
    }

    pub fn perfect() -> Self {
        Self {
            nu: 0.0,
            mu: 0.0,
            raw: None,
        }
    }
}

/// Decibel value as a linear coefficient (`-20 dB → 0.01`).
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Everything the teleportation theorem says about a transducer.
#[derive(Debug, Clone)]
pub struct TeleportResult {
    /// `S̃ = S_{out,in} - S_{out,z'} S_{h,z'}^{-1} S_{h,in}`.
    pub s_tilde: Mat,
    /// `Š`, built from blocks of `S^{-1}`.
    pub s_check: Mat,
    /// Feedforward `F = -S_{out,z'} S_{h,z'}^{-1}`.
    pub f: Mat,
    /// `F` as obtained from `S^{-1}` blocks.
    pub f_from_inverse: Mat,
    /// Backward transmission `B = -(S^{-1})_{in,h'} ((S^{-1})_{z,h'})^{-1}`.
    pub b: Mat,
    /// `B` as obtained from `S` blocks.
    pub b_from_forward: Mat,
    pub cond_h_zprime: f64,
}

impl TeleportResult {
    /// Residuals of items (i), (iii), (iv), (v) and of `Š` being symplectic.
    pub fn theorem_residuals(&self) -> [f64; 5] {
        let n = self.s_tilde.nrows();
        [
            symplectic::symplectic_residual(&self.s_tilde).unwrap_or(f64::INFINITY),
            symplectic::symplectic_residual(&self.s_check).unwrap_or(f64::INFINITY),
            max_abs(&(&self.s_check * &self.s_tilde - Mat::identity(n, n))),
            max_abs(&(&self.f - &self.f_from_inverse)),
            max_abs(&(&self.b - &self.b_from_forward)),
        ]
    }
}

fn checked_inverse(m: &Mat) -> Result<(Mat, f64)> {
    let cond = linalg::condition_number(m);
    if !(cond < FEEDFORWARD_COND_LIMIT) {
        return Err(SymplError::SingularFeedforward(cond));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or(SymplError::SingularFeedforward(cond))?;
    Ok((inv, cond))
}

pub fn teleport_transform(s: &SymplecticMatrix, p: &PartitionSpec) -> Result<TeleportResult> {
    use Subspace::*;
    let s = s.interleaved();
    if s.nrows() != 2 * p.n_modes {
        return Err(SymplError::DimensionMismatch("S vs partition".into()));
    }
    let si = symplectic::inverse(&s)?;
    let (hz_inv, cond) = checked_inverse(&p.block(&s, H, ZPrime))?;
    let s_out_zp = p.block(&s, Out, ZPrime);
    let s_tilde = p.block(&s, Out, In) - &s_out_zp * &hz_inv * p.block(&s, H, In);
    let f = -(&s_out_zp * &hz_inv);
    let (zh_inv, _) = checked_inverse(&p.block(&si, Z, HPrime))?;
    let si_in_hp = p.block(&si, In, HPrime);
    let s_check = p.block(&si, In, Out) - &si_in_hp * &zh_inv * p.block(&si, Z, Out);
    let f_from_inverse =
        &s_tilde * (p.block(&si, In, H) - &si_in_hp * &zh_inv * p.block(&si, Z, H));
    let b = -(&si_in_hp * &zh_inv);
    let st_inv = symplectic::inverse(&s_tilde)?;
    let b_from_forward = st_inv * (p.block(&s, Out, Z) - &s_out_zp * &hz_inv * p.block(&s, H, Z));
    Ok(TeleportResult {
        s_tilde,
        s_check,
        f,
        f_from_inverse,
        b,
        b_from_forward,
        cond_h_zprime: cond,
    })
}

/// Adaptive-transduction channel after the `S̃^{-1}` post-processing:
/// `𝒢_{Id, N'}` with `N' = ν B Bᵗ + μ (S̃^{-1} F)(S̃^{-1} F)ᵗ`.
pub fn adaptive_channel(
    s: &SymplecticMatrix,
    p: &PartitionSpec,
    coeffs: &ImperfectionCoefficients,
) -> Result<GaussianChannel> {
    let tr = teleport_transform(s, p)?;
    let st_inv = symplectic::inverse(&tr.s_tilde)?;
    let g = &st_inv * &tr.f;
    let n = linalg::symmetrize(
        &(&tr.b * tr.b.transpose() * coeffs.nu + &g * g.transpose() * coeffs.mu),
    );
    let d = n.nrows();
    GaussianChannel::new(Mat::identity(d, d), n, None)
}

/// The adaptive channel before post-processing: `𝒢_{S̃, N}`.
pub fn adaptive_channel_raw(
    s: &SymplecticMatrix,
    p: &PartitionSpec,
    coeffs: &ImperfectionCoefficients,
) -> Result<GaussianChannel> {
    let tr = teleport_transform(s, p)?;
    let sb = &tr.s_tilde * &tr.b;
    let n = linalg::symmetrize(
        &(&sb * sb.transpose() * coeffs.nu + &tr.f * tr.f.transpose() * coeffs.mu),
    );
    GaussianChannel::new(tr.s_tilde, n, None)
}

/// Adaptive displacement `A_F` on `out ⊕ l_h ⊕ l_h'` coordinates.
pub fn adaptive_displacement(f: &Mat, omega_hp_h: &Mat) -> Mat {
    let n_out = f.nrows();
    let m = f.ncols();
    let om_out = omega_mat(n_out / 2);
    let x = -(omega_hp_h * f.transpose() * &om_out);
    let y = omega_hp_h * f.transpose() * &om_out * f * 0.5;
    let dim = n_out + 2 * m;
    let mut a = Mat::identity(dim, dim);
    a.view_mut((0, n_out), (n_out, m)).copy_from(f);
    a.view_mut((n_out + m, 0), (m, n_out)).copy_from(&(-x));
    a.view_mut((n_out + m, n_out), (m, m)).copy_from(&y);
    a
}

/// Symplectic form of `out ⊕ l_h ⊕ l_h'` coordinates.
pub fn adaptive_frame_form(n_out: usize, omega_hp_h: &Mat) -> Mat {
    let m = omega_hp_h.nrows();
    let mut om = Mat::zeros(2 * n_out + 2 * m, 2 * n_out + 2 * m);
    om.view_mut((0, 0), (2 * n_out, 2 * n_out))
        .copy_from(&omega_mat(n_out));
    let o = 2 * n_out;
    om.view_mut((o + m, o), (m, m)).copy_from(omega_hp_h);
    om.view_mut((o, o + m), (m, m))
        .copy_from(&(-omega_hp_h.transpose()));
    om
}

/// Explicit pipeline `(A_F ⊕ Id)(Id ⊕ H̃)(S ⊕ Id)` followed by tracing out
/// idlers and environment, then post-processed by `S̃^{-1}`.
///
/// `v_anc` is the ancilla covariance (anc phase space, listed order) and
/// `v_env` the covariance of one environment mode per idler.
pub fn simulate_adaptive_with(
    s: &SymplecticMatrix,
    p: &PartitionSpec,
    tau: f64,
    v_anc: &Mat,
    v_env: &Mat,
) -> Result<GaussianChannel> {
    let tr = teleport_transform(s, p)?;
    let s = s.interleaved();
    let n = p.n_modes;
    let m = p.idl_modes.len();
    let total = n + m;
    let dim = 2 * total;
    if !(0.0..1.0).contains(&tau) {
        return Err(SymplError::InvalidArgument("tau must lie in [0, 1)".into()));
    }
    if v_anc.nrows() != 2 * p.anc_modes.len() || v_env.nrows() != 2 * m {
        return Err(SymplError::DimensionMismatch(
            "ancilla or environment covariance".into(),
        ));
    }
    let f = &tr.f / (1.0 - tau).sqrt();
    // stage 1: S on the system, identity on the environment
    let w1 = linalg::direct_sum(&s, &Mat::identity(2 * m, 2 * m));
    // stage 2: H(τ) between each idler and its environment mode
    let mut w2 = Mat::identity(dim, dim);
    let h = crate::states::h_tau(tau);
    for (k, &idl) in p.idl_modes.iter().enumerate() {
        let c = [2 * idl, 2 * idl + 1, 2 * (n + k), 2 * (n + k) + 1];
        for r in 0..4 {
            for cc in 0..4 {
                w2[(c[r], c[cc])] = h[(r, cc)];
            }
        }
    }
    // stage 3: A_F on out ⊕ idl, written in (h, h') coordinates of the idlers
    let conj = omega_mat(m) * &p.l_h;
    let omega_hp_h = conj.transpose() * omega_mat(m) * &p.l_h;
    let a = adaptive_displacement(&f, &omega_hp_h);
    let n_out = 2 * p.out_modes.len();
    let mut frame = Mat::zeros(n_out + 2 * m, n_out + 2 * m);
    frame
        .view_mut((0, 0), (n_out, n_out))
        .copy_from(&Mat::identity(n_out, n_out));
    frame.view_mut((n_out, n_out), (2 * m, m)).copy_from(&p.l_h);
    frame
        .view_mut((n_out, n_out + m), (2 * m, m))
        .copy_from(&conj);
    let a_std = &frame * a * frame.transpose();
    let oi: Vec<usize> = symplectic::mode_coordinates(&p.out_modes)
        .into_iter()
        .chain(symplectic::mode_coordinates(&p.idl_modes))
        .collect();
    let mut w3 = Mat::identity(dim, dim);
    for (r, &i) in oi.iter().enumerate() {
        for (c, &j) in oi.iter().enumerate() {
            w3[(i, j)] = a_std[(r, c)];
        }
    }
    let w = w3 * w2 * w1;
    let out_c = symplectic::mode_coordinates(&p.out_modes);
    let in_c = symplectic::mode_coordinates(&p.in_modes);
    let anc_c = symplectic::mode_coordinates(&p.anc_modes);
    let env_c = symplectic::mode_coordinates(&(n..total).collect::<Vec<_>>());
    let t = linalg::select(&w, &out_c, &in_c);
    let wa = linalg::select(&w, &out_c, &anc_c);
    let we = linalg::select(&w, &out_c, &env_c);
    let noise = &wa * v_anc * wa.transpose() + &we * v_env * we.transpose();
    let post = symplectic::inverse(&tr.s_tilde)?;
    GaussianChannel::new(
        &post * t,
        linalg::symmetrize(&(&post * noise * post.transpose())),
        None,
    )
}

/// Pipeline with the ancilla `ν P_z + ν' P_z'` and thermal environment built
/// from raw imperfection parameters.
pub fn simulate_adaptive(
    s: &SymplecticMatrix,
    p: &PartitionSpec,
    raw: &RawImperfections,
) -> Result<GaussianChannel> {
    let th = 2.0 * raw.n_z + 1.0;
    let fz = &p.l_z;
    let fzp = omega_mat(fz.nrows() / 2) * fz;
    let v_anc = fz * fz.transpose() * ((-2.0 * raw.xi).exp() * th)
        + &fzp * fzp.transpose() * ((2.0 * raw.xi).exp() * th);
    let m = p.idl_modes.len();
    let v_env = Mat::identity(2 * m, 2 * m) * (2.0 * raw.n_h + 1.0);
    simulate_adaptive_with(s, p, raw.tau, &v_anc, &v_env)
}

/// Direct transduction with a vacuum ancilla: `T = S_{out,in}`,
/// `N = S_{out,anc} S_{out,anc}ᵗ`.
pub fn direct_channel(s: &SymplecticMatrix, p: &PartitionSpec) -> Result<GaussianChannel> {
    use Subspace::*;
    let s = s.interleaved();
    let t = p.block(&s, Out, In);
    let sa = p.block(&s, Out, Anc);
    GaussianChannel::new(t, linalg::symmetrize(&(&sa * sa.transpose())), None)
}

/// Direct channel followed by the fidelity-optimal `𝒢_{T^{-1}, N'}` over
/// diagonal `N'` (single mode).
///
/// CP of the correction requires `N' + i(1 - 1/det T)Ω ⪰ 0`, i.e.
/// `N' = diag(a, c²/a)` at the boundary with `c = |1 - 1/det T|`. The
/// determinant `det(2Id + M + N')` is minimized at `a = c √(M₁₁/M₂₂)`.
pub fn direct_channel_optimized(
    s: &SymplecticMatrix,
    p: &PartitionSpec,
) -> Result<GaussianChannel> {
    let raw = direct_channel(s, p)?;
    if raw.t.nrows() != 2 {
        return Err(SymplError::InvalidArgument(
            "optimization is single-mode only".into(),
        ));
    }
    let tinv =
        raw.t.clone().try_inverse().ok_or_else(|| {
            SymplError::InvalidArgument("direct transmission T is singular".into())
        })?;
    let m = &tinv * &raw.n * tinv.transpose();
    let c = (1.0 - 1.0 / raw.t.determinant()).abs();
    let a = if c == 0.0 {
        0.0
    } else {
        c * (m[(0, 0)] / m[(1, 1)]).sqrt()
    };
    let np = Mat::from_diagonal(&Vector::from_vec(vec![
        a,
        if c == 0.0 { 0.0 } else { c * c / a },
    ]));
    GaussianChannel::new(Mat::identity(2, 2), linalg::symmetrize(&(m + np)), None)
}

/// Coherent-state average fidelity of a single-mode channel.
pub fn average_fidelity(ch: &GaussianChannel) -> Result<f64> {
    if ch.t.shape() != (2, 2) {
        return Err(SymplError::DimensionMismatch(
            "average fidelity is single-mode".into(),
        ));
    }
    if max_abs(&(&ch.t - Mat::identity(2, 2))) > 1e-9 {
        return Ok(0.0);
    }
    let det = (Mat::identity(2, 2) * 2.0 + &ch.n).determinant();
    Ok(2.0 / det.sqrt())
}

/// `F̄ > ½ ⇔ det(Id + N/2) < 4` for `T = Id`.
pub fn beats_classical(ch: &GaussianChannel) -> bool {
    max_abs(&(&ch.t - Mat::identity(2, 2))) <= 1e-9
        && (Mat::identity(2, 2) + &ch.n * 0.5).determinant() < 4.0
}

/// `(r, t)` of the passive coupler.
pub fn passive_rt(c: f64) -> (f64, f64) {
    ((c - 1.0) / (c + 1.0), 2.0 * c.sqrt() / (c + 1.0))
}

/// `(r', t')` of the active coupler.
pub fn active_rt(c: f64) -> (f64, f64) {
    ((c + 1.0) / (c - 1.0), 2.0 * c.sqrt() / (1.0 - c))
}

/// Passive two-mode coupler with cooperativity `C`.
pub fn passive_example(c: f64) -> Result<SymplecticMatrix> {
    if !(c > 0.0) {
        return Err(SymplError::NonPositive(c, 0));
    }
    let (r, t) = passive_rt(c);
    let m = Mat::from_row_slice(
        4,
        4,
        &[
            0.0, -t, r, 0.0, t, 0.0, 0.0, r, r, 0.0, 0.0, -t, 0.0, r, t, 0.0,
        ],
    );
    SymplecticMatrix::new(m, 1e-12)
}

/// Active two-mode coupler with cooperativity `C ≠ 1`.
pub fn active_example(c: f64) -> Result<SymplecticMatrix> {
    if !(c > 0.0) {
        return Err(SymplError::NonPositive(c, 0));
    }
    if (c - 1.0).abs() < 1e-12 {
        return Err(SymplError::InvalidArgument(
            "active coupler diverges at C = 1".into(),
        ));
    }
    let (r, t) = active_rt(c);
    let m = Mat::from_row_slice(
        4,
        4,
        &[
            0.0, t, r, 0.0, t, 0.0, 0.0, r, r, 0.0, 0.0, t, 0.0, r, t, 0.0,
        ],
    );
    SymplecticMatrix::new(m, 1e-9 * (1.0 + r * r))
}

/// The passive `C` with `t² = t2`, taking the branch `C ≥ 1`.
pub fn passive_c_for_transmittance(t2: f64) -> Result<f64> {
    if !(t2 > 0.0 && t2 <= 1.0) {
        return Err(SymplError::InvalidArgument(
            "passive t² must lie in (0, 1]".into(),
        ));
    }
    // t² (C+1)² = 4C
    let b = 2.0 - 4.0 / t2;
    let disc = (b * b - 4.0).max(0.0);
    Ok((-b + disc.sqrt()) / 2.0)
}

/// The active `C < 1` with `t'² = t2`.
pub fn active_c_for_transmittance(t2: f64) -> Result<f64> {
    if !(t2 > 0.0) {
        return Err(SymplError::NonPositive(t2, 0));
    }
    // t'² (1-C)² = 4C
    let b = -2.0 - 4.0 / t2;
    let disc = b * b - 4.0;
    Ok((-b - disc.sqrt()) / 2.0)
}

/// Closed forms quoted for the worked examples.
pub mod closed_form {
    pub fn passive_direct_fidelity(t2: f64) -> f64 {
        t2
    }

    pub fn passive_adaptive_fidelity(t2: f64, mu: f64, nu: f64) -> f64 {
        let r2 = 1.0 - t2;
        1.0 / ((1.0 + r2 * mu / 2.0) * (1.0 + r2 * nu / (2.0 * t2))).sqrt()
    }

    pub fn active_direct_fidelity(t2: f64) -> f64 {
        t2 / (1.0 + 2.0 * t2)
    }

    /// The expression as printed with `t'` rather than `t'²` in the
    /// denominator, for comparison.
    pub fn active_direct_fidelity_printed(t2: f64) -> f64 {
        t2 / (1.0 + 2.0 * t2.sqrt())
    }

    pub fn active_adaptive_fidelity(t2: f64, mu: f64, nu: f64) -> f64 {
        let g = 1.0 + t2;
        1.0 / ((1.0 + g * mu / 2.0) * (1.0 + g * nu / (2.0 * t2))).sqrt()
    }
}
