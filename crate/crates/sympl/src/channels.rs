//! Gaussian channels `(T, N, d)` and their symplectic dilations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SymplError};
use crate::linalg::{
    self, direct_sum, direct_sum_vec, herm_eigen, max_abs, min_eig_hermitian_parts, select, CMat,
    Mat, Vector,
};
use crate::states::GaussianState;
use crate::symplectic::{mode_coordinates, omega_mat, symplectic_residual, SymplecticMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianChannel {
    #[serde(rename = "T", with = "crate::json::matrix")]
    pub t: Mat,
    #[serde(rename = "N", with = "crate::json::matrix")]
    pub n: Mat,
    #[serde(with = "crate::json::vector")]
    pub d: Vector,
}

impl GaussianChannel {
    /// Shape-checked constructor; `N` must be symmetric.
    pub fn new(t: Mat, n: Mat, d: Option<Vector>) -> Result<Self> {
        let rows = t.nrows();
        if !rows.is_multiple_of(2) || !t.ncols().is_multiple_of(2) || t.is_empty() {
            return Err(SymplError::DimensionMismatch("T must be 2N' x 2N".into()));
        }
        if n.shape() != (rows, rows) {
            return Err(SymplError::DimensionMismatch("N must be 2N' x 2N'".into()));
        }
        linalg::require_symmetric(&n, 1e-10)?;
        let d = d.unwrap_or_else(|| Vector::zeros(rows));
        if d.len() != rows {
            return Err(SymplError::DimensionMismatch(
                "d must have length 2N'".into(),
            ));
        }
        Ok(Self { t, n, d })
    }

    pub fn identity(n_modes: usize) -> Self {
        let d = 2 * n_modes;
        Self {
            t: Mat::identity(d, d),
            n: Mat::zeros(d, d),
            d: Vector::zeros(d),
        }
    }

    /// The noiseless channel of a symplectic matrix.
    pub fn unitary(s: &SymplecticMatrix) -> Self {
        let t = s.interleaved();
        let d = t.nrows();
        Self {
            t,
            n: Mat::zeros(d, d),
            d: Vector::zeros(d),
        }
    }

    pub fn displacement(v: &Vector) -> Self {
        let d = v.len();
        Self {
            t: Mat::identity(d, d),
            n: Mat::zeros(d, d),
            d: v.clone(),
        }
    }

    /// Output modes, input modes.
    pub fn dims(&self) -> (usize, usize) {
        (self.t.nrows() / 2, self.t.ncols() / 2)
    }

    /// Smallest eigenvalue of `N + iΩ' - i T Ω T^t`; nonnegative iff CP.
    pub fn cp_margin(&self) -> f64 {
        let (no, ni) = self.dims();
        let skew = omega_mat(no) - &self.t * omega_mat(ni) * self.t.transpose();
        min_eig_hermitian_parts(&self.n, &skew)
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.cp_margin() >= -tol
    }
}

/// `x̄ → T x̄ + d`, `V → T V T^t + N`.
pub fn apply(channel: &GaussianChannel, state: &GaussianState) -> Result<GaussianState> {
    let st = state.interleaved();
    if channel.t.ncols() != st.v.nrows() {
        return Err(SymplError::DimensionMismatch(format!(
            "channel expects {} modes, state has {}",
            channel.t.ncols() / 2,
            st.n_modes()
        )));
    }
    let x = &channel.t * &st.x_bar + &channel.d;
    let v = linalg::symmetrize(&(&channel.t * &st.v * channel.t.transpose() + &channel.n));
    Ok(GaussianState::unchecked(x, v))
}

/// `c2 ∘ c1`.
pub fn compose(c2: &GaussianChannel, c1: &GaussianChannel) -> Result<GaussianChannel> {
    if c2.t.ncols() != c1.t.nrows() {
        return Err(SymplError::DimensionMismatch(
            "compose: inner dimensions differ".into(),
        ));
    }
    Ok(GaussianChannel {
        t: &c2.t * &c1.t,
        n: linalg::symmetrize(&(&c2.t * &c1.n * c2.t.transpose() + &c2.n)),
        d: &c2.t * &c1.d + &c2.d,
    })
}

/// Channels acting side by side on disjoint modes.
pub fn juxtapose(c1: &GaussianChannel, c2: &GaussianChannel) -> GaussianChannel {
    GaussianChannel {
        t: direct_sum(&c1.t, &c2.t),
        n: direct_sum(&c1.n, &c2.n),
        d: direct_sum_vec(&c1.d, &c2.d),
    }
}

fn check_partition(n: usize, a: &[usize], b: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &m in a.iter().chain(b) {
        if m >= n || seen[m] {
            return Err(SymplError::InvalidArgument(format!(
                "partition: mode {m} out of range or repeated"
            )));
        }
        seen[m] = true;
    }
    if a.is_empty() || seen.iter().any(|s| !s) {
        return Err(SymplError::InvalidArgument(
            "partition must cover every mode".into(),
        ));
    }
    Ok(())
}

/// Channel on `a` obtained from `S` with the environment `b` in `(0, V_b)`.
pub fn from_dilation(s: &Mat, a: &[usize], b: &[usize], v_b: &Mat) -> Result<GaussianChannel> {
    let n = linalg::require_even_square(s, "S")?;
    check_partition(n, a, b)?;
    let ai = mode_coordinates(a);
    let bi = mode_coordinates(b);
    if v_b.shape() != (bi.len(), bi.len()) {
        return Err(SymplError::DimensionMismatch(
            "V_b vs environment modes".into(),
        ));
    }
    let t = select(s, &ai, &ai);
    let s_ab = select(s, &ai, &bi);
    let noise = linalg::symmetrize(&(&s_ab * v_b * s_ab.transpose()));
    Ok(GaussianChannel {
        t,
        n: noise,
        d: Vector::zeros(ai.len()),
    })
}

/// A symplectic dilation with every intermediate kept for inspection.
///
/// The system occupies the first `n_a` modes of `s`, the environment the rest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DilationResult {
    #[serde(rename = "S", with = "crate::json::matrix")]
    pub s: Mat,
    #[serde(with = "crate::json::matrix")]
    pub env_cov: Mat,
    pub n_a: usize,
    pub n_b: usize,
    #[serde(rename = "M", with = "crate::json::matrix")]
    pub m: Mat,
    #[serde(rename = "M_s", with = "crate::json::matrix")]
    pub m_s: Mat,
    #[serde(rename = "M_a", with = "crate::json::matrix")]
    pub m_a: Mat,
    #[serde(rename = "R", with = "crate::json::matrix")]
    pub r: Mat,
    #[serde(rename = "L", with = "crate::json::matrix")]
    pub l: Mat,
    #[serde(rename = "S_prime", with = "crate::json::matrix")]
    pub s_prime: Mat,
    /// The `T` actually dilated; differs from the channel's when a
    /// pre-rotation was needed.
    #[serde(rename = "T_dilated", with = "crate::json::matrix")]
    pub t_dilated: Mat,
    /// Rotation `G` applied first when `Id - T` is singular.
    #[serde(with = "crate::json::matrix")]
    pub pre_rotation: Mat,
}

impl DilationResult {
    pub fn system_modes(&self) -> Vec<usize> {
        (0..self.n_a).collect()
    }

    pub fn env_modes(&self) -> Vec<usize> {
        (self.n_a..self.n_a + self.n_b).collect()
    }

    /// The channel realised by this dilation.
    pub fn channel(&self) -> Result<GaussianChannel> {
        if self.n_b == 0 {
            let d = self.s.nrows();
            return Ok(GaussianChannel {
                t: self.s.clone(),
                n: Mat::zeros(d, d),
                d: Vector::zeros(d),
            });
        }
        from_dilation(
            &self.s,
            &self.system_modes(),
            &self.env_modes(),
            &self.env_cov,
        )
    }

    /// Residuals of the three block conditions that make `S` symplectic.
    pub fn block_conditions(&self) -> [f64; 3] {
        let t = &self.t_dilated;
        let dim_a = t.nrows();
        let oa = omega_mat(self.n_a);
        let ob = omega_mat(self.n_b);
        let imt = Mat::identity(dim_a, dim_a) - t;
        let r = &self.r;
        let l = &self.l;
        let sp = &self.s_prime;
        let c1 = t * &oa * t.transpose() + &imt * r * &ob * r.transpose() * imt.transpose() - &oa;
        let c2 = t * &oa * imt.transpose() * l.transpose() + &imt * r * &ob * sp.transpose();
        let c3 = sp * &ob * sp.transpose() + l * &imt * &oa * imt.transpose() * l.transpose() - &ob;
        [max_abs(&c1), max_abs(&c2), max_abs(&c3)]
    }
}

const ROTATION_ANGLES: [f64; 5] = [
    std::f64::consts::FRAC_PI_2,
    std::f64::consts::FRAC_PI_3,
    2.0 * std::f64::consts::FRAC_PI_3,
    std::f64::consts::FRAC_PI_4,
    0.3,
];

fn uniform_rotation(n_modes: usize, phi: f64) -> Mat {
    let (s, c) = phi.sin_cos();
    let mut g = Mat::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        g[(2 * j, 2 * j)] = c;
        g[(2 * j, 2 * j + 1)] = -s;
        g[(2 * j + 1, 2 * j)] = s;
        g[(2 * j + 1, 2 * j + 1)] = c;
    }
    g
}

/// `|det(Id - T)|` below this is treated as singular.
const DET_TOL: f64 = 1e-8;

/// Symplectic dilation of a channel with `d = 0`.
///
/// When `Id - T` is singular the channel is split as `(T G^{-1}, N) ∘ (G, 0)`
/// with a uniform phase rotation `G`, and the two dilations are multiplied.
pub fn dilate(channel: &GaussianChannel) -> Result<DilationResult> {
    let (no, ni) = channel.dims();
    if no != ni {
        return Err(SymplError::DimensionMismatch(
            "dilation needs a square T".into(),
        ));
    }
    if channel.d.amax() > 0.0 {
        return Err(SymplError::InvalidArgument("dilation needs d = 0".into()));
    }
    let dim = 2 * no;
    let id = Mat::identity(dim, dim);
    let det = (&id - &channel.t).determinant();
    if det.abs() > DET_TOL {
        return dilate_regular(&channel.t, &channel.n, id);
    }
    for phi in ROTATION_ANGLES {
        let g = uniform_rotation(no, phi);
        let t2 = &channel.t * g.transpose();
        if (&id - &t2).determinant().abs() > DET_TOL {
            log::debug!("Id - T singular; pre-rotating by {phi}");
            let mut out = dilate_regular(&t2, &channel.n, g.clone())?;
            let emb = direct_sum(&g, &Mat::identity(2 * out.n_b, 2 * out.n_b));
            out.s = &out.s * emb;
            return Ok(out);
        }
    }
    Err(SymplError::SingularIdMinusT)
}

fn dilate_regular(t: &Mat, noise: &Mat, pre_rotation: Mat) -> Result<DilationResult> {
    let dim = t.nrows();
    let n_a = dim / 2;
    let id = Mat::identity(dim, dim);
    let oa = omega_mat(n_a);
    let imt = &id - t;
    let a = imt
        .clone()
        .try_inverse()
        .ok_or(SymplError::SingularIdMinusT)?;
    let m = &oa * (&id * 0.5 - &a);
    let m_s = linalg::symmetrize(&m);
    let m_a = (&m - m.transpose()) * 0.5;
    // R V_b R^t = P and R Ω_b R^t = K with a vacuum environment amount to
    // factoring the Hermitian matrix P + iK = C C^†.
    let p = linalg::symmetrize(&(&a * noise * a.transpose()));
    let k = &oa * &m_a * &oa * 2.0;
    let h = CMat::from_fn(dim, dim, |i, j| Complex64::new(p[(i, j)], k[(i, j)]));
    let (vals, vecs) = herm_eigen(&h);
    // rounding in `noise` survives the product even when `A` shrinks it,
    // so eigenvalues below a few hundred ulps of the inputs are noise
    let scale = vals.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let floor = (1e-10 * scale).max(1e-13 * max_abs(&a).powi(2) * max_abs(noise));
    if vals[0] < -(1e-9 * scale).max(floor) {
        return Err(SymplError::NoPhysicalEnv(vals[0]));
    }
    let keep: Vec<usize> = (0..dim).filter(|&i| vals[i] > floor).collect();
    let n_b = keep.len();
    let mut r = Mat::zeros(dim, 2 * n_b);
    for (j, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for row in 0..dim {
            let c = vecs[(row, i)] * s;
            r[(row, 2 * j)] = c.re;
            r[(row, 2 * j + 1)] = c.im;
        }
    }
    let ob = omega_mat(n_b);
    let l = -(&ob * r.transpose() * &oa);
    let s_prime = Mat::identity(2 * n_b, 2 * n_b) - &l * &imt * &r;
    let top_right = &imt * &r;
    let bottom_left = &l * &imt;
    let mut s = Mat::zeros(dim + 2 * n_b, dim + 2 * n_b);
    s.view_mut((0, 0), (dim, dim)).copy_from(t);
    s.view_mut((0, dim), (dim, 2 * n_b)).copy_from(&top_right);
    s.view_mut((dim, 0), (2 * n_b, dim)).copy_from(&bottom_left);
    s.view_mut((dim, dim), (2 * n_b, 2 * n_b))
        .copy_from(&s_prime);
    let res = symplectic_residual(&s)?;
    if res > 1e-7 * (1.0 + max_abs(&s).powi(2)) {
        return Err(SymplError::NotSymplectic(res));
    }
    Ok(DilationResult {
        s,
        env_cov: Mat::identity(2 * n_b, 2 * n_b),
        n_a,
        n_b,
        m,
        m_s,
        m_a,
        r,
        l,
        s_prime,
        t_dilated: t.clone(),
        pre_rotation,
    })
}

/// Random channel with Gaussian entries in `T` (scaled by `1/sqrt(2N)`) and
/// `N = c Id`, `c` the smallest such multiple that is completely positive,
/// plus `margin`.
pub fn random_cp_channel(
    n_modes: usize,
    margin: f64,
    rng: &mut impl Rng,
) -> Result<GaussianChannel> {
    if n_modes == 0 || !(margin >= 0.0) {
        return Err(SymplError::InvalidArgument(
            "need n_modes >= 1 and margin >= 0".into(),
        ));
    }
    let dim = 2 * n_modes;
    let scale = 1.0 / (dim as f64).sqrt();
    let t = Mat::from_fn(dim, dim, |_, _| {
        rng.sample::<f64, _>(StandardNormal) * scale
    });
    let om = omega_mat(n_modes);
    let a = &om - &t * &om * t.transpose();
    let c = a.singular_values().max() + margin;
    GaussianChannel::new(t, Mat::identity(dim, dim) * c, None)
}

/// Dressed dilation `D = (Id ⊕ S_b) S (Id ⊕ S_b')` and its Cayley generator.
#[derive(Debug, Clone)]
pub struct CayleyForm {
    /// `M̃` with `D = Id - (Ω M̃ + Id/2)^{-1}`.
    pub m_tilde: Mat,
    pub d: Mat,
    /// Blocks of `Ω M̃ + Id/2`.
    pub blocks: [Mat; 4],
}

pub fn dilation_cayley_form(
    dil: &DilationResult,
    s_b: &Mat,
    s_b_prime: &Mat,
) -> Result<CayleyForm> {
    let nb = 2 * dil.n_b;
    if s_b.shape() != (nb, nb) || s_b_prime.shape() != (nb, nb) {
        return Err(SymplError::DimensionMismatch(
            "S_b acts on the environment".into(),
        ));
    }
    if dil.pre_rotation != Mat::identity(2 * dil.n_a, 2 * dil.n_a) {
        return Err(SymplError::SingularIdMinusT);
    }
    let da = 2 * dil.n_a;
    let ida = Mat::identity(da, da);
    let prod = s_b * s_b_prime;
    let w = (Mat::identity(nb, nb) - prod)
        .try_inverse()
        .ok_or(SymplError::SingularLocalProduct)?;
    let imt_inv = (&ida - &dil.t_dilated)
        .try_inverse()
        .ok_or(SymplError::SingularIdMinusT)?;
    let r = &dil.r;
    let l = &dil.l;
    let a_blk = &imt_inv + r * s_b_prime * &w * s_b * l;
    let b_blk = r * s_b_prime * &w;
    let c_blk = &w * s_b * l;
    let d_blk = w.clone();
    let mut x = Mat::zeros(da + nb, da + nb);
    x.view_mut((0, 0), (da, da)).copy_from(&a_blk);
    x.view_mut((0, da), (da, nb)).copy_from(&b_blk);
    x.view_mut((da, 0), (nb, da)).copy_from(&c_blk);
    x.view_mut((da, da), (nb, nb)).copy_from(&d_blk);
    let id = Mat::identity(da + nb, da + nb);
    let d = &id
        - x.clone()
            .try_inverse()
            .ok_or(SymplError::SingularLocalProduct)?;
    let om = omega_mat(dil.n_a + dil.n_b);
    let m_tilde = &om * (&id * 0.5 - &x);
    Ok(CayleyForm {
        m_tilde,
        d,
        blocks: [a_blk, b_blk, c_blk, d_blk],
    })
}

/// `(Id ⊕ S_b) S (Id ⊕ S_b')`.
pub fn dressed_dilation(dil: &DilationResult, s_b: &Mat, s_b_prime: &Mat) -> Mat {
    let ida = Mat::identity(2 * dil.n_a, 2 * dil.n_a);
    direct_sum(&ida, s_b) * &dil.s * direct_sum(&ida, s_b_prime)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{tensor, thermal, vacuum};
    use crate::symplectic::{beamsplitter, random_symplectic};

    fn attenuator(eta: f64) -> GaussianChannel {
        GaussianChannel::new(
            Mat::identity(2, 2) * eta.sqrt(),
            Mat::identity(2, 2) * (1.0 - eta),
            None,
        )
        .unwrap()
    }

    #[test]
    fn random_channels_are_cp() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            let ch = random_cp_channel(n, 1e-3, &mut rng).unwrap();
            assert!(ch.is_cp(0.0));
            assert!(ch.cp_margin() < 1e-2);
        }
    }

    #[test]
    fn pure_loss_fixes_vacuum() {
        let out = apply(&attenuator(0.3), &vacuum(1).unwrap()).unwrap();
        assert!(max_abs(&(out.v - Mat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn cp_certificate() {
        assert!(attenuator(0.4).is_cp(1e-12));
        let bad = GaussianChannel::new(Mat::identity(2, 2) * 0.5, Mat::zeros(2, 2), None).unwrap();
        assert!(!bad.is_cp(1e-9));
        let amp = GaussianChannel::new(Mat::identity(2, 2) * 2.0, Mat::identity(2, 2) * 3.0, None)
            .unwrap();
        assert!(amp.is_cp(1e-12));
    }

    #[test]
    fn compose_with_identity() {
        let c = attenuator(0.7);
        assert_eq!(compose(&GaussianChannel::identity(1), &c).unwrap(), c);
    }

    #[test]
    fn balanced_beamsplitter_extraction() {
        let s = beamsplitter(std::f64::consts::FRAC_PI_4);
        let ch = from_dilation(&s, &[0], &[1], &Mat::identity(2, 2)).unwrap();
        assert!(max_abs(&(&ch.t - Mat::identity(2, 2) * 0.5f64.sqrt())) < 1e-15);
        assert!(max_abs(&(&ch.n - Mat::identity(2, 2) * 0.5)) < 1e-15);
    }

    #[test]
    fn minus_identity_needs_no_environment() {
        let ch = GaussianChannel::new(-Mat::identity(2, 2), Mat::zeros(2, 2), None).unwrap();
        let d = dilate(&ch).unwrap();
        assert_eq!(d.n_b, 0);
        assert!(max_abs(&d.m_a) < 1e-15);
        assert!(max_abs(&(d.s + Mat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn attenuator_dilation_uses_vacuum() {
        let ch = attenuator(0.25);
        let d = dilate(&ch).unwrap();
        assert_eq!(d.n_b, 1);
        assert!(symplectic_residual(&d.s).unwrap() < 1e-12);
        let back = d.channel().unwrap();
        assert!(max_abs(&(back.t - &ch.t)) < 1e-12);
        assert!(max_abs(&(back.n - &ch.n)) < 1e-12);
        for c in d.block_conditions() {
            assert!(c < 1e-12);
        }
        // R Ω_b R^t = 2 Ω_a M_a Ω_a
        let oa = omega_mat(1);
        let lhs = &d.r * omega_mat(1) * d.r.transpose();
        assert!(max_abs(&(lhs - &oa * &d.m_a * &oa * 2.0)) < 1e-12);
    }

    #[test]
    fn identity_channel_is_prerotated() {
        let ch =
            GaussianChannel::new(Mat::identity(2, 2), Mat::identity(2, 2) * 0.3, None).unwrap();
        let d = dilate(&ch).unwrap();
        assert!(d.pre_rotation != Mat::identity(2, 2));
        let back = d.channel().unwrap();
        assert!(max_abs(&(back.t - &ch.t)) < 1e-10);
        assert!(max_abs(&(back.n - &ch.n)) < 1e-10);
        assert!(symplectic_residual(&d.s).unwrap() < 1e-10);
    }

    #[test]
    fn non_cp_channel_has_no_environment() {
        let ch = GaussianChannel::new(Mat::identity(2, 2) * 0.5, Mat::zeros(2, 2), None).unwrap();
        assert!(matches!(dilate(&ch), Err(SymplError::NoPhysicalEnv(_))));
    }

    #[test]
    fn stinespring_on_states() {
        let s0 = random_symplectic(2, 9, 2.0).unwrap().into_matrix();
        let vb = thermal(&[0.4]).unwrap().v;
        let ch = from_dilation(&s0, &[0], &[1], &vb).unwrap();
        let rho = thermal(&[1.3]).unwrap();
        let joint = tensor(&rho, &thermal(&[0.4]).unwrap());
        let big = GaussianChannel::unitary(&SymplecticMatrix::from_trusted(s0));
        let full = apply(&big, &joint).unwrap();
        let red = crate::states::partial_trace(&full, &[0]).unwrap();
        let direct = apply(&ch, &rho).unwrap();
        assert!(max_abs(&(red.v - direct.v)) < 1e-12);
    }

    #[test]
    fn cayley_form_reproduces_dressed_dilation() {
        let d = dilate(&attenuator(0.5)).unwrap();
        // quarter-turn rotations: S_b S_b' = -Id keeps Id - S_b S_b' invertible
        let sb = crate::symplectic::rotation(std::f64::consts::FRAC_PI_2);
        let sbp = crate::symplectic::rotation(0.7);
        let cf = dilation_cayley_form(&d, &sb, &sbp).unwrap();
        let want = dressed_dilation(&d, &sb, &sbp);
        assert!(max_abs(&(&cf.d - &want)) < 1e-12);
        assert!(symplectic_residual(&cf.d).unwrap() < 1e-12);
    }

    #[test]
    fn cayley_form_singular_local_product() {
        let d = dilate(&attenuator(0.5)).unwrap();
        let id = Mat::identity(2, 2);
        assert!(matches!(
            dilation_cayley_form(&d, &id, &id),
            Err(SymplError::SingularLocalProduct)
        ));
    }
}
