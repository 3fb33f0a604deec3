//! Interference-based Gaussian control.
//!
//! Copies of a fixed symplectic transformation are interleaved with local
//! (single-mode) symplectic transformations to decouple, transduce or swap
//! modes. A second part classifies the non-generic transformations through
//! the support pattern of their 2×2 blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SymplError};
use crate::linalg::{max_abs, Mat, Vector};
use crate::symplectic::{omega_mat, SymplecticMatrix};

/// Threshold below which a mode block of a connector vector counts as zero.
pub const GENERICITY_TOL: f64 = 1e-8;

/// Direct sum of single-mode symplectic matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSymplectic {
    #[serde(with = "crate::json::matrix_list")]
    pub blocks: Vec<Mat>,
}

impl LocalSymplectic {
    pub fn identity(n_modes: usize) -> Self {
        Self {
            blocks: vec![Mat::identity(2, 2); n_modes],
        }
    }

    pub fn new(blocks: Vec<Mat>, tol: f64) -> Result<Self> {
        for b in &blocks {
            if b.shape() != (2, 2) {
                return Err(SymplError::DimensionMismatch(
                    "local blocks must be 2×2".into(),
                ));
            }
            let r = (b.determinant() - 1.0).abs();
            if r > tol {
                return Err(SymplError::NotSymplectic(r));
            }
        }
        Ok(Self { blocks })
    }

    pub fn n_modes(&self) -> usize {
        self.blocks.len()
    }

    pub fn matrix(&self) -> Mat {
        let n = self.blocks.len();
        let mut m = Mat::zeros(2 * n, 2 * n);
        for (j, b) in self.blocks.iter().enumerate() {
            m.view_mut((2 * j, 2 * j), (2, 2)).copy_from(b);
        }
        m
    }

    /// Extends by identity blocks on the listed extra modes, placing the
    /// existing blocks on `modes`.
    pub fn embed(&self, n_modes: usize, modes: &[usize]) -> Self {
        let mut out = Self::identity(n_modes);
        for (b, &m) in self.blocks.iter().zip(modes) {
            out.blocks[m] = b.clone();
        }
        out
    }

    /// Conjugation by a mode relabeling: block `j` moves to mode `perm[j]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut out = Self::identity(self.n_modes());
        for (j, b) in self.blocks.iter().enumerate() {
            out.blocks[perm[j]] = b.clone();
        }
        out
    }
}

fn block_norm(v: &Vector, j: usize) -> f64 {
    v[2 * j].abs().max(v[2 * j + 1].abs())
}

/// Unit-determinant 2×2 matrix sending `e_q` to `u`.
fn frame(u: &Vector) -> Mat {
    let n2 = u[0] * u[0] + u[1] * u[1];
    Mat::from_row_slice(2, 2, &[u[0], -u[1] / n2, u[1], u[0] / n2])
}

/// Local symplectic `L` with `L u = c v`.
///
/// Each mode block of `u` and `v` must be zero or nonzero together. Modes
/// where both vanish get the identity.
pub fn local_connector(u: &Vector, v: &Vector, c: f64) -> Result<LocalSymplectic> {
    if u.len() != v.len() || !u.len().is_multiple_of(2) {
        return Err(SymplError::DimensionMismatch("connector vectors".into()));
    }
    if c == 0.0 || !c.is_finite() {
        return Err(SymplError::InvalidArgument(
            "connector scale must be nonzero".into(),
        ));
    }
    let n = u.len() / 2;
    let scale = u.amax().max(v.amax()).max(f64::MIN_POSITIVE);
    let zero = |x: f64| x <= 1e-14 * scale;
    let mut bad = Vec::new();
    let mut blocks = Vec::with_capacity(n);
    for j in 0..n {
        let (nu, nv) = (block_norm(u, j), block_norm(v, j));
        match (zero(nu), zero(nv)) {
            (true, true) => blocks.push(Mat::identity(2, 2)),
            (false, false) => {
                let uj = Vector::from_vec(vec![u[2 * j], u[2 * j + 1]]);
                let wj = Vector::from_vec(vec![c * v[2 * j], c * v[2 * j + 1]]);
                let fu = frame(&uj);
                let inv =
                    Mat::from_row_slice(2, 2, &[fu[(1, 1)], -fu[(0, 1)], -fu[(1, 0)], fu[(0, 0)]]);
                blocks.push(frame(&wj) * inv);
            }
            _ => bad.push(j),
        }
    }
    if !bad.is_empty() {
        return Err(SymplError::BlockwiseMismatch(bad));
    }
    Ok(LocalSymplectic { blocks })
}

fn require_generic(u: &Vector, skip: Option<usize>, what: &str) -> Result<()> {
    let scale = u.amax().max(1.0);
    for j in 0..u.len() / 2 {
        if Some(j) != skip && block_norm(u, j) <= GENERICITY_TOL * scale {
            return Err(SymplError::GenericityFailure(format!(
                "{what} vanishes on mode {j}"
            )));
        }
    }
    Ok(())
}

fn check_pair(first: &SymplecticMatrix, second: &SymplecticMatrix) -> Result<usize> {
    let n = first.n_modes();
    if second.n_modes() != n {
        return Err(SymplError::DimensionMismatch(
            "sandwich factors differ in size".into(),
        ));
    }
    Ok(n)
}

/// One sandwich layer `S'' = second · L · first` that pins a row and a column:
/// `S''[2a, 2b+1] = 1/c`, `S''[2a+1, 2b] = -c`, and the rest of row `2a` and
/// column `2b` vanishes (0-based modes, interleaved coordinates).
pub fn sandwich_pin(
    first: &SymplecticMatrix,
    second: &SymplecticMatrix,
    a: usize,
    b: usize,
    c: f64,
) -> Result<(LocalSymplectic, Mat)> {
    let n = check_pair(first, second)?;
    if a >= n || b >= n {
        return Err(SymplError::InvalidArgument(
            "mode index out of range".into(),
        ));
    }
    let s1 = first.interleaved();
    let s2 = second.interleaved();
    let y = s1.column(2 * b).into_owned();
    let w = omega_mat(n) * s2.row(2 * a).transpose() * (-c);
    require_generic(&y, None, "column of the first factor")?;
    require_generic(&w, None, "row of the second factor")?;
    let l = local_connector(&y, &w, 1.0).map_err(to_genericity)?;
    let out = &s2 * l.matrix() * &s1;
    Ok((l, out))
}

fn to_genericity(e: SymplError) -> SymplError {
    match e {
        SymplError::BlockwiseMismatch(m) => {
            SymplError::GenericityFailure(format!("connector blocks mismatch on modes {m:?}"))
        }
        other => other,
    }
}

/// Second sandwich layer: given `first` whose column `2b` is supported on
/// `p_m` alone and `second` whose row `2a` is supported on `p_m` alone,
/// returns `L` with `second · L · first` mapping mode `b` onto mode `a` and
/// the other modes onto the other modes.
pub fn sandwich_block(
    first: &Mat,
    second: &Mat,
    a: usize,
    b: usize,
    m: usize,
) -> Result<(LocalSymplectic, Mat)> {
    let n = first.nrows() / 2;
    let y = first.column(2 * b + 1).into_owned();
    let w = omega_mat(n) * second.row(2 * a + 1).transpose();
    let s = y[2 * m];
    let wp = w[2 * m + 1];
    let scale = y.amax().max(w.amax()).max(1.0);
    if s.abs() <= GENERICITY_TOL * scale || wp.abs() <= GENERICITY_TOL * scale {
        return Err(SymplError::GenericityFailure(format!(
            "pivot entries on mode {m} vanish ({s:.3e}, {wp:.3e})"
        )));
    }
    require_generic(&y, Some(m), "column of the first factor")?;
    require_generic(&w, Some(m), "row of the second factor")?;
    // L_m = [[0, 1], [-1, 0]] sends p_m to q_m; its q_m output is free.
    let beta = -s / wp;
    let mut yr = y.clone();
    let mut wr = w.clone();
    for k in [2 * m, 2 * m + 1] {
        yr[k] = 0.0;
        wr[k] = 0.0;
    }
    let mut l = local_connector(&yr, &wr, beta).map_err(to_genericity)?;
    l.blocks[m] = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let out = second * l.matrix() * first;
    Ok((l, out))
}

/// Three locals and the assembled product `S_a L3 S_b L2 S_c L1 S_d`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SandwichResult {
    pub l1: LocalSymplectic,
    pub l2: LocalSymplectic,
    pub l3: LocalSymplectic,
    #[serde(with = "crate::json::matrix")]
    pub result: Mat,
}

impl SandwichResult {
    pub fn locals(&self) -> [&LocalSymplectic; 3] {
        [&self.l1, &self.l2, &self.l3]
    }
}

/// Four-copy sandwich mapping mode `input` onto mode `output` and the
/// remaining modes onto the remaining modes.
pub fn sandwich_transduce(
    s_a: &SymplecticMatrix,
    s_b: &SymplecticMatrix,
    s_c: &SymplecticMatrix,
    s_d: &SymplecticMatrix,
    input: usize,
    output: usize,
) -> Result<SandwichResult> {
    let n = check_pair(s_a, s_b)?;
    check_pair(s_c, s_d)?;
    check_pair(s_a, s_d)?;
    if input >= n || output >= n {
        return Err(SymplError::InvalidArgument(
            "mode index out of range".into(),
        ));
    }
    let m = input;
    let (l1, lower) = sandwich_pin(s_d, s_c, m, input, 1.0)?;
    let (l3, upper) = sandwich_pin(s_b, s_a, output, m, 1.0)?;
    let (l2, result) = sandwich_block(&lower, &upper, output, input, m)?;
    Ok(SandwichResult { l1, l2, l3, result })
}

/// Four-copy decoupling of mode 0: the product is `S₁ ⊕ S_r`.
pub fn sandwich_decouple(
    s_a: &SymplecticMatrix,
    s_b: &SymplecticMatrix,
    s_c: &SymplecticMatrix,
    s_d: &SymplecticMatrix,
) -> Result<SandwichResult> {
    sandwich_transduce(s_a, s_b, s_c, s_d, 0, 0)
}

/// Largest block entry that would break the pinned pairs `(output, input)`:
/// each pinned input mode may only reach its output mode, and each pinned
/// output mode may only be reached from its input mode.
pub fn pairing_residual(s: &Mat, pairs: &[(usize, usize)]) -> f64 {
    let n = s.nrows() / 2;
    let blk = |j: usize, k: usize| max_abs(&s.view((2 * j, 2 * k), (2, 2)).into_owned());
    let mut worst = 0.0_f64;
    for &(a, b) in pairs {
        for j in (0..n).filter(|&j| j != a) {
            worst = worst.max(blk(j, b));
        }
        for k in (0..n).filter(|&k| k != b) {
            worst = worst.max(blk(a, k));
        }
    }
    worst
}

/// Largest block entry outside the mode permutation `j → pattern[j]`.
pub fn off_pattern_norm(s: &Mat, pattern: &[usize]) -> f64 {
    let pairs: Vec<(usize, usize)> = pattern.iter().enumerate().map(|(k, &j)| (j, k)).collect();
    pairing_residual(s, &pairs)
}

/// Schedule and outcome of the sixteen-copy swap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapPlan {
    pub n_modes: usize,
    pub modes: (usize, usize),
    /// Locals in application order; `locals[i]` follows copy `i`.
    pub locals: Vec<LocalSymplectic>,
    pub copies_used: usize,
    #[serde(with = "crate::json::matrix")]
    pub result: Mat,
    pub off_pattern: f64,
}

fn restrict(s: &Mat, rows: &[usize], cols: &[usize]) -> SymplecticMatrix {
    let r = crate::symplectic::mode_coordinates(rows);
    let c = crate::symplectic::mode_coordinates(cols);
    SymplecticMatrix::from_trusted(crate::linalg::select(s, &r, &c))
}

fn product(copies: &[SymplecticMatrix], locals: &[LocalSymplectic]) -> Mat {
    let mut acc = copies[0].interleaved();
    for (l, s) in locals.iter().zip(&copies[1..]) {
        acc = s.interleaved() * l.matrix() * acc;
    }
    acc
}

/// Swaps modes 0 and N−1 with sixteen copies and fifteen locals.
///
/// Copies 1–4 transduce mode 0 onto mode N−1. Copies 5–16 form three
/// decouplers of mode N−1, and the three locals between the four units
/// transduce what arrived from mode N−1 onto mode 0 inside the other N−1
/// modes. For two modes the first transduction already swaps, so only
/// four copies are used.
pub fn sandwich_swap(copies: &[SymplecticMatrix]) -> Result<SwapPlan> {
    if copies.len() != 16 {
        return Err(SymplError::InvalidArgument(format!(
            "expected 16 copies, got {}",
            copies.len()
        )));
    }
    let n = copies[0].n_modes();
    if n < 2 || copies.iter().any(|s| s.n_modes() != n) {
        return Err(SymplError::DimensionMismatch(
            "copies must share at least two modes".into(),
        ));
    }
    let last = n - 1;
    let unit = |k: usize, input: usize, output: usize| {
        let c = &copies[4 * k..4 * k + 4];
        sandwich_transduce(&c[3], &c[2], &c[1], &c[0], input, output)
    };
    let t = unit(0, 0, last)?;
    if n == 2 {
        let off = pairing_residual(&t.result, &[(last, 0), (0, last)]);
        return checked(SwapPlan {
            n_modes: n,
            modes: (0, last),
            locals: vec![t.l1, t.l2, t.l3],
            copies_used: 4,
            result: t.result,
            off_pattern: off,
        });
    }
    let d: Vec<SandwichResult> = (1..4).map(|k| unit(k, last, last)).collect::<Result<_>>()?;
    let rest: Vec<usize> = (0..last).collect();
    let shifted: Vec<usize> = (1..n).collect();
    let inner_t = restrict(&t.result, &rest, &shifted);
    let inner_d: Vec<SymplecticMatrix> = d
        .iter()
        .map(|u| restrict(&u.result, &rest, &rest))
        .collect();
    // the domain of `inner_t` lists modes 1..N−1, so global mode N−1 sits at index N−2
    let inner = sandwich_transduce(&inner_d[2], &inner_d[1], &inner_d[0], &inner_t, n - 2, 0)?;
    let glue = |l: &LocalSymplectic| l.embed(n, &rest);
    let mut locals = Vec::with_capacity(15);
    locals.extend([t.l1, t.l2, t.l3]);
    locals.push(glue(&inner.l1));
    for (k, u) in d.into_iter().enumerate() {
        locals.extend([u.l1, u.l2, u.l3]);
        match k {
            0 => locals.push(glue(&inner.l2)),
            1 => locals.push(glue(&inner.l3)),
            _ => {}
        }
    }
    let result = product(copies, &locals);
    let off = pairing_residual(&result, &[(last, 0), (0, last)]);
    checked(SwapPlan {
        n_modes: n,
        modes: (0, last),
        locals,
        copies_used: 16,
        result,
        off_pattern: off,
    })
}

/// Off-pattern bound a finished plan must meet.
pub const SWAP_TOL: f64 = 1e-8;

/// Near-degenerate inputs pass every connector test yet yield locals so
/// badly conditioned that the product leaves the pattern or the group.
/// Those are reported instead of returned.
fn checked(plan: SwapPlan) -> Result<SwapPlan> {
    let res = crate::symplectic::symplectic_residual(&plan.result)?;
    if plan.off_pattern < SWAP_TOL && res < crate::symplectic::TOL_SYMP {
        return Ok(plan);
    }
    Err(SymplError::GenericityFailure(format!(
        "swap lost accuracy on a near-degenerate input: off-pattern {:.1e}, symplectic residual {res:.1e}",
        plan.off_pattern
    )))
}

/// Swap of arbitrary modes `j ≠ k` by relabeling modes before running
/// [`sandwich_swap`].
pub fn sandwich_swap_modes(copies: &[SymplecticMatrix], j: usize, k: usize) -> Result<SwapPlan> {
    let n = copies.first().map(|s| s.n_modes()).unwrap_or(0);
    if j == k || j >= n || k >= n {
        return Err(SymplError::InvalidArgument(
            "need two distinct modes in range".into(),
        ));
    }
    // perm maps an original mode to its working label: j → 0, k → N−1
    let mut order: Vec<usize> = (0..n).filter(|&m| m != j && m != k).collect();
    order.insert(0, j);
    order.push(k);
    let mut perm = vec![0; n];
    for (label, &m) in order.iter().enumerate() {
        perm[m] = label;
    }
    let p = permutation_matrix(&perm);
    let relabeled: Vec<SymplecticMatrix> = copies
        .iter()
        .map(|s| SymplecticMatrix::from_trusted(&p * s.interleaved() * p.transpose()))
        .collect();
    let plan = sandwich_swap(&relabeled)?;
    let inv: Vec<usize> = order.clone();
    let locals: Vec<LocalSymplectic> = plan.locals.iter().map(|l| l.relabel(&inv)).collect();
    let result = p.transpose() * &plan.result * &p;
    let off = pairing_residual(&result, &[(k, j), (j, k)]);
    Ok(SwapPlan {
        n_modes: n,
        modes: (j, k),
        locals,
        copies_used: plan.copies_used,
        result,
        off_pattern: off,
    })
}

/// Symplectic mode permutation sending mode `m` to mode `perm[m]`.
pub fn permutation_matrix(perm: &[usize]) -> Mat {
    let n = perm.len();
    let mut p = Mat::zeros(2 * n, 2 * n);
    for (m, &t) in perm.iter().enumerate() {
        p[(2 * t, 2 * m)] = 1.0;
        p[(2 * t + 1, 2 * m + 1)] = 1.0;
    }
    p
}

/// Reassembles the swap product from the copies and a schedule.
pub fn replay(copies: &[SymplecticMatrix], locals: &[LocalSymplectic]) -> Result<Mat> {
    if copies.len() != locals.len() + 1 {
        return Err(SymplError::InvalidArgument(
            "need one more copy than locals".into(),
        ));
    }
    Ok(product(copies, locals))
}

/// Mode-level support pattern: `f[j][k]` is set when block `(j, k)` is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportMap {
    pub f: Vec<Vec<u8>>,
}

impl SupportMap {
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let n = rows.len();
        if rows
            .iter()
            .any(|r| r.len() != n || r.iter().any(|&x| x > 1))
        {
            return Err(SymplError::InvalidArgument(
                "support map must be square 0/1".into(),
            ));
        }
        Ok(Self {
            f: rows.iter().map(|r| r.to_vec()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    pub fn all_ones(n: usize) -> Self {
        Self {
            f: vec![vec![1; n]; n],
        }
    }

    /// Boolean matrix product.
    pub fn compose(&self, other: &Self) -> Self {
        let n = self.n();
        let mut f = vec![vec![0u8; n]; n];
        for (i, row) in f.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = u8::from((0..n).any(|k| self.f[i][k] == 1 && other.f[k][j] == 1));
            }
        }
        Self { f }
    }

    pub fn power(&self, c: usize) -> Self {
        let mut acc = self.clone();
        for _ in 1..c.max(1) {
            acc = acc.compose(self);
        }
        acc
    }

    /// Classes of an equivalence relation when the pattern is one, i.e. a
    /// direct sum of all-ones blocks up to relabeling.
    pub fn equivalence_classes(&self) -> Option<Vec<Vec<usize>>> {
        let n = self.n();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut seen = vec![false; n];
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let class: Vec<usize> = (0..n).filter(|&j| self.f[i][j] == 1).collect();
            if !class.contains(&i) {
                return None;
            }
            for &j in &class {
                if seen[j] || (0..n).any(|k| self.f[j][k] != self.f[i][k]) {
                    return None;
                }
                seen[j] = true;
            }
            classes.push(class);
        }
        Some(classes)
    }

    /// How the summands are moved by this pattern: `Some(p)` with
    /// `p[k]` the summand receiving summand `k`, if that is a permutation.
    pub fn summand_permutation(&self, summands: &[Vec<usize>]) -> Option<Vec<usize>> {
        let mut perm = Vec::with_capacity(summands.len());
        for src in summands {
            let hits: Vec<usize> = summands
                .iter()
                .enumerate()
                .filter(|(_, dst)| dst.iter().any(|&j| src.iter().any(|&k| self.f[j][k] == 1)))
                .map(|(i, _)| i)
                .collect();
            if hits.len() != 1 {
                return None;
            }
            perm.push(hits[0]);
        }
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        sorted.dedup();
        (sorted.len() == perm.len()).then_some(perm)
    }
}

/// `f(S)` with blocks whose max-norm is at most `support_tol` treated as zero.
/// `None` uses `1e-10 · ‖S‖_max`.
pub fn support_map(s: &SymplecticMatrix, support_tol: Option<f64>) -> SupportMap {
    let m = s.interleaved();
    let tol = support_tol.unwrap_or(1e-10 * max_abs(&m));
    let n = s.n_modes();
    let f = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| u8::from(max_abs(&m.view((2 * j, 2 * k), (2, 2)).into_owned()) > tol))
                .collect()
        })
        .collect();
    SupportMap { f }
}

/// Stable decomposition reached by powers of a support pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    /// Smallest power whose pattern is a direct sum of all-ones blocks.
    pub c: usize,
    /// Last power of the first full period after `c`.
    pub d: usize,
    pub summands: Vec<Vec<usize>>,
    /// Summand permutations of powers `c..=d`; entry `i` belongs to power `c + i`.
    pub permutations: Vec<Vec<usize>>,
}

impl Stabilization {
    /// Closure of the recorded permutations under composition.
    pub fn group(&self) -> Vec<Vec<usize>> {
        let m = self.summands.len();
        let mut group: Vec<Vec<usize>> = vec![(0..m).collect()];
        let mut frontier = group.clone();
        while let Some(g) = frontier.pop() {
            for p in &self.permutations {
                let h: Vec<usize> = (0..m).map(|k| p[g[k]]).collect();
                if !group.contains(&h) {
                    group.push(h.clone());
                    frontier.push(h);
                }
            }
        }
        group.sort();
        group
    }
}

/// Iterates Boolean powers until the pattern stabilizes. The number of powers
/// explored is capped at `N(N+1)`; the sequence of powers is eventually
/// periodic, and a period that never yields an equivalence pattern is
/// reported with the trivial decomposition of a single summand.
pub fn stabilize(f: &SupportMap) -> Stabilization {
    let n = f.n();
    let bound = (n * (n + 1)).max(2);
    let mut history: Vec<SupportMap> = Vec::new();
    let mut cur = f.clone();
    let mut found = None;
    for c in 1..=bound {
        if let Some(classes) = cur.equivalence_classes() {
            found = Some((c, classes));
            break;
        }
        history.push(cur.clone());
        cur = cur.compose(f);
    }
    let (c, summands) = found.unwrap_or((bound, vec![(0..n).collect()]));
    // follow powers c, c+1, ... until the pattern of power c returns
    let base = f.power(c);
    let mut permutations = Vec::new();
    let mut p = base.clone();
    let mut d = c;
    for step in 0..=n.max(1) * n.max(1) + 1 {
        if step > 0 && p == base {
            break;
        }
        match p.summand_permutation(&summands) {
            Some(perm) => permutations.push(perm),
            None => permutations.push((0..summands.len()).collect()),
        }
        d = c + step;
        p = p.compose(f);
    }
    Stabilization {
        c,
        d,
        summands,
        permutations,
    }
}

/// `stabilize(support_map(S))`.
pub fn stabilize_matrix(s: &SymplecticMatrix) -> Stabilization {
    stabilize(&support_map(s, None))
}

/// Reason a pair of modes is (or is not) swappable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SwapCertificate {
    SameSummand {
        summand: usize,
    },
    SwappedByPower {
        power: usize,
        from: usize,
        to: usize,
    },
    NotSwappable,
}

pub fn classify_swappable_support(
    st: &Stabilization,
    j: usize,
    k: usize,
) -> (bool, SwapCertificate) {
    let find = |m: usize| st.summands.iter().position(|s| s.contains(&m));
    let (Some(sj), Some(sk)) = (find(j), find(k)) else {
        return (false, SwapCertificate::NotSwappable);
    };
    if sj == sk {
        return (true, SwapCertificate::SameSummand { summand: sj });
    }
    for (i, p) in st.permutations.iter().enumerate() {
        if p[sj] == sk && p[sk] == sj {
            return (
                true,
                SwapCertificate::SwappedByPower {
                    power: st.c + i,
                    from: sj,
                    to: sk,
                },
            );
        }
    }
    (false, SwapCertificate::NotSwappable)
}

/// Whether modes `j` and `k` can be swapped with copies of `S` and locals.
pub fn classify_swappable(s: &SymplecticMatrix, j: usize, k: usize) -> (bool, SwapCertificate) {
    classify_swappable_support(&stabilize_matrix(s), j, k)
}
