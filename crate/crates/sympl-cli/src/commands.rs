//! One function per subcommand: parse the config, validate, compute.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sympl::channels::{dilate as dilate_channel, random_cp_channel, GaussianChannel};
use sympl::control::{classify_swappable, sandwich_swap, sandwich_swap_modes};
use sympl::discrete::{
    circuit_compose, dv_teleport_transform, feedforward_table, is_dv_symplectic, Basis, Circuit,
    DvPartition, Gate,
};
use sympl::error::SymplError;
use sympl::linalg::max_abs;
use sympl::scattering::{active_two_mode, coupler_frame, passive_two_mode};
use sympl::sensing::{
    balanced_single_mode_model, ep_two_mode_model, fisher_at, log_grid, log_log_fit,
    FisherQuantity, PhiMethod, ProbeModel, Response, APPROX_DET_THRESHOLD,
};
use sympl::states::coherent;
use sympl::symplectic::{random_symplectic, symplectic_residual, SymplecticMatrix, TOL_SYMP};
use sympl::transduction::{
    active_c_for_transmittance, active_example, active_rt, adaptive_channel, average_fidelity,
    direct_channel_optimized, passive_c_for_transmittance, passive_example, passive_rt,
    ImperfectionCoefficients, PartitionSpec,
};

use crate::output::{Cell, Output, Table};
use crate::{CliError, Common};

type Mat = DMatrix<f64>;

/// A dense matrix as `{"rows", "cols", "data"}` (row-major).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct JMat(#[serde(with = "sympl::json::matrix")] Mat);

fn load<T: DeserializeOwned + Default>(c: &Common) -> Result<T, CliError> {
    let Some(path) = &c.config else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn require_seed(c: &Common) -> Result<u64, CliError> {
    c.seed
        .ok_or_else(|| CliError::Usage("--seed is required for randomized runs".into()))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Domain(SymplError::InvalidArgument(msg.into()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Transducer {
    Passive,
    Active,
}

impl Transducer {
    fn name(self) -> &'static str {
        match self {
            Transducer::Passive => "passive",
            Transducer::Active => "active",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SweepConfig {
    model: Transducer,
    /// Transmittances; mutually exclusive with `cooperativity`.
    t_sq: Option<Vec<f64>>,
    cooperativity: Option<Vec<f64>>,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            model: Transducer::Passive,
            t_sq: Some(vec![0.1, 0.8]),
            cooperativity: None,
            mu: vec![0.0, 0.01, 0.1],
            nu: log_grid(1e-3, 10.0, 5).expect("static grid"),
        }
    }
}

pub fn fidelity_sweep(c: &Common) -> Result<Output, CliError> {
    let cfg: SweepConfig = load(c)?;
    let coops: Vec<f64> = match (&cfg.t_sq, &cfg.cooperativity) {
        (Some(t), None) => t
            .iter()
            .map(|&t2| match cfg.model {
                Transducer::Passive => passive_c_for_transmittance(t2),
                Transducer::Active => active_c_for_transmittance(t2),
            })
            .collect::<Result<_, _>>()?,
        (None, Some(cs)) => cs.clone(),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of t_sq and cooperativity".into(),
            ))
        }
    };
    if coops.is_empty() || cfg.mu.is_empty() || cfg.nu.is_empty() {
        return Err(invalid("empty grid"));
    }
    if cfg
        .mu
        .iter()
        .chain(&cfg.nu)
        .any(|x| !(x.is_finite() && *x >= 0.0))
    {
        return Err(invalid("mu and nu must be finite and non-negative"));
    }
    let p = PartitionSpec::default_for(2)?;
    let mut table = Table::new(&[
        "model",
        "t_sq",
        "mu",
        "nu",
        "f_adaptive",
        "f_direct",
        "classical",
    ]);
    for &coop in &coops {
        let (s, t) = match cfg.model {
            Transducer::Passive => (passive_example(coop)?, passive_rt(coop).1),
            Transducer::Active => {
                if (coop - 1.0).abs() < 1e-12 || coop < 0.0 {
                    return Err(invalid(format!("active cooperativity {coop} is unstable")));
                }
                (active_example(coop)?, active_rt(coop).1)
            }
        };
        let f_direct = average_fidelity(&direct_channel_optimized(&s, &p)?)?;
        for &mu in &cfg.mu {
            for &nu in &cfg.nu {
                let ch = adaptive_channel(&s, &p, &ImperfectionCoefficients::new(nu, mu)?)?;
                table.push(vec![
                    cfg.model.name().into(),
                    (t * t).into(),
                    mu.into(),
                    nu.into(),
                    average_fidelity(&ch)?.into(),
                    f_direct.into(),
                    0.5.into(),
                ]);
            }
        }
    }
    log::info!("fidelity-sweep: {} rows", table.rows.len());
    Ok(Output::Table(table))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ProbeKind {
    /// Two modes at an exceptional point.
    Ep,
    /// One mode with balanced loss and gain (a simple pole).
    Control,
    /// A response that barely depends on θ.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PhiChoice {
    Exact,
    Auto,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EpConfig {
    model: ProbeKind,
    kappa: f64,
    /// Coupling; loss and gain are set to `2g ∓ κ` to sit on the exceptional point.
    g: f64,
    amplitude: f64,
    theta_min: f64,
    theta_max: f64,
    per_decade: usize,
    quantity: FisherQuantity,
    phi: PhiChoice,
}

impl Default for EpConfig {
    fn default() -> Self {
        Self {
            model: ProbeKind::Ep,
            kappa: 1.0,
            g: 1.0,
            amplitude: 1.0,
            theta_min: 1e-3,
            theta_max: 1e-2,
            per_decade: 10,
            quantity: FisherQuantity::QfiXbar,
            phi: PhiChoice::Auto,
        }
    }
}

fn probe(cfg: &EpConfig) -> Result<ProbeModel, SymplError> {
    let a = cfg.amplitude;
    match cfg.model {
        ProbeKind::Ep => {
            let (eta1, eta2) = (2.0 * cfg.g - cfg.kappa, 2.0 * cfg.g + cfg.kappa);
            if eta1 < 0.0 {
                return Err(SymplError::InvalidArgument("need g >= kappa/2".into()));
            }
            ep_two_mode_model(cfg.kappa, cfg.g, eta1, eta2, true)?
                .with_input(coherent(&DVector::from_vec(vec![a, 0.0, 0.0, 0.0]))?)
        }
        ProbeKind::Control => balanced_single_mode_model(cfg.kappa)?
            .with_input(coherent(&DVector::from_vec(vec![a, 0.0]))?),
        ProbeKind::Constant => {
            let m0 = Mat::identity(2, 2) * (4.0 * cfg.kappa);
            let m1 = Mat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
            ProbeModel::new(
                Response::Pencil {
                    scale: cfg.kappa,
                    m0,
                    m1,
                },
                // thermal environment keeps the output state mixed
                Mat::identity(2, 2),
                Mat::identity(2, 2) * 10.0,
                coherent(&DVector::from_vec(vec![a, 0.0]))?,
            )
        }
    }
}

pub fn ep_fisher(c: &Common) -> Result<Output, CliError> {
    let cfg: EpConfig = load(c)?;
    if !(cfg.kappa > 0.0 && cfg.g > 0.0 && cfg.amplitude.is_finite()) {
        return Err(invalid("kappa and g must be positive"));
    }
    let model = probe(&cfg)?;
    let grid = log_grid(cfg.theta_min, cfg.theta_max, cfg.per_decade)?;
    let method = match cfg.phi {
        PhiChoice::Exact => PhiMethod::Exact,
        PhiChoice::Auto => PhiMethod::Auto {
            threshold: APPROX_DET_THRESHOLD,
        },
    };
    let mut table = Table::new(&[
        "theta",
        "I_mu",
        "I_sigma",
        "QFI_xbar",
        "QFI_V",
        "approx_used",
    ]);
    let mut ys = Vec::with_capacity(grid.len());
    for &theta in &grid {
        let r = fisher_at(&model, theta, method)?;
        ys.push(cfg.quantity.pick(&r));
        table.push(vec![
            theta.into(),
            r.i_mu.into(),
            r.i_sigma.into(),
            r.qfi_xbar.into(),
            r.qfi_v.into(),
            r.approx_used.into(),
        ]);
    }
    let fit = log_log_fit(&grid, &ys)?;
    let summary = json!({
        "model": cfg.model,
        "quantity": cfg.quantity,
        "points": grid.len(),
        "slope": fit.slope,
        "stderr": fit.stderr,
        "intercept": fit.intercept,
    });
    Ok(Output::TableWithSummary(table, summary))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomSymplectic {
    n_modes: usize,
    #[serde(default = "default_squeeze")]
    squeeze_bound: f64,
}

fn default_squeeze() -> f64 {
    2.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PermuteConfig {
    /// One transformation, used for all sixteen copies.
    matrix: Option<JMat>,
    /// Sixteen explicit copies.
    copies: Option<Vec<JMat>>,
    random: Option<RandomSymplectic>,
    /// Modes to swap; the first and last by default.
    modes: Option<[usize; 2]>,
}

pub fn permute_plan(c: &Common) -> Result<Output, CliError> {
    let cfg: PermuteConfig = load(c)?;
    let tol = c.tol.unwrap_or(1e-8);
    let checked =
        |m: &JMat| SymplecticMatrix::new(m.0.clone(), TOL_SYMP * (1.0 + max_abs(&m.0).powi(2)));
    let copies: Vec<SymplecticMatrix> = match (&cfg.matrix, &cfg.copies, &cfg.random) {
        (Some(m), None, None) => vec![checked(m)?; 16],
        (None, Some(cs), None) => cs.iter().map(checked).collect::<Result<_, _>>()?,
        (None, None, Some(r)) => {
            let seed = require_seed(c)?;
            vec![random_symplectic(r.n_modes, seed, r.squeeze_bound)?; 16]
        }
        (None, None, None) => {
            let seed = require_seed(c)?;
            vec![random_symplectic(3, seed, default_squeeze())?; 16]
        }
        _ => {
            return Err(CliError::Usage(
                "give one of matrix, copies and random".into(),
            ))
        }
    };
    let n = copies[0].n_modes();
    let plan = match cfg.modes {
        Some([j, k]) => sandwich_swap_modes(&copies, j, k)?,
        None => sandwich_swap(&copies)?,
    };
    let (j, k) = plan.modes;
    let (swappable, certificate) = classify_swappable(&copies[0], j, k);
    let residual = symplectic_residual(&plan.result)?;
    Ok(Output::Document(
        json!({
            "n_modes": n,
            "modes": [j, k],
            "copies_used": plan.copies_used,
            "off_pattern": plan.off_pattern,
            "result_residual": residual,
            "tol": tol,
            "ok": plan.off_pattern < tol,
            "support_swappable": swappable,
            "certificate": certificate,
            "plan": to_value(&plan),
        }),
        None,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Frame {
    /// Physical port labels.
    Ports,
    /// Outputs crossed and mode 2 read with a π phase.
    Example,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ScatterConfig {
    kind: Transducer,
    cooperativity: f64,
    kappa: [f64; 2],
    frame: Frame,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self {
            kind: Transducer::Passive,
            cooperativity: 1.0,
            kappa: [1.0, 1.0],
            frame: Frame::Example,
        }
    }
}

pub fn scatter(c: &Common) -> Result<Output, CliError> {
    let cfg: ScatterConfig = load(c)?;
    let s = match cfg.kind {
        Transducer::Passive => passive_two_mode(cfg.cooperativity, cfg.kappa)?,
        Transducer::Active => active_two_mode(cfg.cooperativity, cfg.kappa)?,
    };
    let (r, t) = match cfg.kind {
        Transducer::Passive => passive_rt(cfg.cooperativity),
        Transducer::Active => active_rt(cfg.cooperativity),
    };
    let tol = c.tol.unwrap_or(TOL_SYMP);
    let symplectic = s.residual <= tol * (1.0 + max_abs(&s.mat).powi(2));
    let mat = match cfg.frame {
        Frame::Ports => s.mat.clone(),
        Frame::Example => coupler_frame(&s.mat)?,
    };
    Ok(Output::Document(
        json!({
            "kind": cfg.kind,
            "cooperativity": cfg.cooperativity,
            "kappa": cfg.kappa,
            "frame": cfg.frame,
            "r": r,
            "t": t,
            "residual": s.residual,
            "symplectic": symplectic,
            "matrix": to_value(&JMat(mat)),
        }),
        None,
    ))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GateSpec {
    Text(String),
    Gate(Gate),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionConfig {
    input: Vec<usize>,
    output: Vec<usize>,
    ancilla: Vec<(usize, Basis)>,
    measured: Vec<(usize, Basis)>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DvConfig {
    n_qudits: usize,
    modulus: u64,
    gates: Vec<GateSpec>,
    partition: Option<PartitionConfig>,
}

impl Default for DvConfig {
    fn default() -> Self {
        let text = |s: &str| GateSpec::Text(s.to_string());
        Self {
            n_qudits: 3,
            modulus: 2,
            gates: vec![text("H 1"), text("CNOT 1 2"), text("CNOT 0 1"), text("H 0")],
            partition: Some(PartitionConfig {
                input: vec![0],
                output: vec![2],
                ancilla: vec![(1, Basis::Z), (2, Basis::Z)],
                measured: vec![(0, Basis::Z), (1, Basis::Z)],
            }),
        }
    }
}

pub fn dv_teleport(c: &Common) -> Result<Output, CliError> {
    let cfg: DvConfig = load(c)?;
    let gates = cfg
        .gates
        .into_iter()
        .map(|g| match g {
            GateSpec::Text(s) => Gate::parse(&s),
            GateSpec::Gate(g) => Ok(g),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let circuit = Circuit {
        n_qudits: cfg.n_qudits,
        modulus: cfg.modulus,
        gates,
    };
    let s = circuit_compose(&circuit)?;
    let mut doc = json!({
        "n_qudits": cfg.n_qudits,
        "modulus": cfg.modulus,
        "S": to_value(s.matrix()),
    });
    let mut table = None;
    if let Some(p) = cfg.partition {
        let part = DvPartition {
            n_qudits: cfg.n_qudits,
            input: p.input,
            output: p.output,
            ancilla: p.ancilla,
            measured: p.measured,
        };
        let t = dv_teleport_transform(s.matrix(), &part)?;
        let ff = feedforward_table(&t.f_star)?;
        let join = |v: &[u64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut tab = Table::new(&["syndrome", "correction", "pauli"]);
        let mut lines = Vec::new();
        for e in &ff {
            tab.push(vec![
                Cell::from(join(&e.syndrome)),
                join(&e.correction).into(),
                e.pauli.clone().into(),
            ]);
            lines.push(format!("m = ({}) -> apply {}", join(&e.syndrome), e.pauli));
        }
        let obj = doc.as_object_mut().expect("object literal");
        obj.insert("s_tilde".into(), to_value(&t.s_tilde));
        obj.insert(
            "s_tilde_symplectic".into(),
            Value::Bool(is_dv_symplectic(&t.s_tilde)),
        );
        obj.insert("f_star".into(), to_value(&t.f_star));
        obj.insert("feedforward".into(), to_value(&ff));
        obj.insert("table".into(), to_value(&lines));
        table = Some(tab);
    }
    Ok(Output::Document(doc, table))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomChannel {
    n_modes: usize,
    #[serde(default = "default_margin")]
    margin: f64,
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DilateConfig {
    channel: Option<GaussianChannel>,
    random: Option<RandomChannel>,
}

pub fn dilate(c: &Common) -> Result<Output, CliError> {
    let cfg: DilateConfig = load(c)?;
    let channel = match (cfg.channel, cfg.random) {
        (Some(ch), None) => GaussianChannel::new(ch.t, ch.n, Some(ch.d))?,
        (None, r) => {
            let r = r.unwrap_or(RandomChannel {
                n_modes: 1,
                margin: default_margin(),
            });
            let mut rng = ChaCha8Rng::seed_from_u64(require_seed(c)?);
            random_cp_channel(r.n_modes, r.margin, &mut rng)?
        }
        _ => return Err(CliError::Usage("give one of channel and random".into())),
    };
    let tol = c.tol.unwrap_or(1e-8);
    let dil = dilate_channel(&channel)?;
    let back = dil.channel()?;
    let dt = max_abs(&(&back.t - &channel.t));
    let dn = max_abs(&(&back.n - &channel.n));
    let blocks = dil.block_conditions();
    let residual = symplectic_residual(&dil.s)?;
    Ok(Output::Document(
        json!({
            "report": {
                "roundtrip_t": dt,
                "roundtrip_n": dn,
                "block_conditions": blocks,
                "symplectic_residual": residual,
                "env_modes": dil.n_b,
                "tol": tol,
                "passed": dt.max(dn) < tol,
            },
            "channel": to_value(&channel),
            "dilation": to_value(&dil),
        }),
        None,
    ))
}
