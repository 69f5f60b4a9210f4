//! Central finite-difference checks of analytic gradients.
//!
//! Every check reduces a function to a scalar, perturbs each input coordinate
//! by ±h and compares `(f(x+h) − f(x−h)) / 2h` with the reverse-mode
//! gradient. The error measure is `|a − n| / max(|a|, |n|, floor)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::{SeqMode, TrainConfig};
use crate::error::Result;
use crate::finetune::{classifier_logits, init_classifier};
use crate::geometry::{RbfConfig, Vec3};
use crate::graph::{build_graph, mask_graph, ProteinGraph};
use crate::matrix::Matrix;
use crate::models::{Model, ModelConfig};
use crate::pretrain::{
    angle_loss, distance_loss, distance_loss_regression, inner_step, mi_objective, BinSpec,
    Pretrainer,
};
use crate::seed;
use crate::structure::{ProteinStructure, Residue};
use crate::tensor::{grad, relu_pattern, sigmoid, Overlay, ParamSet, Role, Tensor};

/// Finite-difference step.
pub const STEP: f64 = 1e-5;
/// Denominator floor of the relative error.
pub const FLOOR: f64 = 1e-5;
/// First-order pass threshold.
pub const TOLERANCE: f64 = 1e-4;
/// Pass threshold for gradients taken through the inner step.
pub const SECOND_ORDER_TOLERANCE: f64 = 1e-3;

pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(floor);
    (analytic - numeric).abs() / scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    /// Coordinates compared.
    pub coords: usize,
    /// Coordinates skipped because the difference straddles a ReLU kink.
    pub skipped: usize,
    /// Input index, coordinate, analytic and numeric value at the worst error.
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl CheckResult {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_error < tolerance
    }
}

fn replaced(inputs: &[Tensor], k: usize, c: usize, delta: f64) -> Result<Vec<Tensor>> {
    let mut out: Vec<Tensor> = inputs.to_vec();
    let t = &inputs[k];
    let mut data = t.data().to_vec();
    data[c] += delta;
    out[k] = Tensor::new(t.rows(), t.cols(), data)?.param();
    Ok(out)
}

/// Central differences of scalar `f` for every coordinate of every input.
/// A coordinate whose ±h evaluations see different ReLU sign patterns
/// straddles a kink and yields `None`.
pub fn numeric_gradient<F>(f: &F, inputs: &[Tensor], h: f64) -> Result<Vec<Vec<Option<f64>>>>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    inputs
        .iter()
        .enumerate()
        .map(|(k, t)| {
            (0..t.len())
                .map(|c| {
                    let plus = f(&replaced(inputs, k, c, h)?)?;
                    let minus = f(&replaced(inputs, k, c, -h)?)?;
                    if relu_pattern(&plus) != relu_pattern(&minus) {
                        return Ok(None);
                    }
                    Ok(Some((plus.item() - minus.item()) / (2.0 * h)))
                })
                .collect()
        })
        .collect()
}

/// Compares `analytic(inputs)` against central differences of `f`.
pub fn check_with<F, A>(name: &str, f: F, analytic: A, inputs: &[Tensor]) -> Result<CheckResult>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
    A: Fn(&[Tensor]) -> Result<Vec<Tensor>>,
{
    let a = analytic(inputs)?;
    let n = numeric_gradient(&f, inputs, STEP)?;
    let mut max_error: f64 = 0.0;
    let mut coords = 0;
    let mut skipped = 0;
    let mut worst = None;
    for (k, (ga, gn)) in a.iter().zip(&n).enumerate() {
        for (c, (&x, y)) in ga.data().iter().zip(gn).enumerate() {
            let Some(y) = *y else {
                skipped += 1;
                continue;
            };
            let e = relative_error(x, y, FLOOR);
            let e = if e.is_nan() { f64::INFINITY } else { e };
            if worst.is_none() || e > max_error {
                max_error = e;
                worst = Some((k, c, x, y));
            }
            coords += 1;
        }
    }
    Ok(CheckResult {
        name: name.into(),
        max_error,
        coords,
        skipped,
        worst,
    })
}

/// Reverse-mode gradient of `f` against central differences.
pub fn check<F>(name: &str, f: F, inputs: &[Tensor]) -> Result<CheckResult>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    check_with(name, &f, |x| Ok(grad(&f(x)?, x, false)?.into_vec()), inputs)
}

/// Checks the gradient of `⟨∇f(x), v⟩`, which exercises every backward rule
/// used by `f` as a differentiable function itself.
pub fn check_second<F>(
    name: &str,
    f: F,
    inputs: &[Tensor],
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult>
where
    F: Fn(&[Tensor]) -> Result<Tensor>,
{
    let dirs: Vec<Tensor> = inputs
        .iter()
        .map(|t| uniform(rng, t.rows(), t.cols(), -1.0, 1.0))
        .collect();
    let directional = |x: &[Tensor]| -> Result<Tensor> {
        let g = grad(&f(x)?, x, true)?;
        let mut acc = Tensor::scalar(0.0);
        for (gi, vi) in g.as_slice().iter().zip(&dirs) {
            acc = acc.add(&gi.mul(vi)?.sum()?)?;
        }
        Ok(acc)
    };
    check(name, directional, inputs)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(rows, cols, data).expect("shape").param()
}

/// Uniform magnitudes in `[lo, hi)` with random sign; keeps inputs off kinks.
fn signed(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let m = rng.gen_range(lo..hi);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(rows, cols, data).expect("shape").param()
}

/// `Σ out ⊙ W` for a fixed random `W`, so every output coordinate matters.
fn weighted(out: Tensor, w: &Tensor) -> Result<Tensor> {
    out.mul(w)?.sum()
}

type OpFn = fn(&[Tensor]) -> Result<Tensor>;

struct OpCase {
    name: &'static str,
    inputs: Vec<Tensor>,
    op: OpFn,
}

fn op_cases(rng: &mut ChaCha8Rng) -> Vec<OpCase> {
    let (m, n, k) = (3, 4, 2);
    let mut u = |r, c| uniform(rng, r, c, -1.0, 1.0);
    let a = u(m, n);
    let b = u(m, n);
    let row = u(1, n);
    let col = u(m, 1);
    let rhs = u(n, k);
    let small = u(1, 1);
    let wide = u(m, k);
    let tall = u(k, n);
    let vec4 = u(1, n);
    let bias = u(1, k);
    let positive = uniform(rng, m, n, 0.5, 2.0);
    let off_kink = signed(rng, m, n, 0.05, 1.0);
    let mut cases = vec![
        OpCase {
            name: "add",
            inputs: vec![a.clone(), b.clone()],
            op: |x| x[0].add(&x[1]),
        },
        OpCase {
            name: "sub",
            inputs: vec![a.clone(), b.clone()],
            op: |x| x[0].sub(&x[1]),
        },
        OpCase {
            name: "mul",
            inputs: vec![a.clone(), b.clone()],
            op: |x| x[0].mul(&x[1]),
        },
        OpCase {
            name: "div",
            inputs: vec![a.clone(), positive.clone()],
            op: |x| x[0].div(&x[1]),
        },
        OpCase {
            name: "neg",
            inputs: vec![a.clone()],
            op: |x| x[0].neg(),
        },
        OpCase {
            name: "scale",
            inputs: vec![a.clone()],
            op: |x| x[0].scale(-1.7),
        },
        OpCase {
            name: "add_scalar",
            inputs: vec![a.clone()],
            op: |x| x[0].add_scalar(0.3),
        },
        OpCase {
            name: "add_row",
            inputs: vec![a.clone(), row.clone()],
            op: |x| x[0].add_row(&x[1]),
        },
        OpCase {
            name: "matmul",
            inputs: vec![a.clone(), rhs.clone()],
            op: |x| x[0].matmul(&x[1]),
        },
        OpCase {
            name: "transpose",
            inputs: vec![a.clone()],
            op: |x| x[0].transpose(),
        },
        OpCase {
            name: "relu",
            inputs: vec![off_kink],
            op: |x| x[0].relu(),
        },
        OpCase {
            name: "tanh",
            inputs: vec![a.clone()],
            op: |x| x[0].tanh(),
        },
        OpCase {
            name: "exp",
            inputs: vec![a.clone()],
            op: |x| x[0].exp(),
        },
        OpCase {
            name: "log",
            inputs: vec![positive],
            op: |x| x[0].log(),
        },
        OpCase {
            name: "sigmoid",
            inputs: vec![a.clone()],
            op: |x| x[0].sigmoid(),
        },
        OpCase {
            name: "softplus",
            inputs: vec![a.clone()],
            op: |x| x[0].softplus(),
        },
        OpCase {
            name: "softmax",
            inputs: vec![a.clone()],
            op: |x| x[0].softmax(),
        },
        OpCase {
            name: "log_softmax",
            inputs: vec![a.clone()],
            op: |x| x[0].log_softmax(),
        },
        OpCase {
            name: "sum",
            inputs: vec![a.clone()],
            op: |x| x[0].sum(),
        },
        OpCase {
            name: "mean",
            inputs: vec![a.clone()],
            op: |x| x[0].mean(),
        },
        OpCase {
            name: "row_sum",
            inputs: vec![a.clone()],
            op: |x| x[0].row_sum(),
        },
        OpCase {
            name: "col_sum",
            inputs: vec![a.clone()],
            op: |x| x[0].col_sum(),
        },
        OpCase {
            name: "col_mean",
            inputs: vec![a.clone()],
            op: |x| x[0].col_mean(),
        },
        OpCase {
            name: "broadcast_cols",
            inputs: vec![col],
            op: |x| x[0].broadcast_cols(4),
        },
        OpCase {
            name: "broadcast_rows",
            inputs: vec![row.clone()],
            op: |x| x[0].broadcast_rows(3),
        },
        OpCase {
            name: "expand",
            inputs: vec![small],
            op: |x| x[0].expand(3, 4),
        },
        OpCase {
            name: "concat_cols",
            inputs: vec![a.clone(), wide],
            op: |x| Tensor::concat_cols(&[&x[0], &x[1]]),
        },
        OpCase {
            name: "concat_rows",
            inputs: vec![a.clone(), tall],
            op: |x| Tensor::concat_rows(&[&x[0], &x[1]]),
        },
        OpCase {
            name: "slice_cols",
            inputs: vec![a.clone()],
            op: |x| x[0].slice_cols(1, 3),
        },
        OpCase {
            name: "slice_rows",
            inputs: vec![a.clone()],
            op: |x| x[0].slice_rows(1, 3),
        },
        OpCase {
            name: "gather_rows",
            inputs: vec![a.clone()],
            op: |x| x[0].gather_rows(&[2, 0, 2, 1]),
        },
        OpCase {
            name: "scatter_add_rows",
            inputs: vec![a.clone()],
            op: |x| x[0].scatter_add_rows(&[1, 1, 3], 4),
        },
        OpCase {
            name: "dot",
            inputs: vec![row, vec4],
            op: |x| x[0].dot(&x[1]),
        },
        OpCase {
            name: "linear",
            inputs: vec![a, rhs, bias],
            op: |x| x[0].linear(&x[1], Some(&x[2])),
        },
    ];
    for c in &mut cases {
        c.inputs = c.inputs.iter().map(|t| t.detach().param()).collect();
    }
    cases
}

/// Every tensor op, first and second order.
pub fn check_ops(seed_value: u64) -> Result<Vec<CheckResult>> {
    let mut rng = seed::rng(seed::stream_seed(seed_value, "gradcheck-ops", 0));
    let mut out = Vec::new();
    for case in op_cases(&mut rng) {
        let probe = (case.op)(&case.inputs)?;
        let w = uniform(&mut rng, probe.rows(), probe.cols(), -1.0, 1.0).detach();
        let op = case.op;
        let f = move |x: &[Tensor]| weighted(op(x)?, &w);
        out.push(check(case.name, &f, &case.inputs)?);
        out.push(check_second(
            &format!("{} (second order)", case.name),
            &f,
            &case.inputs,
            &mut rng,
        )?);
    }
    Ok(out)
}

/// Small random backbone: self-avoiding Cα random walk with 3.8 Å steps
/// (no two Cα closer than 3.7 Å), N and C placed at random offsets around
/// each Cα.
pub fn random_structure(rng: &mut ChaCha8Rng, id: &str, len: usize) -> ProteinStructure {
    let unit = |rng: &mut ChaCha8Rng| loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.2 && n <= 1.0 {
            return v * (1.0 / n);
        }
    };
    let mut ca = Vec3::default();
    let mut residues: Vec<Residue> = Vec::with_capacity(len);
    for k in 0..len {
        if k > 0 {
            let prev = ca;
            ca = loop {
                let next = prev + unit(rng) * 3.8;
                if residues.iter().all(|r| r.ca.distance(next) > 3.7) {
                    break next;
                }
            };
        }
        residues.push(Residue {
            code: "ALA".into(),
            n: ca + unit(rng) * 1.46,
            ca,
            c: ca + unit(rng) * 1.52,
        });
    }
    ProteinStructure::new(id, residues)
}

fn place(a: Vec3, b: Vec3, c: Vec3, bond: f64, angle: f64, torsion: f64) -> Vec3 {
    let bc = (c - b) * (1.0 / (c - b).norm());
    let n = (b - a).cross(bc);
    let n = n * (1.0 / n.norm());
    let m = n.cross(bc);
    let (sa, ca) = (libm::sin(angle), libm::cos(angle));
    c + bc * (-bond * ca)
        + m * (bond * sa * libm::cos(torsion))
        + n * (bond * sa * libm::sin(torsion))
}

/// Backbone with constant (φ, ψ) in radians, trans peptide bonds and
/// standard bond geometry, one residue per entry of `codes`.
pub fn ideal_chain(id: &str, codes: &[&str], phi: f64, psi: f64) -> ProteinStructure {
    let omega = core::f64::consts::PI;
    let tau = 111.2f64.to_radians();
    let mut atoms = vec![Vec3::default(), Vec3::new(1.458, 0.0, 0.0)];
    atoms.push(Vec3::new(
        1.458 - 1.525 * libm::cos(tau),
        1.525 * libm::sin(tau),
        0.0,
    ));
    for _ in 1..codes.len() {
        for (bond, angle, torsion) in [
            (1.329, 116.2f64, psi),
            (1.458, 121.7, omega),
            (1.525, 111.2, phi),
        ] {
            let l = atoms.len();
            let next = place(
                atoms[l - 3],
                atoms[l - 2],
                atoms[l - 1],
                bond,
                angle.to_radians(),
                torsion,
            );
            atoms.push(next);
        }
    }
    let residues = codes
        .iter()
        .enumerate()
        .map(|(i, code)| Residue {
            code: (*code).into(),
            n: atoms[3 * i],
            ca: atoms[3 * i + 1],
            c: atoms[3 * i + 2],
        })
        .collect();
    ProteinStructure::new(id, residues)
}

/// Dimensions small enough to difference every parameter.
pub fn tiny_config(seq_mode: SeqMode, distance_regression: bool) -> TrainConfig {
    TrainConfig {
        seq_dim: 3,
        hidden: 4,
        layers: 2,
        rbf_count: 4,
        bins: 5,
        disc_dim: 3,
        seq_mode,
        distance_regression,
        ..TrainConfig::default()
    }
}

/// Graphs for `count` random proteins of 5 to 7 residues.
pub fn random_graphs(
    rng: &mut ChaCha8Rng,
    cfg: &TrainConfig,
    count: usize,
) -> Result<Vec<ProteinGraph>> {
    let rbf = RbfConfig::uniform(cfg.rbf_count, cfg.rbf_gamma)?;
    (0..count)
        .map(|i| {
            let len = rng.gen_range(5..8);
            let s = random_structure(rng, &format!("p{i}"), len);
            let emb = match cfg.seq_mode {
                SeqMode::Toy => Matrix::zeros(len, 0),
                SeqMode::Frozen => {
                    let data = (0..len * cfg.seq_dim)
                        .map(|_| rng.gen_range(-1.0..1.0))
                        .collect();
                    Matrix::from_vec(len, cfg.seq_dim, data)
                }
            };
            build_graph(&s, &emb, cfg.threshold, &rbf)
        })
        .collect()
}

/// Randomizes every parameter, including zero-initialized biases.
fn jitter(params: &ParamSet, rng: &mut ChaCha8Rng) -> Result<ParamSet> {
    let mut out = params.clone();
    for (name, _, t) in params.iter() {
        let noise: Vec<f64> = t
            .data()
            .iter()
            .map(|v| v + rng.gen_range(-0.3..0.3))
            .collect();
        out.set_values(name, noise)?;
    }
    Ok(out)
}

fn overlay_fn<'a, F>(
    base: &'a ParamSet,
    names: &'a [String],
    f: F,
) -> impl Fn(&[Tensor]) -> Result<Tensor> + 'a
where
    F: Fn(&Overlay<'_>) -> Result<Tensor> + 'a,
{
    move |x: &[Tensor]| {
        let mut o = Overlay::new(base);
        for (n, t) in names.iter().zip(x) {
            o = o.with(n.clone(), t.clone());
        }
        f(&o)
    }
}

fn check_params<F>(name: &str, params: &ParamSet, roles: &[Role], f: F) -> Result<CheckResult>
where
    F: Fn(&Overlay<'_>) -> Result<Tensor>,
{
    let (names, tensors) = params.select(roles);
    let g = overlay_fn(params, &names, f);
    check(name, g, &tensors)
}

/// Model components, pretext losses, the MI objective and the classifier,
/// each differentiated with respect to every parameter it touches.
pub fn check_models(seed_value: u64) -> Result<Vec<CheckResult>> {
    let mut rng = seed::rng(seed::stream_seed(seed_value, "gradcheck-models", 0));
    let mut out = Vec::new();
    for (seq_mode, regression) in [(SeqMode::Toy, false), (SeqMode::Frozen, true)] {
        let cfg = tiny_config(seq_mode, regression);
        let model = Model::new(ModelConfig::from_train(&cfg))?;
        let mut params = jitter(&model.init_params(seed_value), &mut rng)?;
        init_classifier(&mut params, cfg.hidden, 3);
        let params = jitter(&params, &mut rng)?;
        let graphs = random_graphs(&mut rng, &cfg, 3)?;
        let bins = BinSpec::new(cfg.bins, cfg.bin_lo, cfg.bin_hi)?;
        let g0 = &graphs[0];
        let masked = mask_graph(g0, 0.3, seed::mask_seed(seed_value, &g0.id, 0))?;
        let tag = |s: &str| format!("{s} [{seq_mode}]");
        let all = &Role::ALL[..];

        if seq_mode == SeqMode::Toy {
            let w = uniform(&mut rng, g0.len(), cfg.seq_dim, -1.0, 1.0).detach();
            out.push(check_params(
                &tag("seq_encoder"),
                &params,
                &[Role::Sequence],
                |p| weighted(model.seq_forward(p, g0)?, &w),
            )?);
        }
        let w = uniform(&mut rng, g0.len(), cfg.hidden, -1.0, 1.0).detach();
        out.push(check_params(&tag("gnn_fuse"), &params, all, |p| {
            let seq = model.seq_forward(p, g0)?;
            weighted(model.encode(p, &seq, g0.as_input())?.fused, &w)
        })?);
        out.push(check_params(&tag("angle_loss"), &params, all, |p| {
            let seq = model.seq_forward(p, g0)?;
            let enc = model.encode(p, &seq, masked.as_input())?;
            angle_loss(&model, p, &masked, &enc.fused)
        })?);
        let dist_name = if regression {
            "distance_loss_regression"
        } else {
            "distance_loss"
        };
        out.push(check_params(&tag(dist_name), &params, all, |p| {
            let seq = model.seq_forward(p, g0)?;
            let enc = model.encode(p, &seq, g0.as_input())?;
            if regression {
                distance_loss_regression(&model, p, g0, &enc.fused, cfg.threshold)
            } else {
                distance_loss(&model, p, g0, &enc.fused, &bins)
            }
        })?);
        out.push(check_params(&tag("mi_objective"), &params, all, |p| {
            let mut s = Vec::new();
            let mut h = Vec::new();
            for g in &graphs {
                let seq = model.seq_forward(p, g)?;
                s.push(seq.col_mean()?);
                h.push(model.encode(p, &seq, g.as_input())?.states.graph_repr()?);
            }
            let s: Vec<&Tensor> = s.iter().collect();
            let h: Vec<&Tensor> = h.iter().collect();
            mi_objective(
                &model,
                p,
                &Tensor::concat_rows(&s)?,
                &Tensor::concat_rows(&h)?,
            )
        })?);
        let w = uniform(&mut rng, 1, 3, -1.0, 1.0).detach();
        out.push(check_params(&tag("classifier"), &params, all, |p| {
            weighted(classifier_logits(&model, p, g0)?, &w)
        })?);
    }
    Ok(out)
}

/// Gradient of the pretext loss with respect to the structure-side
/// parameters, taken through `θ' = θ + η ∂I/∂θ` on the tiny toy-mode model.
pub fn check_bilevel_model(seed_value: u64, eta: f64) -> Result<CheckResult> {
    let mut rng = seed::rng(seed::stream_seed(seed_value, "gradcheck-bilevel", 0));
    let cfg = TrainConfig {
        mask_ratio: 0.3,
        ..tiny_config(SeqMode::Toy, false)
    };
    let trainer = Pretrainer::new(cfg.clone(), 1)?;
    let model_params = jitter(trainer.params(), &mut rng)?;
    let trainer = Pretrainer::with_params(cfg.clone(), model_params.clone(), 1)?;
    let graphs = random_graphs(&mut rng, &cfg, 3)?;
    let batch: Vec<&ProteinGraph> = graphs.iter().collect();
    let (seq_names, seq_params) = model_params.select(&[Role::Sequence]);
    let (names, tensors) = model_params.select(&[Role::Gnn]);
    let f = |x: &[Tensor]| -> Result<Tensor> {
        let mut o = Overlay::new(&model_params);
        for (n, t) in names.iter().zip(x) {
            o = o.with(n.clone(), t.clone());
        }
        let mi = trainer.batch_mi(&o, &batch)?;
        for (n, t) in seq_names.iter().zip(inner_step(&seq_params, &mi, eta)?) {
            o = o.with(n.clone(), t);
        }
        Ok(trainer.batch_ssl_loss(&o, &batch, 0)?.0)
    };
    let mut r = check(&format!("bilevel outer gradient (eta={eta})"), f, &tensors)?;
    r.name = format!("{} [toy]", r.name);
    Ok(r)
}

/// Result of the closed-form bi-level check.
#[derive(Debug, Clone, PartialEq)]
pub struct BilevelReport {
    /// Total scalar parameters (θ, ω, α).
    pub param_count: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// ω-gradient with the inner step switched off.
    pub first_order: Vec<f64>,
    pub max_error: f64,
    /// `‖g_η − g_0‖ / ‖g_0‖`.
    pub norm_ratio: f64,
}

/// Toy problem with θ, ω ∈ R³ and α ∈ R²:
/// `I = −sp(−θ·ω) − ½ Σ θ_k² ω_k²`, `θ' = θ + η ∂I/∂θ`,
/// `L = (θ'·ω − α₀)² + α₁ Σ tanh θ'_k`.
///
/// The engine differentiates `L(θ'(ω), ω, α)` with respect to ω; the
/// reference differences a plain-float evaluation whose inner gradient is
/// written out by hand.
pub fn check_bilevel_toy(seed_value: u64, eta: f64) -> Result<BilevelReport> {
    let mut rng = seed::rng(seed::stream_seed(seed_value, "bilevel-toy", 0));
    let theta = uniform(&mut rng, 1, 3, -1.0, 1.0);
    let omega = uniform(&mut rng, 1, 3, -1.0, 1.0);
    let alpha = uniform(&mut rng, 1, 2, -1.0, 1.0);

    let engine = |eta: f64| -> Result<Vec<f64>> {
        let mi = theta.dot(&omega)?.neg()?.softplus()?.neg()?.sub(
            &theta
                .mul(&omega)?
                .mul(&theta.mul(&omega)?)?
                .sum()?
                .scale(0.5)?,
        )?;
        let tp = inner_step(core::slice::from_ref(&theta), &mi, eta)?.remove(0);
        let a0 = alpha.slice_cols(0, 1)?;
        let a1 = alpha.slice_cols(1, 2)?;
        let r = tp.dot(&omega)?.sub(&a0)?;
        let loss = r.mul(&r)?.add(&a1.mul(&tp.tanh()?.sum()?)?)?;
        Ok(grad(&loss, core::slice::from_ref(&omega), false)?
            .get(0)
            .data()
            .to_vec())
    };

    let t: Vec<f64> = theta.data().to_vec();
    let a: Vec<f64> = alpha.data().to_vec();
    let reference = |w: &[f64]| -> f64 {
        let tw: f64 = t.iter().zip(w).map(|(x, y)| x * y).sum();
        let s = sigmoid(-tw);
        let tp: Vec<f64> = (0..3)
            .map(|k| t[k] + eta * (s * w[k] - t[k] * w[k] * w[k]))
            .collect();
        let r: f64 = tp.iter().zip(w).map(|(x, y)| x * y).sum::<f64>() - a[0];
        r * r + a[1] * tp.iter().map(|x| libm::tanh(*x)).sum::<f64>()
    };

    let analytic = engine(eta)?;
    let first_order = engine(0.0)?;
    let w0 = omega.data().to_vec();
    let numeric: Vec<f64> = (0..3)
        .map(|k| {
            let mut plus = w0.clone();
            let mut minus = w0.clone();
            plus[k] += STEP;
            minus[k] -= STEP;
            (reference(&plus) - reference(&minus)) / (2.0 * STEP)
        })
        .collect();
    let max_error = analytic
        .iter()
        .zip(&numeric)
        .map(|(x, y)| relative_error(*x, *y, FLOOR))
        .fold(0.0, f64::max);
    let norm = |v: &[f64]| libm::sqrt(v.iter().map(|x| x * x).sum());
    let diff: Vec<f64> = analytic
        .iter()
        .zip(&first_order)
        .map(|(x, y)| x - y)
        .collect();
    Ok(BilevelReport {
        param_count: 8,
        analytic,
        numeric,
        norm_ratio: norm(&diff) / norm(&first_order),
        first_order,
        max_error,
    })
}

/// Whole suite for one seed: ops, models and the bi-level path.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub seed: u64,
    pub results: Vec<CheckResult>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| {
            let tol = if r.name.starts_with("bilevel") {
                SECOND_ORDER_TOLERANCE
            } else {
                TOLERANCE
            };
            r.passed(tol)
        })
    }

    pub fn max_error(&self) -> f64 {
        self.results.iter().map(|r| r.max_error).fold(0.0, f64::max)
    }
}

pub fn run_suite(seed_value: u64) -> Result<GradcheckReport> {
    let mut results = check_ops(seed_value)?;
    results.extend(check_models(seed_value)?);
    results.push(check_bilevel_model(seed_value, 0.5)?);
    let toy = check_bilevel_toy(seed_value, 0.5)?;
    results.push(CheckResult {
        name: "bilevel closed-form toy (eta=0.5)".into(),
        max_error: toy.max_error,
        coords: toy.analytic.len(),
        skipped: 0,
        worst: None,
    });
    Ok(GradcheckReport {
        seed: seed_value,
        results,
    })
}
