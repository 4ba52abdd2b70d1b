//! Network parameters and the recorded forward pass.

use std::rc::Rc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Aggregation, ModelConfig, SheafActivation};
use super::diffusion::DiffusionPlan;
use super::tape::{RowMix, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::hypergraph::DirectedHypergraph;
use crate::laplacian::{apply_laplacian, LaplacianBundle, TRAINING_JITTER};
use crate::sheaf::{MapShape, SheafAssignment, SheafConfig};

/// Variance floor in complex layer normalization.
pub const LN_EPS: f64 = 1e-5;

/// Complex node signal of shape `(n·d) × f`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSignal {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Complex64>,
}

impl NodeSignal {
    pub fn new(rows: usize, cols: usize, values: Vec<Complex64>) -> Self {
        assert_eq!(rows * cols, values.len());
        NodeSignal { rows, cols, values }
    }

    /// `2·rows × cols` real layout, real parts first.
    pub fn stacked(&self) -> Tensor {
        let mut data: Vec<f64> = self.values.iter().map(|z| z.re).collect();
        data.extend(self.values.iter().map(|z| z.im));
        Tensor::new(2 * self.rows, self.cols, data)
    }

    pub fn from_stacked(t: &Tensor) -> Self {
        let half = t.len() / 2;
        let values = (0..half).map(|k| Complex64::new(t.data[k], t.data[half + k])).collect();
        NodeSignal::new(t.rows / 2, t.cols, values)
    }
}

/// `[Re X ‖ Im X]` for a row-major complex `rows × cols` array.
pub fn unwind(x: &[Complex64], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(x.len(), rows * cols);
    let mut out = Vec::with_capacity(2 * x.len());
    for r in 0..rows {
        let row = &x[r * cols..(r + 1) * cols];
        out.extend(row.iter().map(|z| z.re));
        out.extend(row.iter().map(|z| z.im));
    }
    out
}

/// Keeps `z` when its real part is strictly positive.
pub fn complex_relu(z: Complex64) -> Complex64 {
    if z.re > 0.0 {
        z
    } else {
        Complex64::new(0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub w: Tensor,
    pub b: Tensor,
}

impl Affine {
    fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        Affine {
            w: glorot(rng, fan_in, fan_out),
            b: Tensor::zeros(1, fan_out),
        }
    }
}

fn glorot<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::new(fan_in, fan_out, (0..fan_in * fan_out).map(|_| rng.gen_range(-a..a)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `d × d` stalk mixing.
    pub w1: Tensor,
    /// `f × f` channel mixing.
    pub w2: Tensor,
    /// `2 × 2` affine of the complex layer norm, row-major.
    pub gamma: Tensor,
    /// `1 × 2` shift of the complex layer norm.
    pub beta: Tensor,
}

/// All learnable arrays plus Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub input: Affine,
    pub layers: Vec<LayerParams>,
    /// One predictor per layer with a dynamic sheaf, otherwise one in total.
    pub phi: Vec<Vec<Affine>>,
    pub classifier: [Affine; 2],
    pub(crate) first_moment: Vec<Tensor>,
    pub(crate) second_moment: Vec<Tensor>,
    pub step: u64,
}

/// Name of a parameter group and whether it is frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub name: String,
    pub frozen: bool,
}

impl ModelState {
    /// Glorot-uniform weights, zero biases, `γ = I/√2`, `β = 0`.
    pub fn init(cfg: &ModelConfig, in_features: usize, classes: usize) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (d, f) = (cfg.stalk_dim, cfg.hidden);
        let input = Affine::glorot(&mut rng, in_features, d * f);
        let layers = (0..cfg.num_layers)
            .map(|_| LayerParams {
                w1: glorot(&mut rng, d, d),
                w2: glorot(&mut rng, f, f),
                gamma: Tensor::new(2, 2, vec![0.5f64.sqrt(), 0.0, 0.0, 0.5f64.sqrt()]),
                beta: Tensor::zeros(1, 2),
            })
            .collect();
        let phi = (0..cfg.num_predictors())
            .map(|_| {
                let width = 4 * d * f;
                if cfg.phi_depth == 1 {
                    vec![Affine::glorot(&mut rng, width, cfg.map_width())]
                } else {
                    vec![
                        Affine::glorot(&mut rng, width, width),
                        Affine::glorot(&mut rng, width, cfg.map_width()),
                    ]
                }
            })
            .collect();
        let classifier = [
            Affine::glorot(&mut rng, 2 * d * f, cfg.classifier_width),
            Affine::glorot(&mut rng, cfg.classifier_width, classes),
        ];
        let mut state = ModelState {
            input,
            layers,
            phi,
            classifier,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step: 0,
        };
        let zeros: Vec<Tensor> = state.tensors().iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect();
        state.first_moment = zeros.clone();
        state.second_moment = zeros;
        Ok(state)
    }

    /// Every parameter array in a fixed order.
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.input.w, &self.input.b];
        for l in &self.layers {
            out.extend([&l.w1, &l.w2, &l.gamma, &l.beta]);
        }
        for p in &self.phi {
            for a in p {
                out.extend([&a.w, &a.b]);
            }
        }
        for a in &self.classifier {
            out.extend([&a.w, &a.b]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.input.w, &mut self.input.b];
        for l in &mut self.layers {
            out.extend([&mut l.w1, &mut l.w2, &mut l.gamma, &mut l.beta]);
        }
        for p in &mut self.phi {
            for a in p {
                out.extend([&mut a.w, &mut a.b]);
            }
        }
        for a in &mut self.classifier {
            out.extend([&mut a.w, &mut a.b]);
        }
        out
    }

    /// Names aligned with [`ModelState::tensors`]; map-predictor groups are
    /// frozen in light mode.
    pub fn groups(&self, cfg: &ModelConfig) -> Vec<ParamGroup> {
        let g = |name: String, frozen: bool| ParamGroup { name, frozen };
        let mut out = vec![g("input.w".into(), false), g("input.b".into(), false)];
        for i in 0..self.layers.len() {
            for part in ["w1", "w2", "gamma", "beta"] {
                out.push(g(format!("layer{i}.{part}"), false));
            }
        }
        for (i, p) in self.phi.iter().enumerate() {
            for s in 0..p.len() {
                out.push(g(format!("phi{i}.{s}.w"), cfg.light));
                out.push(g(format!("phi{i}.{s}.b"), cfg.light));
            }
        }
        for s in 0..2 {
            out.push(g(format!("classifier.{s}.w"), false));
            out.push(g(format!("classifier.{s}.b"), false));
        }
        out
    }
}

/// Per-dataset structure shared by every forward pass.
#[derive(Debug, Clone)]
pub struct GraphContext {
    pub h: DirectedHypergraph,
    pub features: Tensor,
    plan: Rc<DiffusionPlan>,
    gather_nodes: Rc<RowMix>,
    aggregate: Rc<RowMix>,
    gather_edges: Rc<RowMix>,
}

impl GraphContext {
    pub fn new(h: &DirectedHypergraph, features: &[f64], width: usize, cfg: &ModelConfig) -> Result<Self> {
        let n = h.num_vertices();
        if features.len() != n * width {
            return Err(Error::Dimension {
                expected: n * width,
                found: features.len(),
            });
        }
        let incidences = h.incidences();
        let gather_nodes = RowMix {
            out_rows: incidences.len(),
            entries: incidences.iter().enumerate().map(|(k, inc)| (k, inc.vertex, 1.0)).collect(),
        };
        let gather_edges = RowMix {
            out_rows: incidences.len(),
            entries: incidences.iter().enumerate().map(|(k, inc)| (k, inc.edge, 1.0)).collect(),
        };
        let aggregate = RowMix {
            out_rows: h.num_edges(),
            entries: incidences
                .iter()
                .map(|inc| {
                    let w = match cfg.aggregation {
                        Aggregation::Mean => 1.0 / h.edges()[inc.edge].degree() as f64,
                        Aggregation::Sum => 1.0,
                    };
                    (inc.edge, inc.vertex, w)
                })
                .collect(),
        };
        let plan = DiffusionPlan::new(h, cfg.q, cfg.stalk_dim, cfg.map_shape, TRAINING_JITTER);
        Ok(GraphContext {
            h: h.clone(),
            features: Tensor::new(n, width, features.to_vec()),
            plan: Rc::new(plan),
            gather_nodes: Rc::new(gather_nodes),
            aggregate: Rc::new(aggregate),
            gather_edges: Rc::new(gather_edges),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.h.num_vertices()
    }

    pub fn plan(&self) -> &Rc<DiffusionPlan> {
        &self.plan
    }
}

/// Options for one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardOptions<'a> {
    /// Sheaf dropout masks are drawn from this seed when set.
    pub dropout_seed: Option<u64>,
    /// Use these map tensors (one per predictor) instead of predicting.
    pub fixed_maps: Option<&'a [Tensor]>,
}

/// Handles recorded by [`forward_on_tape`].
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Var,
    /// Tape variables of the parameters, aligned with [`ModelState::tensors`].
    pub params: Vec<Var>,
    /// Map tensors used at each layer (before dropout).
    pub layer_maps: Vec<Tensor>,
    /// Signal entering the classifier, stacked.
    pub signal: Var,
}

/// Records the whole network on `tape`.
pub fn forward_on_tape(
    tape: &mut Tape,
    ctx: &GraphContext,
    state: &ModelState,
    cfg: &ModelConfig,
    opts: &ForwardOptions<'_>,
) -> Result<Forward> {
    let groups = state.groups(cfg);
    let params: Vec<Var> = state
        .tensors()
        .into_iter()
        .zip(&groups)
        .map(|(t, g)| if g.frozen { tape.constant(t.clone()) } else { tape.param(t.clone()) })
        .collect();
    let n = ctx.num_vertices();
    let (d, f) = (cfg.stalk_dim, cfg.hidden);
    if ctx.features.cols != state.input.w.rows {
        return Err(Error::Dimension {
            expected: state.input.w.rows,
            found: ctx.features.cols,
        });
    }

    let mut cursor = params.iter().copied();
    let mut next = || cursor.next().expect("parameter layout");
    let (in_w, in_b) = (next(), next());
    let layer_vars: Vec<[Var; 4]> = (0..state.layers.len()).map(|_| [next(), next(), next(), next()]).collect();
    let phi_vars: Vec<Vec<(Var, Var)>> = state
        .phi
        .iter()
        .map(|p| p.iter().map(|_| (next(), next())).collect())
        .collect();
    let cls = [(next(), next()), (next(), next())];

    let feats = tape.constant(ctx.features.clone());
    let proj = tape.matmul(feats, in_w);
    let proj = tape.add(proj, in_b);
    let real = tape.reshape(proj, n * d, f);
    let zeros = tape.constant(Tensor::zeros(n * d, f));
    let mut x = tape.concat_rows(real, zeros);

    let mut dropout_rng = opts.dropout_seed.map(ChaCha8Rng::seed_from_u64);
    let mut layer_maps = Vec::new();
    let mut shared: Option<Var> = None;
    for (l, lv) in layer_vars.iter().enumerate() {
        let maps = match (&opts.fixed_maps, shared) {
            (Some(fixed), _) => {
                let idx = if cfg.dynamic_sheaf { l } else { 0 };
                tape.constant(fixed[idx].clone())
            }
            (None, Some(m)) if !cfg.dynamic_sheaf => m,
            (None, _) => {
                let idx = if cfg.dynamic_sheaf { l } else { 0 };
                predict_maps(tape, ctx, cfg, x, &phi_vars[idx])
            }
        };
        if shared.is_none() {
            shared = Some(maps);
        }
        if cfg.dynamic_sheaf || l == 0 {
            layer_maps.push(tape.value(maps).clone());
        }
        let maps = match dropout_rng.as_mut() {
            Some(rng) if cfg.sheaf_dropout > 0.0 => {
                let rate = cfg.sheaf_dropout;
                let rows = tape.value(maps).rows;
                let keep: Vec<f64> = (0..rows)
                    .map(|_| if rng.gen_bool(rate) { 0.0 } else { 1.0 / (1.0 - rate) })
                    .collect();
                let mask = tape.constant(Tensor::new(rows, 1, keep));
                tape.mul(maps, mask)
            }
            _ => maps,
        };
        x = diffusion_step(tape, ctx, cfg, x, maps, lv)?;
    }

    let signal = x;
    let unwound = unwind_on_tape(tape, x, n, d * f);
    let h1 = tape.matmul(unwound, cls[0].0);
    let h1 = tape.add(h1, cls[0].1);
    let h1 = tape.relu(h1);
    let logits = tape.matmul(h1, cls[1].0);
    let logits = tape.add(logits, cls[1].1);
    Ok(Forward {
        logits,
        params,
        layer_maps,
        signal,
    })
}

/// Per-node `[Re x_u ‖ Im x_u]`, `n × 2k`, from a stacked `(2n·d) × f` signal
/// with `k = d·f`.
fn unwind_on_tape(tape: &mut Tape, x: Var, n: usize, k: usize) -> Var {
    let rows = tape.value(x).rows;
    let re = tape.slice_rows(x, 0, rows / 2);
    let im = tape.slice_rows(x, rows / 2, rows);
    let re = tape.reshape(re, n, k);
    let im = tape.reshape(im, n, k);
    tape.concat_cols(&[re, im])
}

fn predict_maps(tape: &mut Tape, ctx: &GraphContext, cfg: &ModelConfig, x: Var, phi: &[(Var, Var)]) -> Var {
    let n = ctx.num_vertices();
    let mut u = unwind_on_tape(tape, x, n, cfg.stalk_dim * cfg.hidden);
    if cfg.light {
        u = tape.detach(u);
    }
    let node = tape.mix(u, ctx.gather_nodes.clone());
    let edge = tape.mix(u, ctx.aggregate.clone());
    let edge = tape.mix(edge, ctx.gather_edges.clone());
    let mut z = tape.concat_cols(&[node, edge]);
    for (i, &(w, b)) in phi.iter().enumerate() {
        z = tape.matmul(z, w);
        z = tape.add(z, b);
        if i + 1 < phi.len() {
            z = tape.relu(z);
        }
    }
    match cfg.sheaf_activation {
        SheafActivation::Sigmoid => tape.sigmoid(z),
        SheafActivation::Tanh => tape.tanh(z),
        SheafActivation::None => z,
    }
}

fn diffusion_step(
    tape: &mut Tape,
    ctx: &GraphContext,
    cfg: &ModelConfig,
    x: Var,
    maps: Var,
    lv: &[Var; 4],
) -> Result<Var> {
    let [w1, w2, gamma, beta] = *lv;
    let mut y = if cfg.left_projection { tape.block_left(x, w1) } else { x };
    y = tape.matmul(y, w2);
    y = tape.diffusion(y, maps, ctx.plan.clone());
    if cfg.residual {
        y = tape.add(y, x);
    }
    let y = layer_norm_on_tape(tape, y, gamma, beta);
    Ok(tape.complex_relu(y))
}

/// Complex layer normalization of a stacked signal, per column across rows.
pub fn layer_norm_on_tape(tape: &mut Tape, y: Var, gamma: Var, beta: Var) -> Var {
    let rows = tape.value(y).rows / 2;
    let re = tape.slice_rows(y, 0, rows);
    let im = tape.slice_rows(y, rows, 2 * rows);
    let mr = tape.mean_rows(re);
    let mi = tape.mean_rows(im);
    let cr = tape.sub(re, mr);
    let ci = tape.sub(im, mi);

    let rr = tape.mul(cr, cr);
    let ii = tape.mul(ci, ci);
    let ri = tape.mul(cr, ci);
    let srr = tape.mean_rows(rr);
    let srr = tape.shift(srr, LN_EPS);
    let sii = tape.mean_rows(ii);
    let sii = tape.shift(sii, LN_EPS);
    let sri = tape.mean_rows(ri);

    // Σ^{-1/2} = adj(Σ + sI) / (s·t), s = √det Σ, t = √(tr Σ + 2s)
    let p = tape.mul(srr, sii);
    let q = tape.mul(sri, sri);
    let det = tape.sub(p, q);
    let s = tape.sqrt(det);
    let tr = tape.add(srr, sii);
    let s2 = tape.scale(s, 2.0);
    let t = tape.add(tr, s2);
    let t = tape.sqrt(t);
    let st = tape.mul(s, t);
    let inv = tape.recip(st);
    let a11 = tape.add(sii, s);
    let a11 = tape.mul(a11, inv);
    let a22 = tape.add(srr, s);
    let a22 = tape.mul(a22, inv);
    let a12 = tape.mul(sri, inv);
    let a12 = tape.scale(a12, -1.0);

    let t1 = tape.mul(a11, cr);
    let t2 = tape.mul(a12, ci);
    let xr = tape.add(t1, t2);
    let t3 = tape.mul(a12, cr);
    let t4 = tape.mul(a22, ci);
    let xi = tape.add(t3, t4);

    let g = [0, 1, 2, 3].map(|k| tape.pick(gamma, k));
    let b = [0, 1].map(|k| tape.pick(beta, k));
    let mut out = [xr; 2];
    for (row, o) in out.iter_mut().enumerate() {
        let u = tape.mul(g[2 * row], xr);
        let v = tape.mul(g[2 * row + 1], xi);
        let s = tape.add(u, v);
        *o = tape.add(s, b[row]);
    }
    tape.concat_rows(out[0], out[1])
}

/// Normalizes each column of a complex signal: center, whiten with the
/// regularized 2×2 covariance of (Re, Im), then apply `γ x̃ + β`.
pub fn complex_layer_norm(x: &NodeSignal, gamma: [f64; 4], beta: [f64; 2]) -> NodeSignal {
    let mut tape = Tape::new();
    let y = tape.constant(x.stacked());
    let g = tape.constant(Tensor::new(2, 2, gamma.to_vec()));
    let b = tape.constant(Tensor::new(1, 2, beta.to_vec()));
    let out = layer_norm_on_tape(&mut tape, y, g, b);
    NodeSignal::from_stacked(tape.value(out))
}

/// Restriction maps predicted from a node signal by a map predictor.
pub fn predict_sheaf(
    x: &NodeSignal,
    ctx: &GraphContext,
    phi: &[Affine],
    cfg: &ModelConfig,
) -> Result<SheafAssignment> {
    let mut tape = Tape::new();
    let xv = tape.constant(x.stacked());
    let vars: Vec<(Var, Var)> = phi
        .iter()
        .map(|a| (tape.constant(a.w.clone()), tape.constant(a.b.clone())))
        .collect();
    let maps = predict_maps(&mut tape, ctx, cfg, xv, &vars);
    maps_to_sheaf(&ctx.h, cfg, tape.value(maps))
}

/// Wraps a map tensor (one row per incidence) as a sheaf assignment.
pub fn maps_to_sheaf(h: &DirectedHypergraph, cfg: &ModelConfig, maps: &Tensor) -> Result<SheafAssignment> {
    let d = cfg.stalk_dim;
    let blocks = (0..maps.rows)
        .map(|k| {
            let row = &maps.data[k * maps.cols..(k + 1) * maps.cols];
            match cfg.map_shape {
                MapShape::Full => row.to_vec(),
                _ => {
                    let mut m = vec![0.0; d * d];
                    (0..d).for_each(|i| m[i * d + i] = row[i]);
                    m
                }
            }
        })
        .collect();
    let shape = if cfg.map_shape == MapShape::Full { MapShape::Full } else { MapShape::Diagonal };
    SheafAssignment::from_maps(h, SheafConfig::new(cfg.q, d, shape)?, blocks)
}

/// What follows the diffusion inside a layer.
#[derive(Debug, Clone, Copy)]
pub enum LayerTail {
    /// Return the linear part unchanged.
    Linear,
    /// Complex layer norm with `(γ, β)`, then complex ReLU.
    Normalized { gamma: [f64; 4], beta: [f64; 2] },
}

/// One diffusion layer evaluated against an assembled normalized Laplacian:
/// `Y = Q_N (I ⊗ W₁) X W₂`, plus `X` when `residual`, then `tail`.
pub fn diffusion_layer(
    x: &NodeSignal,
    bundle: &LaplacianBundle,
    w1: &Tensor,
    w2: &Tensor,
    residual: bool,
    tail: LayerTail,
) -> Result<NodeSignal> {
    let d = bundle.d();
    let (rows, f) = (x.rows, x.cols);
    if !bundle.normalized || rows != bundle.num_vertices() * d || w1.rows != d || w2.rows != f {
        return Err(Error::Dimension {
            expected: bundle.num_vertices() * d,
            found: rows,
        });
    }
    // Z = (I ⊗ W₁) X W₂
    let mut z = vec![Complex64::new(0.0, 0.0); rows * w2.cols];
    for b in 0..rows / d {
        for i in 0..d {
            for k in 0..d {
                let a = w1.get(i, k);
                for c in 0..f {
                    let xv = x.values[(b * d + k) * f + c] * a;
                    for j in 0..w2.cols {
                        z[(b * d + i) * w2.cols + j] += xv * w2.get(c, j);
                    }
                }
            }
        }
    }
    // Q_N Z = Z − L_N Z
    let lz = apply_laplacian(bundle, &z, w2.cols)?;
    let mut y: Vec<Complex64> = z.iter().zip(&lz).map(|(a, b)| a - b).collect();
    if residual {
        y.iter_mut().zip(&x.values).for_each(|(a, b)| *a += b);
    }
    let y = NodeSignal::new(rows, w2.cols, y);
    Ok(match tail {
        LayerTail::Linear => y,
        LayerTail::Normalized { gamma, beta } => {
            let mut out = complex_layer_norm(&y, gamma, beta);
            out.values.iter_mut().for_each(|z| *z = complex_relu(*z));
            out
        }
    })
}

/// Logits of the network (no tape retained).
pub fn forward(ctx: &GraphContext, state: &ModelState, cfg: &ModelConfig) -> Result<Tensor> {
    let mut tape = Tape::new();
    let fw = forward_on_tape(&mut tape, ctx, state, cfg, &ForwardOptions::default())?;
    Ok(tape.value(fw.logits).clone())
}
