//! Loss, gradients, full-batch Adam training, and finite-difference checks.

use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, TrainConfig};
use super::network::{forward_on_tape, maps_to_sheaf, ForwardOptions, GraphContext, ModelState};
use super::tape::{Tape, Tensor};
use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::laplacian::{build_laplacian_with, DegreeMode, TRAINING_JITTER};
use crate::spectral::SpectrumReport;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Loss value and one gradient array per parameter (zeros for frozen ones).
#[derive(Debug, Clone)]
pub struct LossAndGrads {
    pub loss: f64,
    pub grads: Vec<Tensor>,
    pub logits: Tensor,
    /// Map tensors used by the forward pass, one per predictor.
    pub maps: Vec<Tensor>,
}

/// Mean cross-entropy over `rows` and reverse-mode gradients.
pub fn loss_and_gradients(
    ctx: &GraphContext,
    state: &ModelState,
    cfg: &ModelConfig,
    labels: &[usize],
    rows: &[usize],
    opts: &ForwardOptions<'_>,
) -> Result<LossAndGrads> {
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut tape = Tape::new();
    let fw = forward_on_tape(&mut tape, ctx, state, cfg, opts)?;
    let loss = tape.softmax_ce(fw.logits, Rc::new(labels.to_vec()), Rc::new(rows.to_vec()));
    let all = tape.backward(loss);
    let grads = fw
        .params
        .iter()
        .map(|v| {
            let t = tape.value(*v);
            all[v.0].clone().unwrap_or_else(|| Tensor::zeros(t.rows, t.cols))
        })
        .collect();
    Ok(LossAndGrads {
        loss: tape.value(loss).data[0],
        grads,
        logits: tape.value(fw.logits).clone(),
        maps: fw.layer_maps,
    })
}

/// Fraction of `rows` whose arg-max logit equals the label.
pub fn accuracy(logits: &Tensor, labels: &[usize], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let hits = rows
        .iter()
        .filter(|&&r| {
            let row = &logits.data[r * logits.cols..(r + 1) * logits.cols];
            let best = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
            best == labels[r]
        })
        .count();
    hits as f64 / rows.len() as f64
}

fn cross_entropy(logits: &Tensor, labels: &[usize], rows: &[usize]) -> f64 {
    let mut tape = Tape::new();
    let l = tape.constant(logits.clone());
    let v = tape.softmax_ce(l, Rc::new(labels.to_vec()), Rc::new(rows.to_vec()));
    tape.value(v).data[0]
}

/// One Adam step on every non-frozen parameter, L2 weight decay added to
/// the gradient.
pub fn adam_step(state: &mut ModelState, cfg: &ModelConfig, grads: &[Tensor], lr: f64, weight_decay: f64) {
    let frozen: Vec<bool> = state.groups(cfg).iter().map(|g| g.frozen).collect();
    state.step += 1;
    let t = state.step as i32;
    let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
    let mut m1 = std::mem::take(&mut state.first_moment);
    let mut m2 = std::mem::take(&mut state.second_moment);
    for (k, p) in state.tensors_mut().into_iter().enumerate() {
        if frozen[k] {
            continue;
        }
        for i in 0..p.data.len() {
            let g = grads[k].data[i] + weight_decay * p.data[i];
            let m = &mut m1[k].data[i];
            let v = &mut m2[k].data[i];
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            p.data[i] -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
    state.first_moment = m1;
    state.second_moment = m2;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Largest `λ_max(L_N)` over layers when the spectral check ran.
    pub spectral_max: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// State at the best validation accuracy.
    pub state: ModelState,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
}

/// Evaluation-mode logits and predicted maps.
pub fn evaluate(ctx: &GraphContext, state: &ModelState, cfg: &ModelConfig) -> Result<(Tensor, Vec<Tensor>)> {
    let mut tape = Tape::new();
    let fw = forward_on_tape(&mut tape, ctx, state, cfg, &ForwardOptions::default())?;
    Ok((tape.value(fw.logits).clone(), fw.layer_maps))
}

/// Largest eigenvalue over the normalized Laplacians built from `maps`.
pub fn spectral_max(ctx: &GraphContext, cfg: &ModelConfig, maps: &[Tensor]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for m in maps {
        let sheaf = maps_to_sheaf(&ctx.h, cfg, m)?;
        let bundle = build_laplacian_with(&ctx.h, &sheaf, true, DegreeMode::Jitter(TRAINING_JITTER))?;
        worst = worst.max(SpectrumReport::of(&bundle.l.to_dense()?)?.max_eig);
    }
    Ok(worst)
}

/// Full-batch training with early stopping on validation accuracy.
pub fn train(data: &LabeledDataset, cfg: &ModelConfig, tc: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    tc.validate()?;
    let [train_rows, val_rows, test_rows] = &data.splits;
    if train_rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    let ctx = GraphContext::new(&data.hypergraph, &data.features, data.feature_width, cfg)?;
    let mut state = ModelState::init(cfg, data.feature_width, data.num_classes())?;
    let labels = &data.labels;

    let mut history = Vec::new();
    let mut best: Option<(ModelState, usize, f64, f64)> = None;
    let mut since_best = 0;
    for epoch in 0..tc.epochs {
        let opts = ForwardOptions {
            dropout_seed: Some(cfg.seed.wrapping_mul(1_000_003).wrapping_add(epoch as u64)),
            fixed_maps: None,
        };
        let step = loss_and_gradients(&ctx, &state, cfg, labels, train_rows, &opts)?;
        if !step.loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        adam_step(&mut state, cfg, &step.grads, tc.lr, tc.weight_decay);

        let (logits, maps) = evaluate(&ctx, &state, cfg)?;
        if logits.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        let spectral = if tc.spectral_check_every > 0 && epoch % tc.spectral_check_every == 0 {
            Some(spectral_max(&ctx, cfg, &maps)?)
        } else {
            None
        };
        let m = EpochMetrics {
            epoch,
            train_loss: cross_entropy(&logits, labels, train_rows),
            train_acc: accuracy(&logits, labels, train_rows),
            val_loss: if val_rows.is_empty() { 0.0 } else { cross_entropy(&logits, labels, val_rows) },
            val_acc: accuracy(&logits, labels, val_rows),
            test_acc: accuracy(&logits, labels, test_rows),
            spectral_max: spectral,
        };
        let improved = best.as_ref().map_or(true, |b| m.val_acc > b.2);
        if improved {
            best = Some((state.clone(), epoch, m.val_acc, m.test_acc));
            since_best = 0;
        } else {
            since_best += 1;
        }
        history.push(m);
        if since_best >= tc.patience {
            break;
        }
    }
    let (state, best_epoch, best_val_acc, test_acc) = match best {
        Some(b) => b,
        None => {
            let (logits, _) = evaluate(&ctx, &state, cfg)?;
            let val = accuracy(&logits, labels, val_rows);
            let test = accuracy(&logits, labels, test_rows);
            (state, 0, val, test)
        }
    };
    Ok(TrainOutcome {
        state,
        history,
        best_epoch,
        best_val_acc,
        test_acc,
    })
}

/// Worst finite-difference disagreement within one parameter group.
#[derive(Debug, Clone)]
pub struct GroupCheck {
    pub name: String,
    pub probes: usize,
    /// Coordinates passed over because the step flipped a rectifier.
    pub skipped: usize,
    pub max_rel_error: f64,
    /// Largest absolute reverse-mode gradient in the group.
    pub max_abs_grad: f64,
    pub frozen: bool,
}

pub const FD_STEP: f64 = 1e-4;

/// Relative error with a floor on the denominator so that gradients that
/// are zero up to round-off are compared absolutely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares reverse-mode gradients with central differences on up to
/// `probes` random coordinates of every parameter group.
///
/// The complex rectifier is discontinuous on `Re z = 0`, so a probe whose
/// ±step changes any rectifier's pass pattern is skipped and another
/// coordinate is drawn. In light mode the Laplacian is a constant of the
/// backward pass, so the finite differences hold the maps of the
/// unperturbed forward fixed.
pub fn gradient_check(
    ctx: &GraphContext,
    state: &ModelState,
    cfg: &ModelConfig,
    labels: &[usize],
    rows: &[usize],
    probes: usize,
    seed: u64,
) -> Result<Vec<GroupCheck>> {
    let base = loss_and_gradients(ctx, state, cfg, labels, rows, &ForwardOptions::default())?;
    let fixed = if cfg.light { Some(base.maps.clone()) } else { None };
    let opts = ForwardOptions {
        dropout_seed: None,
        fixed_maps: fixed.as_deref(),
    };
    let loss_at = |s: &ModelState| -> Result<(f64, u64)> {
        let mut tape = Tape::new();
        let fw = forward_on_tape(&mut tape, ctx, s, cfg, &opts)?;
        let l = tape.softmax_ce(fw.logits, Rc::new(labels.to_vec()), Rc::new(rows.to_vec()));
        Ok((tape.value(l).data[0], tape.activation_signature()))
    };
    let (_, base_sig) = loss_at(state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = state.groups(cfg);
    let mut out = Vec::with_capacity(groups.len());
    for (k, group) in groups.into_iter().enumerate() {
        let grad = &base.grads[k];
        let mut coords: Vec<usize> = (0..grad.len()).collect();
        coords.shuffle(&mut rng);
        let mut worst: f64 = 0.0;
        let (mut used, mut skipped) = (0, 0);
        for &i in &coords {
            if used == probes {
                break;
            }
            let mut plus = state.clone();
            plus.tensors_mut()[k].data[i] += FD_STEP;
            let mut minus = state.clone();
            minus.tensors_mut()[k].data[i] -= FD_STEP;
            let ((lp, sp), (lm, sm)) = (loss_at(&plus)?, loss_at(&minus)?);
            if sp != base_sig || sm != base_sig {
                skipped += 1;
                continue;
            }
            used += 1;
            let numeric = (lp - lm) / (2.0 * FD_STEP);
            // a frozen group must report exactly zero
            let e = if group.frozen { grad.data[i].abs() } else { relative_error(grad.data[i], numeric) };
            worst = worst.max(e);
        }
        out.push(GroupCheck {
            name: group.name,
            probes: used,
            skipped,
            max_rel_error: worst,
            max_abs_grad: grad.data.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            frozen: group.frozen,
        });
    }
    Ok(out)
}
