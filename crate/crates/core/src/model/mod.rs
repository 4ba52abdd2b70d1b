//! Directed sheaf hypergraph networks (DSHN) and the light variant with a
//! frozen map predictor.

mod config;
mod diffusion;
mod network;
mod tape;
mod train;

pub use config::{Aggregation, ModelConfig, SheafActivation, TrainConfig};
pub use diffusion::{DiffusionCache, DiffusionPlan};
pub use network::{
    complex_layer_norm, complex_relu, diffusion_layer, forward, forward_on_tape, layer_norm_on_tape, maps_to_sheaf,
    predict_sheaf, unwind, Affine, Forward, ForwardOptions, GraphContext, LayerParams, LayerTail, ModelState,
    NodeSignal, ParamGroup, LN_EPS,
};
pub use tape::{RowMix, Tape, Tensor, Var};
pub use train::{
    accuracy, adam_step, evaluate, gradient_check, loss_and_gradients, relative_error, spectral_max, train,
    EpochMetrics, GroupCheck, LossAndGrads, TrainOutcome, FD_STEP,
};
