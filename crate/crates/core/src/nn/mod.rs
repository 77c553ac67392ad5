//! Graph convolutional network with exact gradients, written against
//! `ndarray` in double precision.

mod adam;
mod adjacency;
mod batch;
pub mod gradcheck;
mod layers;
mod loss;
mod model;

pub use adam::{AdamConfig, AdamState};
pub use adjacency::NormAdj;
pub use batch::{BatchedGraphs, PreparedGraph};
pub use gradcheck::{grad_check, random_problem, GradCheckReport};
pub use layers::{
    dropout, dropout_mask, gcn_forward, global_mean_pool, relu, GcnLayer, Linear, Tensor2D,
};
pub use loss::{cross_entropy, softmax};
pub use model::{
    argmax_rows, Gradients, LayerGrads, Mode, Model, Tape, DEFAULT_DROPOUT, DEFAULT_HIDDEN_DIM,
    PARAM_NAMES,
};
