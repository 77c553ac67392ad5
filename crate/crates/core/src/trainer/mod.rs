//! Cross-validated training, evaluation and robustness studies.

mod checkpoint;
mod data;
mod evaluate;
mod kfold;
mod metrics;
mod train;

pub use checkpoint::{checkpoint_from_str, checkpoint_to_string, load_checkpoint, save_checkpoint};
pub use data::{load_prepared, prepare_graph, Corpus};
pub use evaluate::{
    evaluate, evaluate_graphs, evaluate_perturbed, evaluate_perturbed_graphs, predict,
    predict_proba, robustness_table, Perturbation, PerturbedReport, RobustnessTable,
};
pub use kfold::{kfold_split, Fold};
pub use metrics::{ClassMetrics, Metrics};
pub use train::{
    evaluate_indices, mean_accuracy, mean_class_accuracy, summary_tsv, train, train_epoch,
    train_prepared, FoldResult, ModelSelection, TrainConfig,
};
