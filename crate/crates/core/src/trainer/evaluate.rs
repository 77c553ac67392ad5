use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::checkpoint::load_checkpoint;
use super::data::{prepare_graph, Corpus};
use super::metrics::Metrics;
use crate::error::{Error, Result};
use crate::graphrep::{relabel, urns_sample, Graph, Permutation};
use crate::matgen::DatasetManifest;
use crate::nn::{argmax_rows, softmax, BatchedGraphs, Model, PreparedGraph};
use crate::rng;

const EVAL_BATCH: usize = 64;

/// Class probabilities for each graph, dropout off.
pub fn predict_proba(model: &Model, graphs: &[&Graph], clamp: bool) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((graphs.len(), model.num_classes()));
    let mut row = 0;
    for chunk in graphs.chunks(EVAL_BATCH) {
        let prepared = chunk
            .iter()
            .map(|g| prepare_graph(g, &model.encoder, clamp, 0))
            .collect::<Result<Vec<PreparedGraph>>>()?;
        let batch = BatchedGraphs::from_owned(&prepared)?;
        let probs = softmax(model.forward_eval(&batch)?.view());
        out.slice_mut(ndarray::s![row..row + chunk.len(), ..]).assign(&probs);
        row += chunk.len();
    }
    Ok(out)
}

/// Predicted class id for each graph.
pub fn predict(model: &Model, graphs: &[&Graph], clamp: bool) -> Result<Vec<usize>> {
    predict_proba(model, graphs, clamp).map(|p| argmax_rows(p.view()))
}

fn check_classes(model: &Model, class_names: &[String]) -> Result<()> {
    if model.class_names != class_names {
        return Err(Error::InvalidInput(format!(
            "checkpoint classes {:?} differ from dataset classes {:?}",
            model.class_names, class_names
        )));
    }
    Ok(())
}

/// Metrics of `model` over labelled graphs.
pub fn evaluate_graphs(model: &Model, graphs: &[Graph], labels: &[usize], clamp: bool) -> Result<Metrics> {
    let refs: Vec<&Graph> = graphs.iter().collect();
    let preds = predict(model, &refs, clamp)?;
    let pairs: Vec<(usize, usize)> = labels.iter().copied().zip(preds).collect();
    Metrics::from_pairs(&model.class_names, &pairs)
}

/// Loads a checkpoint and scores it on every graph of a manifest.
pub fn evaluate(checkpoint: &Path, manifest: &Path) -> Result<Metrics> {
    let model = load_checkpoint(checkpoint)?;
    let manifest = DatasetManifest::read(manifest)?;
    check_classes(&model, &manifest.class_names)?;
    let corpus = Corpus::from_manifest(&manifest)?;
    evaluate_graphs(&model, &corpus.graphs, &corpus.labels, false)
}

/// How variants of a source graph are produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// Uniform random node sample keeping this fraction of the nodes.
    Urns { fraction: f64 },
    /// Random relabelling of the nodes.
    Relabel,
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::Urns { fraction } if !(fraction > 0.0 && fraction <= 1.0) => Err(
                Error::invalid(format!("sampling fraction {fraction} outside (0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    pub fn apply(&self, g: &Graph, rng: &mut rng::StreamRng) -> Result<Graph> {
        match *self {
            Perturbation::Urns { fraction } => urns_sample(g, fraction, rng),
            Perturbation::Relabel => relabel(g, &Permutation::random(g.num_nodes(), rng)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedReport {
    pub metrics: Metrics,
    /// `predictions[s][v]`: class predicted for variant `v` of source `s`.
    pub predictions: Vec<Vec<usize>>,
}

/// Classifies `variants_per_graph` perturbed copies of every source graph.
/// Variant `v` of source `s` is drawn from stream `s * variants + v` of `seed`.
pub fn evaluate_perturbed_graphs(
    model: &Model,
    sources: &[Graph],
    labels: &[usize],
    mode: Perturbation,
    variants_per_graph: usize,
    seed: u64,
    clamp: bool,
) -> Result<PerturbedReport> {
    mode.validate()?;
    if variants_per_graph == 0 || sources.is_empty() {
        return Err(Error::InvalidInput("no perturbed variants to evaluate".into()));
    }
    if sources.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} source graphs with {} labels",
            sources.len(),
            labels.len()
        )));
    }
    let mut predictions = Vec::with_capacity(sources.len());
    let mut pairs = Vec::with_capacity(sources.len() * variants_per_graph);
    for (s, (g, &label)) in sources.iter().zip(labels).enumerate() {
        let variants = (0..variants_per_graph)
            .map(|v| {
                let mut r = rng::stream(seed, (s * variants_per_graph + v) as u64);
                mode.apply(g, &mut r)
            })
            .collect::<Result<Vec<Graph>>>()?;
        let refs: Vec<&Graph> = variants.iter().collect();
        let preds = predict(model, &refs, clamp)?;
        pairs.extend(preds.iter().map(|&p| (label, p)));
        predictions.push(preds);
    }
    Ok(PerturbedReport {
        metrics: Metrics::from_pairs(&model.class_names, &pairs)?,
        predictions,
    })
}

/// File-based form of [`evaluate_perturbed_graphs`].
pub fn evaluate_perturbed(
    checkpoint: &Path,
    manifest: &Path,
    mode: Perturbation,
    variants_per_graph: usize,
    seed: u64,
) -> Result<PerturbedReport> {
    let model = load_checkpoint(checkpoint)?;
    let manifest = DatasetManifest::read(manifest)?;
    check_classes(&model, &manifest.class_names)?;
    let corpus = Corpus::from_manifest(&manifest)?;
    evaluate_perturbed_graphs(&model, &corpus.graphs, &corpus.labels, mode, variants_per_graph, seed, false)
}

/// Accuracy on node samples, relabelled variants and the original graphs.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessTable {
    pub node_sampling: Metrics,
    pub relabelling: Metrics,
    pub original: Metrics,
}

impl RobustnessTable {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\tnode_sampling\tnode_relabelling\toriginal\n");
        for (k, name) in self.original.class_names.iter().enumerate() {
            let _ = writeln!(
                out,
                "{name}\t{:.4}\t{:.4}\t{:.4}",
                self.node_sampling.per_class[k].accuracy,
                self.relabelling.per_class[k].accuracy,
                self.original.per_class[k].accuracy
            );
        }
        let _ = writeln!(
            out,
            "overall\t{:.4}\t{:.4}\t{:.4}",
            self.node_sampling.accuracy, self.relabelling.accuracy, self.original.accuracy
        );
        out
    }
}

pub fn robustness_table(
    model: &Model,
    sources: &[Graph],
    labels: &[usize],
    fraction: f64,
    variants_per_graph: usize,
    seed: u64,
) -> Result<RobustnessTable> {
    let node_sampling = evaluate_perturbed_graphs(
        model,
        sources,
        labels,
        Perturbation::Urns { fraction },
        variants_per_graph,
        rng::derive_seed(seed, 1),
        false,
    )?
    .metrics;
    let relabelling = evaluate_perturbed_graphs(
        model,
        sources,
        labels,
        Perturbation::Relabel,
        variants_per_graph,
        rng::derive_seed(seed, 2),
        false,
    )?
    .metrics;
    let original = evaluate_graphs(model, sources, labels, false)?;
    Ok(RobustnessTable {
        node_sampling,
        relabelling,
        original,
    })
}
