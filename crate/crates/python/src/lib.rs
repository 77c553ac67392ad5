//! Python module `sparsegnn_py`: pattern generation, graph conversion,
//! degree encoders, training and inference.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sparsegnn::featenc::{eboh_bucket, lboh_bucket, EncoderConfig};
use sparsegnn::graphrep::{self, coo_to_graph};
use sparsegnn::matgen::{build_dataset, generate_instance, DimsRange, Registry};
use sparsegnn::nn::gradcheck::{grad_check, random_problem};
use sparsegnn::trainer::{self, mean_accuracy, predict_proba, TrainConfig};
use sparsegnn::{rng, CooPattern, Error};

fn to_py(e: Error) -> PyErr {
    match &e {
        Error::NotFound { .. } => PyFileNotFoundError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Shape(_) | Error::Usage(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn encoder_config(
    kind: &str,
    alpha: Option<usize>,
    beta: Option<usize>,
    k: Option<usize>,
    max_degree: Option<usize>,
) -> PyResult<EncoderConfig> {
    let config = match kind {
        "onehot" => EncoderConfig::OneHot {
            max_degree: max_degree
                .ok_or_else(|| PyValueError::new_err("onehot encoder needs max_degree"))?,
        },
        "ldp" => EncoderConfig::Ldp,
        "lboh" => EncoderConfig::Lboh {
            alpha: alpha.unwrap_or(5),
            beta: beta.unwrap_or(3),
            k: k.unwrap_or(2),
        },
        "eboh" => EncoderConfig::Eboh {
            alpha: alpha.unwrap_or(2) as u32,
            k: k.unwrap_or(3) as u32,
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown encoder {other:?}; expected onehot, ldp, lboh or eboh"
            )))
        }
    };
    config.validate().map_err(to_py)?;
    Ok(config)
}

/// Binary sparsity pattern in coordinate form.
#[pyclass(name = "Pattern", module = "sparsegnn_py")]
struct PyPattern {
    inner: CooPattern,
}

#[pymethods]
impl PyPattern {
    #[new]
    fn new(rows: Vec<usize>, cols: Vec<usize>, shape: (usize, usize)) -> PyResult<Self> {
        CooPattern::new(rows, cols, shape)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        CooPattern::read_file(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_file(path).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    fn positions(&self) -> Vec<(usize, usize)> {
        self.inner.positions().collect()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn to_graph(&self) -> PyResult<PyGraph> {
        coo_to_graph(&self.inner)
            .map(|inner| PyGraph { inner })
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.inner.shape();
        format!("Pattern(shape=({r}, {c}), nnz={})", self.inner.nnz())
    }
}

/// Undirected graph of a square pattern; self-loops count once toward degree.
#[pyclass(name = "Graph", module = "sparsegnn_py")]
struct PyGraph {
    inner: graphrep::Graph,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn from_edges(num_nodes: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        graphrep::Graph::from_edges(num_nodes, edges)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees().to_vec()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn degree_histogram(&self) -> Vec<(usize, usize)> {
        graphrep::degree_histogram(&self.inner)
    }

    /// Induced subgraph on a uniform sample of `ceil(fraction * n)` nodes.
    fn urns_sample(&self, fraction: f64, seed: u64) -> PyResult<Self> {
        graphrep::urns_sample(&self.inner, fraction, &mut rng::stream(seed, 0))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Relabels with a given permutation, or a random one drawn from `seed`.
    #[pyo3(signature = (permutation=None, seed=0))]
    fn relabel(&self, permutation: Option<Vec<usize>>, seed: u64) -> PyResult<Self> {
        let perm = match permutation {
            Some(p) => graphrep::Permutation::new(p).map_err(to_py)?,
            None => graphrep::Permutation::random(self.inner.num_nodes(), &mut rng::stream(seed, 0)),
        };
        graphrep::relabel(&self.inner, &perm)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Node feature rows for the named encoder.
    #[pyo3(signature = (encoder="eboh", alpha=None, beta=None, k=None, max_degree=None, clamp=false))]
    fn encode(
        &self,
        encoder: &str,
        alpha: Option<usize>,
        beta: Option<usize>,
        k: Option<usize>,
        max_degree: Option<usize>,
        clamp: bool,
    ) -> PyResult<Vec<Vec<f64>>> {
        let config = encoder_config(encoder, alpha, beta, k, max_degree)?;
        let features = config.encode_with(&self.inner, clamp).map_err(to_py)?;
        Ok(features.values().rows().into_iter().map(|r| r.to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(num_nodes={}, num_edges={})",
            self.inner.num_nodes(),
            self.inner.num_edges()
        )
    }
}

/// Trained classifier loaded from a checkpoint.
#[pyclass(name = "Model", module = "sparsegnn_py")]
struct PyModel {
    inner: sparsegnn::Model,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        trainer::load_checkpoint(path)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        trainer::save_checkpoint(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }

    #[getter]
    fn encoder(&self) -> &'static str {
        self.inner.encoder.name()
    }

    /// Classes ranked by softmax probability, highest first.
    #[pyo3(signature = (graph, clamp=false))]
    fn classify(&self, graph: &PyGraph, clamp: bool) -> PyResult<Vec<(String, f64)>> {
        let probs = predict_proba(&self.inner, &[&graph.inner], clamp).map_err(to_py)?;
        let mut ranked: Vec<(String, f64)> = self
            .inner
            .class_names
            .iter()
            .cloned()
            .zip(probs.row(0).iter().copied())
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(ranked)
    }

    /// Accuracy, macro F1, per-class accuracy and confusion over a manifest.
    fn evaluate<'py>(&self, py: Python<'py>, manifest: PathBuf) -> PyResult<Bound<'py, PyDict>> {
        let corpus = trainer::Corpus::read(manifest).map_err(to_py)?;
        if corpus.class_names.len() != self.inner.num_classes() {
            return Err(PyValueError::new_err(format!(
                "checkpoint has {} classes, manifest has {}",
                self.inner.num_classes(),
                corpus.class_names.len()
            )));
        }
        let m = trainer::evaluate_graphs(&self.inner, &corpus.graphs, &corpus.labels, false)
            .map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("accuracy", m.accuracy)?;
        out.set_item("f1", m.f1)?;
        let per_class = PyDict::new(py);
        for (name, c) in m.class_names.iter().zip(&m.per_class) {
            per_class.set_item(name, c.accuracy)?;
        }
        out.set_item("class_accuracy", per_class)?;
        out.set_item("confusion", m.confusion.clone())?;
        Ok(out)
    }
}

/// Instance `index` of a built-in class, drawn exactly as in a generated corpus.
#[pyfunction]
#[pyo3(signature = (class_name, index=0, seed=0, min_dim=64, max_dim=256))]
fn generate(class_name: &str, index: usize, seed: u64, min_dim: usize, max_dim: usize) -> PyResult<PyPattern> {
    let registry = Registry::from_names(&[class_name], 1).map_err(to_py)?;
    let dims = DimsRange::new(min_dim, max_dim).map_err(to_py)?;
    generate_instance(&registry, 0, index, dims, seed)
        .map(|inner| PyPattern { inner })
        .map_err(to_py)
}

/// Writes a balanced corpus and returns the number of patterns written.
#[pyfunction]
#[pyo3(signature = (out, per_class, classes=None, seed=0, min_dim=64, max_dim=256))]
fn build_corpus(
    out: PathBuf,
    per_class: usize,
    classes: Option<Vec<String>>,
    seed: u64,
    min_dim: usize,
    max_dim: usize,
) -> PyResult<usize> {
    let registry = match classes {
        Some(names) => Registry::from_names(&names, per_class),
        None => Registry::builtin(per_class),
    }
    .map_err(to_py)?;
    let dims = DimsRange::new(min_dim, max_dim).map_err(to_py)?;
    build_dataset(&registry, dims, seed, &out)
        .map(|m| m.len())
        .map_err(to_py)
}

/// k-fold training; returns one dict per fold plus writes checkpoints under `out`.
#[pyfunction]
#[pyo3(signature = (
    manifest, out, encoder="eboh", alpha=None, beta=None, k=None, max_degree=None,
    epochs=50, folds=5, batch_size=256, lr=0.01, seed=0
))]
#[allow(clippy::too_many_arguments)]
fn train<'py>(
    py: Python<'py>,
    manifest: PathBuf,
    out: PathBuf,
    encoder: &str,
    alpha: Option<usize>,
    beta: Option<usize>,
    k: Option<usize>,
    max_degree: Option<usize>,
    epochs: usize,
    folds: usize,
    batch_size: usize,
    lr: f64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = TrainConfig::new(manifest, encoder_config(encoder, alpha, beta, k, max_degree)?);
    config.epochs = epochs;
    config.folds = folds;
    config.batch_size = batch_size;
    config.lr = lr;
    config.seed = seed;
    config.output_dir = Some(out);
    let results = py.detach(|| trainer::train(&config)).map_err(to_py)?;
    let mean = mean_accuracy(&results);
    results
        .iter()
        .map(|f| {
            let d = PyDict::new(py);
            d.set_item("fold", f.fold)?;
            d.set_item("accuracy", f.metrics.accuracy)?;
            d.set_item("f1", f.metrics.f1)?;
            d.set_item("train_loss", f.train_loss.clone())?;
            d.set_item("val_loss", f.val_loss.clone())?;
            d.set_item("selected_epoch", f.selected_epoch)?;
            d.set_item("checkpoint", f.checkpoint.clone())?;
            d.set_item("mean_accuracy", mean)?;
            Ok(d)
        })
        .collect()
}

/// Finite-difference check on a small generated problem: `(passed, max_rel_error)`.
#[pyfunction]
#[pyo3(signature = (seed=0, tolerance=1e-4, step=1e-5))]
fn gradcheck(seed: u64, tolerance: f64, step: f64) -> PyResult<(bool, f64)> {
    let (model, batch) = random_problem(seed, EncoderConfig::DEFAULT_EBOH).map_err(to_py)?;
    let report = grad_check(&model, &batch, step, tolerance).map_err(to_py)?;
    Ok((report.passed(), report.max_rel_error()))
}

#[pyfunction(name = "lboh_bucket")]
fn py_lboh_bucket(degree: usize, alpha: usize, beta: usize, k: usize) -> usize {
    lboh_bucket(degree, alpha, beta, k)
}

#[pyfunction(name = "eboh_bucket")]
fn py_eboh_bucket(degree: usize, alpha: u32, k: u32) -> usize {
    eboh_bucket(degree, alpha, k)
}

#[pymodule]
fn sparsegnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPattern>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(build_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(gradcheck, m)?)?;
    m.add_function(wrap_pyfunction!(py_lboh_bucket, m)?)?;
    m.add_function(wrap_pyfunction!(py_eboh_bucket, m)?)?;
    m.add("CLASSES", sparsegnn::matgen::BUILTIN_CLASSES.to_vec())?;
    Ok(())
}
