use std::path::Path;

use crate::error::{Error, Result};
use crate::featenc::EncoderConfig;
use crate::graphrep::{coo_to_graph, Graph};
use crate::matgen::DatasetManifest;
use crate::nn::PreparedGraph;

/// Graphs of a manifest with their labels.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Corpus {
    pub fn from_manifest(manifest: &DatasetManifest) -> Result<Self> {
        let mut graphs = Vec::with_capacity(manifest.len());
        let mut labels = Vec::with_capacity(manifest.len());
        for (path, label) in &manifest.entries {
            let pattern = crate::pattern::CooPattern::read_file(manifest.resolve(path))?;
            graphs.push(coo_to_graph(&pattern)?);
            labels.push(*label);
        }
        Ok(Self {
            graphs,
            labels,
            class_names: manifest.class_names.clone(),
        })
    }

    pub fn read(manifest_path: impl AsRef<Path>) -> Result<Self> {
        Self::from_manifest(&DatasetManifest::read(manifest_path)?)
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.graphs.iter().map(Graph::max_degree).max().unwrap_or(0)
    }

    /// Encodes every graph for the network.
    pub fn prepare(&self, encoder: &EncoderConfig, clamp: bool) -> Result<Vec<PreparedGraph>> {
        self.graphs
            .iter()
            .zip(&self.labels)
            .map(|(g, &l)| prepare_graph(g, encoder, clamp, l))
            .collect()
    }
}

pub fn prepare_graph(g: &Graph, encoder: &EncoderConfig, clamp: bool, label: usize) -> Result<PreparedGraph> {
    if g.num_nodes() == 0 {
        return Err(Error::InvalidInput("graph has no nodes".into()));
    }
    PreparedGraph::new(g, encoder.encode_with(g, clamp)?, label)
}

/// Streams a manifest straight into prepared graphs without keeping the
/// adjacency lists around.
pub fn load_prepared(
    manifest: &DatasetManifest,
    encoder: &EncoderConfig,
    clamp: bool,
) -> Result<Vec<PreparedGraph>> {
    manifest
        .entries
        .iter()
        .map(|(path, label)| {
            let pattern = crate::pattern::CooPattern::read_file(manifest.resolve(path))?;
            prepare_graph(&coo_to_graph(&pattern)?, encoder, clamp, *label)
        })
        .collect()
}
