use ndarray::{concatenate, Array2, Axis};

use super::adjacency::NormAdj;
use crate::error::{Error, Result};
use crate::featenc::FeatureMatrix;
use crate::graphrep::Graph;

/// A graph ready for the network: normalized adjacency, node features and label.
#[derive(Clone, Debug)]
pub struct PreparedGraph {
    pub adjacency: NormAdj,
    pub features: Array2<f64>,
    pub label: usize,
}

impl PreparedGraph {
    pub fn new(g: &Graph, features: FeatureMatrix, label: usize) -> Result<Self> {
        if features.num_nodes() != g.num_nodes() {
            return Err(Error::Shape(format!(
                "{} feature rows for a {}-node graph",
                features.num_nodes(),
                g.num_nodes()
            )));
        }
        if g.num_nodes() == 0 {
            return Err(Error::InvalidInput("graph has no nodes".into()));
        }
        Ok(Self {
            adjacency: NormAdj::from_graph(g),
            features: features.into_values(),
            label,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.num_nodes()
    }
}

/// Disjoint union of several graphs: block-diagonal adjacency, stacked
/// features and a per-node graph index.
#[derive(Clone, Debug)]
pub struct BatchedGraphs {
    adjacency: NormAdj,
    features: Array2<f64>,
    membership: Vec<usize>,
    labels: Vec<usize>,
}

impl BatchedGraphs {
    pub fn new(graphs: &[&PreparedGraph]) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        let width = graphs[0].features.ncols();
        for g in graphs {
            if g.num_nodes() == 0 {
                return Err(Error::InvalidInput("graph in batch has no nodes".into()));
            }
            if g.features.ncols() != width {
                return Err(Error::Shape(format!(
                    "feature widths differ within batch ({} vs {width})",
                    g.features.ncols()
                )));
            }
        }
        let adjacency = NormAdj::block_diag(graphs.iter().map(|g| &g.adjacency));
        let views: Vec<_> = graphs.iter().map(|g| g.features.view()).collect();
        let features = concatenate(Axis(0), &views).map_err(|e| Error::Shape(e.to_string()))?;
        let membership = graphs
            .iter()
            .enumerate()
            .flat_map(|(b, g)| std::iter::repeat_n(b, g.num_nodes()))
            .collect();
        Ok(Self {
            adjacency,
            features,
            membership,
            labels: graphs.iter().map(|g| g.label).collect(),
        })
    }

    pub fn from_owned(graphs: &[PreparedGraph]) -> Result<Self> {
        Self::new(&graphs.iter().collect::<Vec<_>>())
    }

    pub fn single(g: &PreparedGraph) -> Result<Self> {
        Self::new(&[g])
    }

    pub fn adjacency(&self) -> &NormAdj {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_graphs(&self) -> usize {
        self.labels.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.membership.len()
    }

    pub fn feature_width(&self) -> usize {
        self.features.ncols()
    }
}
