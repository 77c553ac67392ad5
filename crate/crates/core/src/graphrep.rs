//! Undirected graphs built from nonzero patterns, plus the perturbations used
//! in robustness studies: uniform random node sampling and relabelling.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pattern::CooPattern;

/// Undirected graph with sorted, deduplicated adjacency lists.
///
/// A self-loop appears once in its node's list and adds one to its degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    degrees: Vec<usize>,
}

impl Graph {
    /// Graph on `num_nodes` nodes from an undirected edge list. Edges may repeat
    /// in either orientation.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut neighbors = vec![Vec::new(); num_nodes];
        for (i, j) in edges {
            if i >= num_nodes || j >= num_nodes {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) references a node outside 0..{num_nodes}"
                )));
            }
            neighbors[i].push(j);
            if i != j {
                neighbors[j].push(i);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let degrees = neighbors.iter().map(Vec::len).collect();
        Ok(Self { neighbors, degrees })
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn has_self_loop(&self, node: usize) -> bool {
        self.neighbors[node].binary_search(&node).is_ok()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Undirected edges `(i, j)` with `i <= j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j >= i).map(move |&j| (i, j)))
    }

    pub fn num_edges(&self) -> usize {
        self.edges().count()
    }

    pub fn sorted_degrees(&self) -> Vec<usize> {
        let mut d = self.degrees.clone();
        d.sort_unstable();
        d
    }

    /// Symmetric pattern of this graph: both orientations of every edge plus
    /// self-loops on the diagonal.
    pub fn to_pattern(&self) -> CooPattern {
        let n = self.num_nodes();
        let positions = self
            .neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().map(move |&j| (i, j)));
        CooPattern::from_positions((n, n), positions).expect("graph edges are in range")
    }

    /// Subgraph induced by `nodes`, re-indexed to `0..nodes.len()` in ascending
    /// order of the original ids.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut selected: Vec<usize> = nodes.to_vec();
        selected.sort_unstable();
        selected.dedup();
        if selected.len() != nodes.len() {
            return Err(Error::invalid("induced subgraph node list has duplicates"));
        }
        if let Some(&bad) = selected.iter().find(|&&v| v >= self.num_nodes()) {
            return Err(Error::invalid(format!("node {bad} out of range")));
        }
        let mut new_id = vec![usize::MAX; self.num_nodes()];
        for (k, &v) in selected.iter().enumerate() {
            new_id[v] = k;
        }
        let neighbors: Vec<Vec<usize>> = selected
            .iter()
            .map(|&v| {
                // ascending old ids map to ascending new ids, so lists stay sorted
                self.neighbors[v]
                    .iter()
                    .filter_map(|&u| (new_id[u] != usize::MAX).then_some(new_id[u]))
                    .collect()
            })
            .collect();
        let degrees = neighbors.iter().map(Vec::len).collect();
        Ok(Graph { neighbors, degrees })
    }
}

/// Converts a square pattern into its undirected graph.
pub fn coo_to_graph(p: &CooPattern) -> Result<Graph> {
    let (rows, cols) = p.shape();
    if rows != cols {
        return Err(Error::UnsupportedShape { rows, cols });
    }
    Graph::from_edges(rows, p.positions())
}

/// Induced subgraph on `ceil(fraction * n)` nodes chosen uniformly without
/// replacement. Nodes left isolated by the sample are kept.
pub fn urns_sample<R: Rng + ?Sized>(g: &Graph, fraction: f64, rng: &mut R) -> Result<Graph> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "sampling fraction {fraction} outside (0, 1]"
        )));
    }
    let n = g.num_nodes();
    let m = ((fraction * n as f64).ceil() as usize).min(n);
    let picked = index::sample(rng, n, m).into_vec();
    g.induced_subgraph(&picked)
}

/// Bijection on `0..n`; node `i` is renamed `mapping[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut hit = vec![false; n];
        for &t in &mapping {
            if t >= n || hit[t] {
                return Err(Error::invalid("mapping is not a bijection"));
            }
            hit[t] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.mapping[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.mapping
    }
}

/// Renames every node `i` to `perm(i)`.
pub fn relabel(g: &Graph, perm: &Permutation) -> Result<Graph> {
    if perm.len() != g.num_nodes() {
        return Err(Error::invalid(format!(
            "permutation on {} elements applied to graph with {} nodes",
            perm.len(),
            g.num_nodes()
        )));
    }
    let mut neighbors = vec![Vec::new(); g.num_nodes()];
    for (i, ns) in g.neighbors.iter().enumerate() {
        let mut mapped: Vec<usize> = ns.iter().map(|&j| perm.apply(j)).collect();
        mapped.sort_unstable();
        neighbors[perm.apply(i)] = mapped;
    }
    let degrees = neighbors.iter().map(Vec::len).collect();
    Ok(Graph { neighbors, degrees })
}

/// `(degree, node count)` pairs, ascending by degree.
pub fn degree_histogram(g: &Graph) -> Vec<(usize, usize)> {
    let mut counts = BTreeMap::new();
    for &d in g.degrees() {
        *counts.entry(d).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}
