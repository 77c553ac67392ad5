//! Degree-based node features.
//!
//! Four encoders are available:
//!
//! * **One-hot**: column `d` set for a node of degree `d`; width `max_degree + 1`.
//! * **Local degree profile**: `[deg, min, max, mean, std]` of the node's
//!   degree and its neighbours' degrees. Isolated nodes get zeros for the
//!   neighbour statistics and the deviation is the population one.
//! * **Linear binned one-hot (LBOH)**: unit buckets for `0..alpha`, then `k`
//!   buckets of width `beta` starting at `alpha`, then one overflow bucket for
//!   `d >= alpha + k * beta`. Width `alpha + k + 1`.
//! * **Exponential binned one-hot (EBOH)**: unit buckets for `0..=2^alpha`,
//!   then buckets `(2^(alpha+i-1), 2^(alpha+i)]` for `i` in `1..=k`, then one
//!   overflow bucket for `d > 2^(alpha+k)`. Width `2^alpha + k + 2`.
//!
//! The binned encoders have a fixed width independent of the degrees seen in
//! training, so a model can classify graphs of any size.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphrep::Graph;

/// Encoder identity and parameters. Stored in checkpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncoderConfig {
    OneHot { max_degree: usize },
    Ldp,
    Lboh { alpha: usize, beta: usize, k: usize },
    Eboh { alpha: u32, k: u32 },
}

impl EncoderConfig {
    pub const DEFAULT_LBOH: EncoderConfig = EncoderConfig::Lboh {
        alpha: 5,
        beta: 3,
        k: 2,
    };
    pub const DEFAULT_EBOH: EncoderConfig = EncoderConfig::Eboh { alpha: 2, k: 3 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            EncoderConfig::OneHot { .. } | EncoderConfig::Ldp => Ok(()),
            EncoderConfig::Lboh { alpha, beta, k } => {
                if !(1..10).contains(&alpha) || beta < 1 || k < 1 {
                    return Err(Error::invalid(format!(
                        "LBOH needs 1 <= alpha < 10, beta >= 1, k >= 1 (got alpha={alpha}, beta={beta}, k={k})"
                    )));
                }
                Ok(())
            }
            EncoderConfig::Eboh { alpha, k } => {
                // k is capped so 2^(alpha+k) stays well inside usize
                if !(1..=3).contains(&alpha) || !(1..=48).contains(&k) {
                    return Err(Error::invalid(format!(
                        "EBOH needs 1 <= alpha <= 3 and 1 <= k <= 48 (got alpha={alpha}, k={k})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Feature width produced by this encoder.
    pub fn width(&self) -> usize {
        match *self {
            EncoderConfig::OneHot { max_degree } => onehot_width(max_degree),
            EncoderConfig::Ldp => 5,
            EncoderConfig::Lboh { alpha, k, .. } => alpha + k + 1,
            EncoderConfig::Eboh { alpha, k } => (1usize << alpha) + k as usize + 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EncoderConfig::OneHot { .. } => "onehot",
            EncoderConfig::Ldp => "ldp",
            EncoderConfig::Lboh { .. } => "lboh",
            EncoderConfig::Eboh { .. } => "eboh",
        }
    }

    pub fn is_onehot(&self) -> bool {
        matches!(self, EncoderConfig::OneHot { .. })
    }

    /// Encodes `g`. Degrees beyond a one-hot vocabulary are an error.
    pub fn encode(&self, g: &Graph) -> Result<FeatureMatrix> {
        self.encode_with(g, false)
    }

    /// Encodes `g`; with `clamp`, one-hot degrees beyond the vocabulary map to
    /// the last column instead of failing.
    pub fn encode_with(&self, g: &Graph, clamp: bool) -> Result<FeatureMatrix> {
        self.validate()?;
        match *self {
            EncoderConfig::OneHot { max_degree } => encode_onehot(g, max_degree, clamp),
            EncoderConfig::Ldp => Ok(encode_ldp(g)),
            EncoderConfig::Lboh { alpha, beta, k } => Ok(encode_lboh(g, alpha, beta, k)),
            EncoderConfig::Eboh { alpha, k } => Ok(encode_eboh(g, alpha, k)),
        }
    }
}

/// Dense `num_nodes x dim` node feature table.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn num_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Index of the hot column of each row, for one-hot family matrices.
    pub fn hot_columns(&self) -> Vec<Option<usize>> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().position(|&v| v == 1.0))
            .collect()
    }
}

fn one_hot_rows(indices: impl ExactSizeIterator<Item = usize>, width: usize) -> FeatureMatrix {
    let mut values = Array2::zeros((indices.len(), width));
    for (row, col) in indices.enumerate() {
        values[[row, col]] = 1.0;
    }
    FeatureMatrix { values }
}

pub fn onehot_width(max_degree: usize) -> usize {
    max_degree + 1
}

pub fn encode_onehot(g: &Graph, max_degree: usize, clamp: bool) -> Result<FeatureMatrix> {
    if !clamp {
        if let Some(&d) = g.degrees().iter().find(|&&d| d > max_degree) {
            return Err(Error::OutOfVocabulary {
                degree: d,
                max_degree,
            });
        }
    }
    Ok(one_hot_rows(
        g.degrees().iter().map(|&d| d.min(max_degree)),
        onehot_width(max_degree),
    ))
}

pub fn encode_ldp(g: &Graph) -> FeatureMatrix {
    let deg = g.degrees();
    let mut values = Array2::zeros((g.num_nodes(), 5));
    for i in 0..g.num_nodes() {
        values[[i, 0]] = deg[i] as f64;
        let ns = g.neighbors(i);
        if ns.is_empty() {
            continue;
        }
        // sorted so the sums, and hence the features, ignore node order exactly
        let mut sorted: Vec<usize> = ns.iter().map(|&j| deg[j]).collect();
        sorted.sort_unstable();
        let nd = sorted.iter().map(|&d| d as f64);
        let count = ns.len() as f64;
        let min = nd.clone().fold(f64::INFINITY, f64::min);
        let max = nd.clone().fold(f64::NEG_INFINITY, f64::max);
        let mean = nd.clone().sum::<f64>() / count;
        let var = nd.map(|d| (d - mean) * (d - mean)).sum::<f64>() / count;
        values[[i, 1]] = min;
        values[[i, 2]] = max;
        values[[i, 3]] = mean;
        values[[i, 4]] = var.sqrt();
    }
    FeatureMatrix { values }
}

/// LBOH bucket index of degree `d`.
pub fn lboh_bucket(d: usize, alpha: usize, beta: usize, k: usize) -> usize {
    if d < alpha {
        d
    } else if d >= alpha + k * beta {
        alpha + k
    } else {
        alpha + (d - alpha) / beta
    }
}

/// EBOH bucket index of degree `d`.
pub fn eboh_bucket(d: usize, alpha: u32, k: u32) -> usize {
    let unit = 1usize << alpha;
    if d <= unit {
        return d;
    }
    if d > 1usize << (alpha + k) {
        return unit + k as usize + 1;
    }
    // smallest e with d <= 2^e; d > 2^alpha >= 2 here
    let e = usize::BITS - (d - 1).leading_zeros();
    unit + (e - alpha) as usize
}

pub fn encode_lboh(g: &Graph, alpha: usize, beta: usize, k: usize) -> FeatureMatrix {
    one_hot_rows(
        g.degrees().iter().map(|&d| lboh_bucket(d, alpha, beta, k)),
        alpha + k + 1,
    )
}

pub fn encode_eboh(g: &Graph, alpha: u32, k: u32) -> FeatureMatrix {
    one_hot_rows(
        g.degrees().iter().map(|&d| eboh_bucket(d, alpha, k)),
        (1usize << alpha) + k as usize + 2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphrep::coo_to_graph;
    use crate::pattern::CooPattern;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn onehot_examples() {
        assert_eq!(onehot_width(7710), 7711);
        let iso = Graph::from_edges(2, []).unwrap();
        let f = encode_onehot(&iso, 3, false).unwrap();
        assert_eq!(f.hot_columns(), vec![Some(0), Some(0)]);
        let f = encode_onehot(&triangle(), 5, false).unwrap();
        assert_eq!(f.dim(), 6);
        assert_eq!(f.hot_columns(), vec![Some(2); 3]);
    }

    #[test]
    fn onehot_out_of_vocabulary() {
        let err = encode_onehot(&triangle(), 1, false).unwrap_err();
        assert!(matches!(err, Error::OutOfVocabulary { degree: 2, max_degree: 1 }));
        let f = encode_onehot(&triangle(), 1, true).unwrap();
        assert_eq!(f.hot_columns(), vec![Some(1); 3]);
    }

    #[test]
    fn ldp_examples() {
        let iso = Graph::from_edges(1, []).unwrap();
        assert_eq!(encode_ldp(&iso).values().row(0).to_vec(), vec![0.0; 5]);
        let t = encode_ldp(&triangle());
        for r in t.values().rows() {
            assert_eq!(r.to_vec(), vec![2.0, 2.0, 2.0, 2.0, 0.0]);
        }
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = encode_ldp(&star);
        assert_eq!(s.values().row(0).to_vec(), vec![3.0, 1.0, 1.0, 1.0, 0.0]);
        for i in 1..4 {
            assert_eq!(s.values().row(i).to_vec(), vec![1.0, 3.0, 3.0, 3.0, 0.0]);
        }
    }

    #[test]
    fn ldp_population_std() {
        // path 0-1-2-3: node 1 has neighbours of degree 1 and 2
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let f = encode_ldp(&g);
        assert_eq!(f.values().row(1).to_vec(), vec![2.0, 1.0, 2.0, 1.5, 0.5]);
    }

    #[test]
    fn bucket_examples() {
        assert_eq!(lboh_bucket(5, 5, 3, 2), 5);
        assert_eq!(lboh_bucket(0, 5, 3, 2), 0);
        assert_eq!(lboh_bucket(100, 5, 3, 2), 7);
        assert_eq!(EncoderConfig::DEFAULT_LBOH.width(), 8);
        assert_eq!(eboh_bucket(7880, 2, 3), 8);
        assert_eq!(eboh_bucket(0, 2, 3), 0);
        assert_eq!(eboh_bucket(8, 2, 3), 5);
        assert_eq!(eboh_bucket(9, 2, 3), 6);
        assert_eq!(EncoderConfig::DEFAULT_EBOH.width(), 9);
    }

    #[test]
    fn binned_encoders_on_small_graphs() {
        let f = encode_lboh(&triangle(), 5, 3, 2);
        assert_eq!(f.hot_columns(), vec![Some(2); 3]);
        let eye = coo_to_graph(&CooPattern::identity(5)).unwrap();
        assert_eq!(encode_lboh(&eye, 5, 3, 2).hot_columns(), vec![Some(1); 5]);
        let e = encode_eboh(&eye, 2, 3);
        assert_eq!(e.dim(), 9);
        assert_eq!(e.hot_columns(), vec![Some(1); 5]);
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::Lboh { alpha: 10, beta: 3, k: 2 }.validate().is_err());
        assert!(EncoderConfig::Lboh { alpha: 0, beta: 3, k: 2 }.validate().is_err());
        assert!(EncoderConfig::Lboh { alpha: 5, beta: 0, k: 2 }.validate().is_err());
        assert!(EncoderConfig::Eboh { alpha: 4, k: 2 }.validate().is_err());
        assert!(EncoderConfig::Eboh { alpha: 2, k: 0 }.validate().is_err());
        assert!(EncoderConfig::DEFAULT_EBOH.validate().is_ok());
    }

    #[test]
    fn config_serde_round_trip() {
        for cfg in [
            EncoderConfig::OneHot { max_degree: 12 },
            EncoderConfig::Ldp,
            EncoderConfig::DEFAULT_LBOH,
            EncoderConfig::DEFAULT_EBOH,
        ] {
            let s = serde_json::to_string(&cfg).unwrap();
            assert_eq!(serde_json::from_str::<EncoderConfig>(&s).unwrap(), cfg);
        }
    }
}
