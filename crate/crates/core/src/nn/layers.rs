use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, RngCore};

use super::adjacency::NormAdj;
use crate::error::{Error, Result};

/// Dense 2-D table of doubles, row-major.
pub type Tensor2D = Array2<f64>;

fn glorot(fan_in: usize, fan_out: usize, rng: &mut dyn RngCore) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((fan_in, fan_out), || rng.gen_range(-limit..limit))
}

/// Graph convolution `H = Â_norm · X · W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl GcnLayer {
    /// Glorot-uniform weights, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            weight: glorot(in_dim, out_dim, rng),
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// Fully connected layer `Y = X · W + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    pub fn init(in_dim: usize, out_dim: usize, rng: &mut dyn RngCore) -> Self {
        Self {
            weight: glorot(in_dim, out_dim, rng),
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.in_dim() {
            return Err(Error::Shape(format!(
                "linear layer expects {} input columns, got {}",
                self.in_dim(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.weight) + &self.bias)
    }
}

/// Aggregated input `Â_norm · X` and the layer output.
pub(crate) fn gcn_forward_parts(
    layer: &GcnLayer,
    adj: &NormAdj,
    x: ArrayView2<'_, f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if x.nrows() != adj.num_nodes() {
        return Err(Error::Shape(format!(
            "{} feature rows for {} nodes",
            x.nrows(),
            adj.num_nodes()
        )));
    }
    if x.ncols() != layer.in_dim() {
        return Err(Error::Shape(format!(
            "graph convolution expects {} input columns, got {}",
            layer.in_dim(),
            x.ncols()
        )));
    }
    let z = adj.aggregate(x);
    let h = z.dot(&layer.weight) + &layer.bias;
    Ok((z, h))
}

pub fn gcn_forward(layer: &GcnLayer, adj: &NormAdj, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    gcn_forward_parts(layer, adj, x).map(|(_, h)| h)
}

pub fn relu(t: &Array2<f64>) -> Array2<f64> {
    t.mapv(|v| v.max(0.0))
}

/// Mean of the rows of `h` belonging to each graph; row `b` of the result
/// pools the rows with `membership == b`.
pub fn global_mean_pool(
    h: ArrayView2<'_, f64>,
    membership: &[usize],
    num_graphs: usize,
) -> Result<Array2<f64>> {
    if membership.len() != h.nrows() {
        return Err(Error::Shape(format!(
            "membership covers {} rows, tensor has {}",
            membership.len(),
            h.nrows()
        )));
    }
    let mut sums = Array2::zeros((num_graphs, h.ncols()));
    let mut counts = vec![0usize; num_graphs];
    for (row, &b) in h.axis_iter(Axis(0)).zip(membership) {
        if b >= num_graphs {
            return Err(Error::InvalidInput(format!(
                "membership index {b} out of range for {num_graphs} graphs"
            )));
        }
        let mut s = sums.row_mut(b);
        s += &row;
        counts[b] += 1;
    }
    if let Some(b) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("graph {b} in batch has no nodes")));
    }
    for (mut row, &c) in sums.axis_iter_mut(Axis(0)).zip(&counts) {
        row /= c as f64;
    }
    Ok(sums)
}

/// Inverted-dropout scale mask: each entry is 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask(
    shape: (usize, usize),
    rate: f64,
    rng: &mut dyn RngCore,
) -> Result<Array2<f64>> {
    check_rate(rate)?;
    let keep = 1.0 / (1.0 - rate);
    Ok(Array2::from_shape_simple_fn(shape, || {
        if rng.gen::<f64>() < rate {
            0.0
        } else {
            keep
        }
    }))
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Dropout; the identity when `training` is false or `rate` is 0.
pub fn dropout(
    t: &Array2<f64>,
    rate: f64,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Array2<f64>> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(t.clone());
    }
    Ok(t * &dropout_mask(t.dim(), rate, rng)?)
}
