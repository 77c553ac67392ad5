use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::RngCore;

use super::adam::AdamState;
use super::batch::BatchedGraphs;
use super::layers::{dropout_mask, gcn_forward_parts, global_mean_pool, GcnLayer, Linear};
use crate::error::{Error, Result};
use crate::featenc::EncoderConfig;
use crate::rng;

pub const DEFAULT_HIDDEN_DIM: usize = 64;
pub const DEFAULT_DROPOUT: f64 = 0.5;

/// Names of the parameter tensors, in the order used by [`Model::param_slices`]
/// and [`Gradients::slices`].
pub const PARAM_NAMES: [&str; 8] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "conv3.weight",
    "conv3.bias",
    "head.weight",
    "head.bias",
];

/// Graph-level classifier:
/// conv → ReLU → conv → ReLU → conv → mean pool → dropout → linear.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub convs: [GcnLayer; 3],
    pub head: Linear,
    pub dropout_rate: f64,
    pub encoder: EncoderConfig,
    pub class_names: Vec<String>,
    /// When set, only the head receives gradients.
    pub frozen_backbone: bool,
}

/// How a forward pass treats dropout.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
    /// Training with a caller-supplied scale mask (shape `B x hidden`).
    TrainWithMask(&'a Array2<f64>),
}

/// Intermediate values of the last training forward pass.
#[derive(Clone, Debug)]
pub(crate) struct ForwardCache {
    /// Aggregated layer inputs `Â_norm · X`.
    pub(crate) aggregated: [Array2<f64>; 3],
    /// Layer outputs before activation.
    pub(crate) pre_activation: [Array2<f64>; 3],
    pub(crate) dropped: Array2<f64>,
    pub(crate) mask: Option<Array2<f64>>,
    pub(crate) num_nodes: usize,
}

/// Holds what a forward pass must leave behind for [`Model::backward`].
#[derive(Clone, Debug, Default)]
pub struct Tape {
    pub(crate) cache: Option<ForwardCache>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_none()
    }

    pub fn clear(&mut self) {
        self.cache = None;
    }

    /// ReLU activity pattern of the two activated layers.
    pub(crate) fn activity(&self) -> Option<Vec<bool>> {
        self.cache.as_ref().map(|c| {
            c.pre_activation[..2]
                .iter()
                .flat_map(|h| h.iter().map(|&v| v > 0.0))
                .collect()
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerGrads {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Array2::zeros((in_dim, out_dim)),
            bias: Array1::zeros(out_dim),
        }
    }
}

/// Gradients for every parameter of a [`Model`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub convs: [LayerGrads; 3],
    pub head: LayerGrads,
}

impl Gradients {
    pub fn slices(&self) -> [&[f64]; 8] {
        let s = flat2;
        let b = flat1;
        [
            s(&self.convs[0].weight),
            b(&self.convs[0].bias),
            s(&self.convs[1].weight),
            b(&self.convs[1].bias),
            s(&self.convs[2].weight),
            b(&self.convs[2].bias),
            s(&self.head.weight),
            b(&self.head.bias),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 8] {
        let [c0, c1, c2] = &mut self.convs;
        let h = &mut self.head;
        [
            c0.weight.as_slice_mut().expect("standard layout"),
            c0.bias.as_slice_mut().expect("contiguous"),
            c1.weight.as_slice_mut().expect("standard layout"),
            c1.bias.as_slice_mut().expect("contiguous"),
            c2.weight.as_slice_mut().expect("standard layout"),
            c2.bias.as_slice_mut().expect("contiguous"),
            h.weight.as_slice_mut().expect("standard layout"),
            h.bias.as_slice_mut().expect("contiguous"),
        ]
    }
}

impl Model {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn new(
        encoder: EncoderConfig,
        class_names: Vec<String>,
        hidden_dim: usize,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        encoder.validate()?;
        if class_names.is_empty() {
            return Err(Error::invalid("model needs at least one class"));
        }
        if hidden_dim == 0 {
            return Err(Error::invalid("hidden dimension must be positive"));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::invalid(format!(
                "dropout rate {dropout_rate} outside [0, 1)"
            )));
        }
        let mut r = rng::stream(seed, 0);
        let width = encoder.width();
        let convs = [
            GcnLayer::init(width, hidden_dim, &mut r),
            GcnLayer::init(hidden_dim, hidden_dim, &mut r),
            GcnLayer::init(hidden_dim, hidden_dim, &mut r),
        ];
        let head = Linear::init(hidden_dim, class_names.len(), &mut r);
        Ok(Self {
            convs,
            head,
            dropout_rate,
            encoder,
            class_names,
            frozen_backbone: false,
        })
    }

    pub fn hidden_dim(&self) -> usize {
        self.head.in_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.head.out_dim()
    }

    pub fn input_width(&self) -> usize {
        self.convs[0].in_dim()
    }

    /// Checks that layer shapes chain together and match the encoder.
    pub fn check_architecture(&self) -> Result<()> {
        let h = self.hidden_dim();
        let c = &self.convs;
        let ok = c[0].in_dim() == self.encoder.width()
            && c[0].out_dim() == h
            && c[1].in_dim() == h
            && c[1].out_dim() == h
            && c[2].in_dim() == h
            && c[2].out_dim() == h
            && c.iter().all(|l| l.bias.len() == l.out_dim())
            && self.head.bias.len() == self.head.out_dim()
            && self.head.out_dim() == self.class_names.len();
        if !ok {
            return Err(Error::Shape("model layer shapes are inconsistent".into()));
        }
        Ok(())
    }

    pub fn param_slices(&self) -> [&[f64]; 8] {
        let s = flat2;
        let b = flat1;
        [
            s(&self.convs[0].weight),
            b(&self.convs[0].bias),
            s(&self.convs[1].weight),
            b(&self.convs[1].bias),
            s(&self.convs[2].weight),
            b(&self.convs[2].bias),
            s(&self.head.weight),
            b(&self.head.bias),
        ]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [f64]; 8] {
        let [c0, c1, c2] = &mut self.convs;
        let h = &mut self.head;
        [
            c0.weight.as_slice_mut().expect("standard layout"),
            c0.bias.as_slice_mut().expect("contiguous"),
            c1.weight.as_slice_mut().expect("standard layout"),
            c1.bias.as_slice_mut().expect("contiguous"),
            c2.weight.as_slice_mut().expect("standard layout"),
            c2.bias.as_slice_mut().expect("contiguous"),
            h.weight.as_slice_mut().expect("standard layout"),
            h.bias.as_slice_mut().expect("contiguous"),
        ]
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.param_slices().iter().map(|s| s.len()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    /// Which parameter tensors the optimizer may change.
    pub fn trainable_mask(&self) -> [bool; 8] {
        let conv = !self.frozen_backbone;
        [conv, conv, conv, conv, conv, conv, true, true]
    }

    /// Logits for every graph in `batch`. Training modes record the
    /// intermediates needed by [`Model::backward`] on `tape`.
    pub fn forward(&self, batch: &BatchedGraphs, mode: Mode<'_>, tape: &mut Tape) -> Result<Array2<f64>> {
        let (logits, cache) = self.forward_impl(batch, mode, true)?;
        tape.cache = cache;
        Ok(logits)
    }

    /// Inference forward pass: dropout off, nothing recorded.
    pub fn forward_eval(&self, batch: &BatchedGraphs) -> Result<Array2<f64>> {
        self.forward_impl(batch, Mode::Eval, false).map(|(l, _)| l)
    }

    fn forward_impl(
        &self,
        batch: &BatchedGraphs,
        mode: Mode<'_>,
        record: bool,
    ) -> Result<(Array2<f64>, Option<ForwardCache>)> {
        if batch.feature_width() != self.input_width() {
            return Err(Error::Shape(format!(
                "batch features have width {}, model expects {} ({} encoder)",
                batch.feature_width(),
                self.input_width(),
                self.encoder.name()
            )));
        }
        let adj = batch.adjacency();
        let (z1, h1) = gcn_forward_parts(&self.convs[0], adj, batch.features().view())?;
        let a1 = h1.mapv(|v| v.max(0.0));
        let (z2, h2) = gcn_forward_parts(&self.convs[1], adj, a1.view())?;
        drop(a1);
        let a2 = h2.mapv(|v| v.max(0.0));
        let (z3, h3) = gcn_forward_parts(&self.convs[2], adj, a2.view())?;
        drop(a2);
        let pooled = global_mean_pool(h3.view(), batch.membership(), batch.num_graphs())?;
        let mask = match mode {
            Mode::Eval => None,
            Mode::Train(r) if self.dropout_rate > 0.0 => {
                Some(dropout_mask(pooled.dim(), self.dropout_rate, r)?)
            }
            Mode::Train(_) => None,
            Mode::TrainWithMask(m) => {
                if m.dim() != pooled.dim() {
                    return Err(Error::Shape(format!(
                        "dropout mask {:?} does not match pooled {:?}",
                        m.dim(),
                        pooled.dim()
                    )));
                }
                Some(m.clone())
            }
        };
        let dropped = match &mask {
            Some(m) => &pooled * m,
            None => pooled,
        };
        let logits = self.head.forward(dropped.view())?;
        let cache = record.then(|| ForwardCache {
            aggregated: [z1, z2, z3],
            pre_activation: [h1, h2, h3],
            dropped,
            mask,
            num_nodes: batch.num_nodes(),
        });
        Ok((logits, cache))
    }

    /// Reverse-mode gradients of a scalar loss given `d loss / d logits`.
    pub fn backward(
        &self,
        batch: &BatchedGraphs,
        tape: &Tape,
        grad_logits: ArrayView2<'_, f64>,
    ) -> Result<Gradients> {
        let cache = tape
            .cache
            .as_ref()
            .ok_or_else(|| Error::Usage("backward called without a recorded forward pass".into()))?;
        if cache.num_nodes != batch.num_nodes() {
            return Err(Error::Usage(
                "recorded forward pass belongs to a different batch".into(),
            ));
        }
        if grad_logits.dim() != (batch.num_graphs(), self.num_classes()) {
            return Err(Error::Shape(format!(
                "gradient shape {:?}, expected ({}, {})",
                grad_logits.dim(),
                batch.num_graphs(),
                self.num_classes()
            )));
        }
        let hidden = self.hidden_dim();
        let head = LayerGrads {
            weight: cache.dropped.t().dot(&grad_logits),
            bias: grad_logits.sum_axis(Axis(0)),
        };
        let zero_convs = || {
            [
                LayerGrads::zeros(self.input_width(), hidden),
                LayerGrads::zeros(hidden, hidden),
                LayerGrads::zeros(hidden, hidden),
            ]
        };
        if self.frozen_backbone {
            return Ok(Gradients {
                convs: zero_convs(),
                head,
            });
        }

        let mut d_pooled = grad_logits.dot(&self.head.weight.t());
        if let Some(m) = &cache.mask {
            d_pooled *= m;
        }
        let mut counts = vec![0usize; batch.num_graphs()];
        for &b in batch.membership() {
            counts[b] += 1;
        }
        let mut d_h = Array2::zeros((batch.num_nodes(), hidden));
        for (mut row, &b) in d_h.axis_iter_mut(Axis(0)).zip(batch.membership()) {
            row.assign(&d_pooled.row(b));
            row /= counts[b] as f64;
        }

        let adj = batch.adjacency();
        let mut convs = zero_convs();
        for layer in (0..3).rev() {
            let z = &cache.aggregated[layer];
            convs[layer].weight = z.t().dot(&d_h);
            convs[layer].bias = d_h.sum_axis(Axis(0));
            if layer == 0 {
                break;
            }
            // d(input) = Â_norm · dH · Wᵀ, then through the previous ReLU
            let d_z = d_h.dot(&self.convs[layer].weight.t());
            let mut d_in = adj.aggregate(d_z.view());
            d_in.zip_mut_with(&cache.pre_activation[layer - 1], |g, &pre| {
                if pre <= 0.0 {
                    *g = 0.0;
                }
            });
            d_h = d_in;
        }
        Ok(Gradients { convs, head })
    }

    /// Adam update of every trainable tensor.
    pub fn apply_adam(&mut self, grads: &Gradients, state: &mut AdamState) -> Result<()> {
        let trainable = self.trainable_mask();
        let mut params = self.param_slices_mut();
        state.step(&mut params, &grads.slices(), &trainable)
    }

    /// Copy with a freshly initialized head for `class_names`; with
    /// `freeze_backbone`, later training only updates the head.
    pub fn replace_head(&self, class_names: Vec<String>, freeze_backbone: bool, seed: u64) -> Result<Model> {
        if class_names.len() < 2 {
            return Err(Error::invalid("a classifier head needs at least 2 classes"));
        }
        let mut r = rng::stream(seed, 1);
        Ok(Model {
            convs: self.convs.clone(),
            head: Linear::init(self.hidden_dim(), class_names.len(), &mut r),
            dropout_rate: self.dropout_rate,
            encoder: self.encoder,
            class_names,
            frozen_backbone: freeze_backbone,
        })
    }
}

fn flat2(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

fn flat1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("contiguous")
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows(logits: ArrayView2<'_, f64>) -> Vec<usize> {
    logits
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
