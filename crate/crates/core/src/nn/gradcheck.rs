//! Finite-difference verification of [`Model::backward`].
//!
//! Every parameter is nudged by `±step` and the central difference of the
//! batch cross-entropy is compared with the analytic gradient. The relative
//! error of one coordinate is `|a - n| / max(|a|, |n|, REL_ERROR_FLOOR)`; the
//! floor keeps vanishing gradients from turning rounding noise into large
//! relative errors. Coordinates whose nudge flips a ReLU on or off are
//! skipped, since the loss is not differentiable across that kink.

use ndarray::Array2;

use super::batch::BatchedGraphs;
use super::layers::dropout_mask;
use super::loss::cross_entropy;
use super::model::{Gradients, Mode, Model, Tape, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::featenc::EncoderConfig;
use crate::graphrep::coo_to_graph;
use crate::matgen::{generate_instance, DimsRange, Registry};
use crate::rng;

use super::batch::PreparedGraph;

pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamCheck {
    pub name: &'static str,
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params.iter().map(|p| p.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.max_rel_error <= self.tolerance)
    }
}

fn fixed_mask(model: &Model, batch: &BatchedGraphs) -> Result<Option<Array2<f64>>> {
    if model.dropout_rate == 0.0 {
        return Ok(None);
    }
    let mut r = rng::stream(0x6772_6164, 0);
    dropout_mask((batch.num_graphs(), model.hidden_dim()), model.dropout_rate, &mut r).map(Some)
}

fn loss_and_activity(
    model: &Model,
    batch: &BatchedGraphs,
    mask: Option<&Array2<f64>>,
    tape: &mut Tape,
) -> Result<f64> {
    let mode = match mask {
        Some(m) => Mode::TrainWithMask(m),
        None => Mode::Eval,
    };
    let logits = model.forward(batch, mode, tape)?;
    Ok(cross_entropy(logits.view(), batch.labels())?.0)
}

/// Analytic gradients of the batch cross-entropy under the fixed dropout mask
/// used by the checker.
pub fn analytic_gradients(model: &Model, batch: &BatchedGraphs) -> Result<Gradients> {
    let mask = fixed_mask(model, batch)?;
    let mut tape = Tape::new();
    let mode = match &mask {
        Some(m) => Mode::TrainWithMask(m),
        None => Mode::Eval,
    };
    let logits = model.forward(batch, mode, &mut tape)?;
    let (_, grad) = cross_entropy(logits.view(), batch.labels())?;
    model.backward(batch, &tape, grad.view())
}

/// Hidden width of the models built by [`random_problem`].
pub const PROBLEM_HIDDEN_DIM: usize = 16;

/// A freshly initialised model and a batch of small generated graphs, one of
/// each built-in class at 6 to 14 nodes, all derived from `seed`.
pub fn random_problem(seed: u64, encoder: EncoderConfig) -> Result<(Model, BatchedGraphs)> {
    let registry = Registry::builtin(1)?;
    let dims = DimsRange::new(6, 14)?;
    let graphs = (0..registry.len())
        .map(|c| {
            let g = coo_to_graph(&generate_instance(&registry, c, 0, dims, seed)?)?;
            PreparedGraph::new(&g, encoder.encode_with(&g, true)?, c)
        })
        .collect::<Result<Vec<_>>>()?;
    let model = Model::new(
        encoder,
        registry.class_names(),
        PROBLEM_HIDDEN_DIM,
        super::model::DEFAULT_DROPOUT,
        rng::derive_seed(seed, 0x6763),
    )?;
    Ok((model, BatchedGraphs::from_owned(&graphs)?))
}

/// Checks [`Model::backward`] against central differences.
pub fn grad_check(model: &Model, batch: &BatchedGraphs, step: f64, tolerance: f64) -> Result<GradCheckReport> {
    let analytic = analytic_gradients(model, batch)?;
    compare_gradients(model, batch, &analytic, step, tolerance)
}

/// Compares caller-supplied gradients against central differences.
pub fn compare_gradients(
    model: &Model,
    batch: &BatchedGraphs,
    analytic: &Gradients,
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mask = fixed_mask(model, batch)?;
    let mut tape = Tape::new();
    loss_and_activity(model, batch, mask.as_ref(), &mut tape)?;
    let base_activity = tape.activity();

    let mut probe = model.clone();
    // a frozen model reports zero conv gradients; differentiate the real loss anyway
    probe.frozen_backbone = false;
    let analytic_slices = analytic.slices();
    let mut params = Vec::new();
    for (t, name) in PARAM_NAMES.iter().enumerate() {
        let len = probe.param_slices()[t].len();
        if analytic_slices[t].len() != len {
            return Err(Error::Shape(format!(
                "{name}: analytic gradient has {} entries, parameter has {len}",
                analytic_slices[t].len()
            )));
        }
        let mut check = ParamCheck {
            name,
            max_rel_error: 0.0,
            checked: 0,
            skipped_kinks: 0,
        };
        for (i, &a) in analytic_slices[t].iter().enumerate() {
            let orig = probe.param_slices()[t][i];
            probe.param_slices_mut()[t][i] = orig + step;
            let plus = loss_and_activity(&probe, batch, mask.as_ref(), &mut tape)?;
            let kink_plus = tape.activity() != base_activity;
            probe.param_slices_mut()[t][i] = orig - step;
            let minus = loss_and_activity(&probe, batch, mask.as_ref(), &mut tape)?;
            let kink_minus = tape.activity() != base_activity;
            probe.param_slices_mut()[t][i] = orig;
            if kink_plus || kink_minus {
                check.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * step);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            check.max_rel_error = check.max_rel_error.max(rel);
            check.checked += 1;
        }
        params.push(check);
    }
    Ok(GradCheckReport { params, tolerance })
}
