//! JSON checkpoints: architecture, encoder, class names and every parameter
//! tensor as `{name, shape, values}` in row-major order. Floats are written in
//! shortest round-trip form, so a reload reproduces the model bit for bit.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featenc::EncoderConfig;
use crate::nn::{GcnLayer, Linear, Model, PARAM_NAMES};

const FORMAT: &str = "sparsegnn-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    hidden_dim: usize,
    dropout_rate: f64,
    encoder: EncoderConfig,
    class_names: Vec<String>,
    frozen_backbone: bool,
    tensors: Vec<TensorRecord>,
}

pub fn checkpoint_to_string(model: &Model) -> String {
    let shapes: [Vec<usize>; 8] = [
        model.convs[0].weight.shape().to_vec(),
        vec![model.convs[0].bias.len()],
        model.convs[1].weight.shape().to_vec(),
        vec![model.convs[1].bias.len()],
        model.convs[2].weight.shape().to_vec(),
        vec![model.convs[2].bias.len()],
        model.head.weight.shape().to_vec(),
        vec![model.head.bias.len()],
    ];
    let tensors = PARAM_NAMES
        .iter()
        .zip(shapes)
        .zip(model.param_slices())
        .map(|((name, shape), values)| TensorRecord {
            name: name.to_string(),
            shape,
            values: values.to_vec(),
        })
        .collect();
    let file = CheckpointFile {
        format: FORMAT.into(),
        version: VERSION,
        hidden_dim: model.hidden_dim(),
        dropout_rate: model.dropout_rate,
        encoder: model.encoder,
        class_names: model.class_names.clone(),
        frozen_backbone: model.frozen_backbone,
        tensors,
    };
    serde_json::to_string(&file).expect("checkpoint serializes")
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, checkpoint_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

pub fn checkpoint_from_str(text: &str) -> Result<Model> {
    let file: CheckpointFile = serde_json::from_str(text)
        .map_err(|e| Error::Integrity(format!("malformed checkpoint: {e}")))?;
    if file.format != FORMAT || file.version != VERSION {
        return Err(Error::Integrity(format!(
            "unsupported checkpoint format {:?} version {}",
            file.format, file.version
        )));
    }
    file.encoder
        .validate()
        .map_err(|e| Error::Integrity(e.to_string()))?;
    if file.tensors.len() != PARAM_NAMES.len() {
        return Err(Error::Integrity(format!(
            "expected {} tensors, found {}",
            PARAM_NAMES.len(),
            file.tensors.len()
        )));
    }
    let width = file.encoder.width();
    let (h, c) = (file.hidden_dim, file.class_names.len());
    let expected: [&[usize]; 8] = [&[width, h], &[h], &[h, h], &[h], &[h, h], &[h], &[h, c], &[c]];
    for ((t, name), shape) in file.tensors.iter().zip(PARAM_NAMES).zip(expected) {
        if t.name != name {
            return Err(Error::Integrity(format!(
                "expected tensor {name:?}, found {:?}",
                t.name
            )));
        }
        if t.shape != shape {
            return Err(Error::Integrity(format!(
                "tensor {name} has shape {:?}, architecture needs {shape:?}",
                t.shape
            )));
        }
        if t.values.len() != shape.iter().product::<usize>() {
            return Err(Error::Integrity(format!(
                "tensor {name} holds {} values for shape {shape:?}",
                t.values.len()
            )));
        }
        if t.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integrity(format!("tensor {name} has non-finite values")));
        }
    }
    let mut it = file.tensors.into_iter();
    let mut next = || it.next().expect("count checked");
    let mut layer = || {
        let w = next();
        let b = next();
        (
            Array2::from_shape_vec((w.shape[0], w.shape[1]), w.values).expect("shape checked"),
            Array1::from_vec(b.values),
        )
    };
    let mut conv = || {
        let (weight, bias) = layer();
        GcnLayer { weight, bias }
    };
    let convs = [conv(), conv(), conv()];
    let (weight, bias) = layer();
    let model = Model {
        convs,
        head: Linear { weight, bias },
        dropout_rate: file.dropout_rate,
        encoder: file.encoder,
        class_names: file.class_names,
        frozen_backbone: file.frozen_backbone,
    };
    model
        .check_architecture()
        .map_err(|e| Error::Integrity(e.to_string()))?;
    Ok(model)
}
