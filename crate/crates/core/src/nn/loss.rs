use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Row-wise softmax with max shift.
pub fn softmax(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Mean cross-entropy over the batch and its gradient `(softmax - onehot) / B`.
pub fn cross_entropy(logits: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Array2<f64>)> {
    let (b, c) = logits.dim();
    if labels.len() != b {
        return Err(Error::Shape(format!("{} labels for {b} logit rows", labels.len())));
    }
    if b == 0 {
        return Err(Error::InvalidInput("cross entropy of an empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidInput(format!("label {bad} out of range for {c} classes")));
    }
    let mut grad = Array2::zeros((b, c));
    let mut total = 0.0;
    for (i, (row, &label)) in logits.axis_iter(Axis(0)).zip(labels).enumerate() {
        let top = (0..c).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        let max = row[top];
        // log-sum-exp as max + ln(1 + rest) keeps tiny losses exact
        let rest: f64 = (0..c).filter(|&j| j != top).map(|j| (row[j] - max).exp()).sum();
        let log_norm = rest.ln_1p();
        let lse = max + log_norm;
        total += (max - row[label]) + log_norm;
        for (j, &v) in row.iter().enumerate() {
            grad[[i, j]] = (v - lse).exp() / b as f64;
        }
        grad[[i, label]] -= 1.0 / b as f64;
    }
    Ok((total / b as f64, grad))
}
