use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates for one class. Any rate with a zero denominator is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    /// Fraction of this class's samples predicted correctly.
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Confusion matrix (rows = true class, columns = predicted) and derived rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub class_names: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    /// Unweighted mean of the per-class F1 scores.
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    /// Metrics from `(true class, predicted class)` pairs.
    pub fn from_pairs(class_names: &[String], pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidInput("no predictions to score".into()));
        }
        let c = class_names.len();
        let mut confusion = vec![vec![0usize; c]; c];
        for &(t, p) in pairs {
            if t >= c || p >= c {
                return Err(Error::InvalidInput(format!(
                    "class pair ({t}, {p}) out of range for {c} classes"
                )));
            }
            confusion[t][p] += 1;
        }
        Self::from_confusion(class_names.to_vec(), confusion)
    }

    pub fn from_confusion(class_names: Vec<String>, confusion: Vec<Vec<usize>>) -> Result<Self> {
        let c = class_names.len();
        if confusion.len() != c || confusion.iter().any(|r| r.len() != c) {
            return Err(Error::Shape(format!("confusion matrix must be {c}x{c}")));
        }
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::InvalidInput("empty confusion matrix".into()));
        }
        let per_class: Vec<ClassMetrics> = (0..c)
            .map(|k| {
                let tp = confusion[k][k];
                let support: usize = confusion[k].iter().sum();
                let predicted: usize = confusion.iter().map(|r| r[k]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassMetrics {
                    accuracy: recall,
                    precision,
                    recall,
                    f1,
                    support,
                }
            })
            .collect();
        let trace: usize = (0..c).map(|k| confusion[k][k]).sum();
        let f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / c as f64;
        Ok(Self {
            class_names,
            confusion,
            per_class,
            accuracy: ratio(trace, total),
            f1,
        })
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn class_accuracy(&self, name: &str) -> Option<f64> {
        self.class_names
            .iter()
            .position(|n| n == name)
            .map(|k| self.per_class[k].accuracy)
    }

    /// Tab-separated confusion matrix with a header row of predicted classes.
    pub fn confusion_tsv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for n in &self.class_names {
            let _ = write!(out, "\t{n}");
        }
        out.push('\n');
        for (n, row) in self.class_names.iter().zip(&self.confusion) {
            out.push_str(n);
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Tab-separated per-class table followed by overall rows.
    pub fn report(&self) -> String {
        let mut out = String::from("class\taccuracy\tprecision\trecall\tf1\tsupport\n");
        for (n, m) in self.class_names.iter().zip(&self.per_class) {
            let _ = writeln!(
                out,
                "{n}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
                m.accuracy, m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(out, "overall_accuracy\t{:.4}", self.accuracy);
        let _ = writeln!(out, "overall_f1\t{:.4}", self.f1);
        out
    }
}
