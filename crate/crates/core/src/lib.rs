//! Sparse matrix structure classification.
//!
//! A sparse matrix's nonzero pattern is read as the adjacency of an
//! undirected graph. Each node gets a degree-based feature vector and a
//! three-layer graph convolutional network with a mean-pooling readout
//! predicts one structure class for the whole matrix.
//!
//! The crate is organised as a pipeline:
//!
//! * [`pattern`] and [`matgen`]: positions-only COO patterns, synthetic
//!   generators for each structure class and balanced dataset assembly.
//! * [`graphrep`]: pattern to graph conversion, node sampling and relabelling.
//! * [`featenc`]: one-hot, local degree profile and binned one-hot encoders.
//! * [`nn`]: the network, its exact gradients and the Adam optimizer.
//! * [`trainer`]: cross-validated training, metrics, robustness studies and
//!   checkpoints.

pub mod error;
pub mod featenc;
pub mod graphrep;
pub mod matgen;
pub mod nn;
pub mod pattern;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use featenc::{EncoderConfig, FeatureMatrix};
pub use graphrep::{Graph, Permutation};
pub use matgen::{DatasetManifest, DimsRange, GeneratorSpec, Registry};
pub use nn::{BatchedGraphs, Model};
pub use pattern::CooPattern;

pub use trainer::{Metrics, TrainConfig};
