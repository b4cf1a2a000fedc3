//! Synthetic graph-classification benchmarks with background-knowledge
//! graphs, graph perturbation operators, from-scratch GNN training and
//! robustness sweeps.

pub mod error;
pub mod experiment;
pub mod graph;
pub mod models;
pub mod nn;
pub mod perturb;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
