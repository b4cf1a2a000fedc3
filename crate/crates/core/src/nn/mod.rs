//! Dense numerical kernel: matrices, layers with explicit backward
//! passes, loss, optimizer, gradient checking and checkpoints.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod matrix;
mod propagation;

pub use adam::AdamState;
pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, NamedTensor};
pub use gradcheck::grad_check;
pub use layers::{
    glorot, Activation, GcnCache, GcnLayer, Gatv2Cache, Gatv2Layer, Linear, Mlp, MlpCache,
    Parameterized,
};
pub use loss::softmax_cross_entropy;
pub use matrix::DenseMatrix;
pub use propagation::{normalize_adjacency, Propagation};
