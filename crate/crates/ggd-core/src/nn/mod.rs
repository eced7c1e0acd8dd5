//! Minimal dense tensor and gradient engine.
//!
//! Just enough machinery for the models in this crate: a row-major tensor,
//! graph-convolution and linear layers, a GRU cell, mean pooling, the four
//! losses, Adam, and a finite-difference gradient checker. Backward passes
//! are written per layer and composed in reverse order by each model; there
//! is no general expression graph.

pub mod adam;
pub mod bundle;
pub mod gradcheck;
pub mod layers;
pub mod losses;
pub mod tensor;

/// Scalar type for all tensor values. 64-bit by default so gradient checks
/// hold at tight tolerances; the `real32` feature trades precision for speed.
#[cfg(feature = "real32")]
pub type Real = f32;
#[cfg(not(feature = "real32"))]
pub type Real = f64;

pub use adam::Adam;
pub use layers::{mean_pool, mean_pool_backward, normalize_adjacency, Activation, GcnLayer, GruCell, Linear};
pub use losses::{bce, bce_with_logits, cross_entropy, hinge_loss, nt_xent, LossValue, NtXentLoss};
pub use tensor::Tensor;
