//! File formats: the binary weights container, signal inputs, and the TOML
//! model configuration.

pub mod config;
pub mod signal;
pub mod store;
pub mod weights;

pub use store::{StoredTensor, TensorData, WeightStore};
