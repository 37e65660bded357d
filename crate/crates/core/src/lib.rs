//! Multi-domain CNN+LSTM speech emotion recognition with layer-freezing
//! feature transfer, built on hand-written forward/backward passes.

pub mod audio;
pub mod error;
pub mod experiments;
pub mod gradcheck;
pub mod layers;
pub mod network;
pub mod optim;
pub mod params;
pub mod rng;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use params::{Param, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor;
