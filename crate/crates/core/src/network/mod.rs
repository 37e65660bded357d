//! The multi-domain network: `conv1 → conv2 → lstm → fc1 → fc2 → out`.

mod config;
mod mask;
mod model;
mod train;
mod weights;

pub use config::{ConvConfig, NetworkConfig};
pub use mask::{LayerMask, LayerName};
pub use model::NetworkModel;
pub use train::{evaluate, train_epochs, Example, TrainConfig, TrainLog, Trainer};
pub use weights::{load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};
