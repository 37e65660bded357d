//! Forward and backward passes for every layer type in the network.
//!
//! Layers are geometry descriptors; their parameters are passed in by
//! reference so the same code serves the network (which keeps everything in
//! a [`ParamStore`](crate::params::ParamStore)) and standalone tests.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod loss;
pub mod lstm;

pub use activation::{relu, relu_backward};
pub use conv::{Conv1d, Conv1dGrads};
pub use dense::{Activation, Dense, DenseGrads};
pub use dropout::{DropoutMode, DropoutSpec};
pub use loss::softmax_ce;
pub use lstm::{BiLstm, BiLstmGrads, BiLstmTrace, Lstm, LstmGrads, LstmTrace, LstmWeights};
