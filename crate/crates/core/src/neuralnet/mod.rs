//! From-scratch one-hidden-layer classifier: ReLU hidden units, softmax
//! output, cross-entropy loss, ADAM, mini-batches and repeated holdout
//! evaluation.

pub mod adam;
pub mod mlp;
pub mod model_file;
pub mod train;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{cross_entropy, softmax_in_place, Mlp, Params};
pub use model_file::SavedModel;
pub use train::{cross_validate, evaluate, train, CrossValidation, FoldResult, TrainConfig, TrainResult};
