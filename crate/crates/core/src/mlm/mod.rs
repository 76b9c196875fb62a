//! Masked-language-model encoder: configuration, masking, forward and
//! backward passes, training, inference and checkpoints.

mod checkpoint;
mod config;
mod infer;
mod masking;
mod model;
pub mod ops;
mod real;
mod train;

pub use checkpoint::{
    sha256_hex, Checkpoint, CheckpointError, CheckpointMeta, LossDigest, NamedTensor, Origin,
    TrainRecord, FORMAT_VERSION, MAGIC,
};
pub use config::{Architecture, Indices, LayerIdx, ModelConfig, TensorSpec};
pub use infer::{
    encode_cls, encode_mean, fill_mask, mask_distribution, token_probability, Prediction,
};
pub use masking::{apply_masking, is_eligible, MaskedBatch, MaskingPolicy, IGNORE_LABEL};
pub use model::{mlm_loss, Grads, Logits, Model, INIT_STD};
pub use real::Real;
pub use train::{train, Adam, TrainHp, TrainOutcome};
