//! Small convolutional networks for wetness classification and box regression.

mod augment;
mod checkpoint;
mod class;
mod config;
mod gemm;
mod loss;
mod network;
mod optim;
mod predict;
mod tensor;
mod train;

pub use augment::{random_crop, to_input};
pub use checkpoint::{
    checkpoint_from_json, checkpoint_to_json, load_checkpoint, save_checkpoint, LoadedCheckpoint,
    CHECKPOINT_VERSION,
};
pub use class::WetnessClass;
pub use config::{lr_at_epoch, Augment, TrainConfig};
pub use loss::{cross_entropy, loss_and_grad, mean_squared_error, regression_loss_and_grad, softmax};
pub use network::{ForwardCache, Head, LayerSpec, ModelSpec, Network};
pub use optim::{adam_step, sgd_step, AdamState, Optimizer};
pub use predict::{predict, regress_box, Classifier, Prediction};
pub use tensor::Tensor;
pub use train::{
    box_target, train, train_regressor, DatasetSplits, EpochRecord, LabeledImage, TrainOutcome,
    TrainingHistory,
};
