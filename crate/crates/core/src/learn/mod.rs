//! Reverse-mode autodiff, dense and LSTM heads, Adam, and behavior cloning.

mod policy;
mod tape;
mod tensor;
mod train;


pub use policy::{
    action_loss, action_loss_on_tape, action_to_output, output_to_action, param_shapes, Encoder,
    Head, Policy, PolicyConfig, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, OUTPUT_DIM,
};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
pub use train::{
    batch_loss_and_grads, dataset_loss, delta_action, train, write_curve_csv, Adam, CurvePoint,
    Samples, TrainConfig, TrainResult, STD_FLOOR,
};
