//! Dense tensors and the closed layer set used by both classifiers, each
//! with an exact analytic backward pass.

pub mod activation;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod gradcheck;
pub mod layer;
pub mod lstm;
pub mod model;
pub mod pool;
pub mod tensor;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use checkpoint::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};
pub use conv::{conv1d_backward, conv1d_forward, conv1d_param_count, Padding};
pub use dense::{dense_backward, dense_forward};
pub use dropout::{dropout, dropout_backward, Mode};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport};
pub use layer::{model_param_count, Layer, LayerSpec, Param, ParamRole};
pub use lstm::{
    bilstm_backward, bilstm_forward, lstm_backward, lstm_forward, lstm_forward_with_state, lstm_param_count,
    LstmGrads, LstmParams,
};
pub use model::{Gradients, Model, Trace};
pub use pool::{global_avg_pool, global_avg_pool_backward, maxpool1d, maxpool1d_backward};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("invalid tensor shape {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("kernel of size {kernel} does not fit a sequence of length {length}")]
    KernelTooLarge { kernel: usize, length: usize },
    #[error("pool of size {pool} does not fit a sequence of length {length}")]
    PoolTooLarge { pool: usize, length: usize },
    #[error("invalid layer: {0}")]
    InvalidSpec(String),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("gradient check supports at most 10000 parameters, model has {0}")]
    TooManyParameters(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
