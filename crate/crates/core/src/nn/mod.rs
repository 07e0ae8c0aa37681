//! Deterministic dense-f64 GNN engine with hand-written backward passes.

mod adam;
pub mod checkpoint;
mod loss;
mod model;
mod params;
mod sparse;
mod task;

pub use adam::{Adam, BETA1, BETA2, EPSILON};
pub use loss::{cross_entropy, log_softmax, nll_loss, one_hot, softmax};
pub use model::{Arch, Block, DecoderCache, EncoderCache, LinkPredictor, ParamKind, ParamSpec, DECODER_LAYERS, ENCODER_LAYERS, OUTPUTS};
pub use params::Params;
pub use sparse::{Csr, GraphInput, Propagation};
pub use task::{Pathway, Task, TaskInputs};
