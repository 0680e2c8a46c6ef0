//! The CTR network: per-field original embedding tables, per-pair
//! cross-product embedding tables, the combination block that blends or
//! selects among the three interaction candidates per pair, and a
//! LayerNorm/ReLU MLP classifier with a sigmoid head.
//!
//! In relaxed mode every pair mixes its candidates with Gumbel-softmax
//! weights learned through per-pair architecture parameters. In fixed mode
//! a discrete decision selects exactly one candidate per pair at native
//! width, and non-memorized cross tables do not exist at all.

mod arch;
mod checkpoint;
mod combination;
mod config;
mod diff;
mod embedding;
mod mlp;
mod network;

pub use arch::{derive_architecture, ArchParams, ArchitectureDecision, Method};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use combination::{gumbel_softmax_weights, hadamard};
pub use config::ModelConfig;
pub use diff::BatchObjective;
pub use embedding::{embed_original, EmbeddingTable, TableOwner};
pub use mlp::{Mlp, MlpState};
pub use network::{DataDims, ForwardState, Mode, OptInterModel};

use thiserror::Error;

use crate::num::NumError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("config error: {0}")]
    Config(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
