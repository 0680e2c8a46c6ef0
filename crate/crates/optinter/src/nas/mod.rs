//! The two-stage learning algorithm.
//!
//! Stage one (`search`) trains network weights and per-pair architecture
//! parameters jointly on the same mini-batch forward pass, with the
//! combination block relaxed through a temperature-annealed Gumbel-softmax.
//! Stage two (`retrain`) derives the per-pair argmax decision and trains a
//! fresh fixed-architecture model from scratch; search-stage weights are
//! discarded.
//!
//! `bilevel_search` (alternating theta/alpha updates on train/validation
//! batches) and `random_architecture` are the ablation baselines.

mod gumbel;
mod schedule;
mod search;

pub use gumbel::{gumbel_from_uniform, gumbel_noise, sample_gumbel_rows};
pub use schedule::TemperatureSchedule;
pub use search::{
    bilevel_search, evaluate, random_architecture, retrain, search, EpochRecord, RetrainResult,
    SearchResult, TrainLoopConfig,
};

use thiserror::Error;

use crate::metrics::MetricError;
use crate::model::ModelError;
use crate::num::NumError;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("divergence: {0}")]
    Divergence(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<ModelError> for SearchError {
    fn from(e: ModelError) -> Self {
        // Non-finite numerics during training are divergence, not plumbing.
        match &e {
            ModelError::Num(NumError::NonFinite(msg)) => SearchError::Divergence(msg.clone()),
            _ => SearchError::Model(e),
        }
    }
}

/// Serializes one run-log record per line (newline-delimited JSON).
pub fn write_run_log(path: &std::path::Path, records: &[EpochRecord]) -> Result<(), SearchError> {
    let mut out = String::new();
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
