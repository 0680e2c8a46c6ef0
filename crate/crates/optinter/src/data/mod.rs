//! Dataset ingestion and encoding.
//!
//! The pipeline is: CSV rows + schema -> vocabulary built on the training
//! split (frequency-thresholded, with one out-of-vocabulary slot per field
//! and per pair) -> index-encoded instances carrying both the original
//! per-field indices and one cross-product index per unordered field pair.
//!
//! Everything is immutable after construction; encoded datasets can be read
//! from any number of threads.

mod csvio;
mod dataset;
mod encode;
mod schema;
mod synthetic;
mod vocab;

pub use csvio::{read_csv, write_csv, RawRow};
pub use dataset::{schema_vocab_hash, split_dataset, read_dataset_file, write_dataset_file, Dataset, Split};
pub use encode::{encode_dataset, encode_instance, EncodedInstance, FieldPayload};
pub use schema::{count_pairs, pair_list, FeatureSchema, FieldKind, FieldSpec};
pub use synthetic::{
    generate_synthetic, InteractionKind, PlantedPair, SyntheticData, SyntheticField, SyntheticSpec,
};
pub use vocab::{FieldVocab, PairVocab, Vocabulary, VocabularyOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("format error at row {row}: {msg}")]
    Format { row: usize, msg: String },
    #[error("empty input")]
    EmptyInput,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
