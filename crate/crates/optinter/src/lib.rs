//! Learns, per feature pair, how a CTR model should treat the interaction:
//! *memorize* it as a dedicated cross-product embedding, *factorize* it from
//! the original feature embeddings, or stay *naive* and model nothing
//! explicit. Selection runs as a differentiable architecture search
//! (Gumbel-softmax over the three candidates per pair), followed by a
//! from-scratch retrain under the discrete argmax architecture.
//!
//! Module map:
//!
//! - [`data`] — schemas, vocabularies with frequency thresholds,
//!   cross-product transformation, instance encoding, synthetic corpora.
//! - [`num`] — dense f64 kernel: explicit forward/backward ops, Adam,
//!   Xavier init, finite-difference gradient checking.
//! - [`model`] — embedding tables, the combination block (relaxed and
//!   fixed), the LayerNorm/ReLU MLP classifier, checkpoints.
//! - [`nas`] — the two-stage learning algorithm: joint search, architecture
//!   derivation, retrain, plus bi-level and random-architecture baselines.
//! - [`metrics`] — AUC, log loss, paired t-test over seeded runs.
//! - [`mi`] — mutual information between feature interactions and labels,
//!   per-method grouping, heatmap export.

pub mod data;
pub mod metrics;
pub mod mi;
pub mod model;
pub mod nas;
pub mod num;
