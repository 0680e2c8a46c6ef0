use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::csvio::RawRow;
use super::dataset::{Dataset, Split};
use super::encode::encode_dataset;
use super::schema::{pair_list, FeatureSchema, FieldKind, FieldSpec};
use super::vocab::{Vocabulary, VocabularyOptions};
use super::DataError;
use crate::num::{sigmoid_scalar, Rng};

/// Ground-truth interaction type planted in a synthetic pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    /// Label contribution is an arbitrary lookup on the value pair
    /// (full-rank by construction, not expressible as a low-rank bilinear).
    Memorize,
    /// Label contribution is an inner product of per-value latent vectors.
    Factorize,
    /// The pair contributes nothing.
    Noise,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticField {
    pub name: String,
    pub cardinality: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantedPair {
    pub i: usize,
    pub j: usize,
    pub kind: InteractionKind,
    /// Scale of the pair's logit contribution.
    pub strength: f64,
}

fn default_factor_rank() -> usize {
    2
}

fn default_fractions() -> (f64, f64, f64) {
    (0.8, 0.1, 0.1)
}

/// Declarative recipe for a synthetic CTR corpus with known per-pair
/// ground truth. Pairs not listed are pure noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub version: u32,
    pub fields: Vec<SyntheticField>,
    pub pairs: Vec<PlantedPair>,
    pub rows: usize,
    #[serde(default = "default_fractions")]
    pub fractions: (f64, f64, f64),
    /// Standard deviation of Gaussian noise added to each logit.
    pub noise_level: f64,
    pub bias: f64,
    /// Standard deviation of per-field per-value main effects.
    pub main_effect_scale: f64,
    #[serde(default = "default_factor_rank")]
    pub factor_rank: usize,
    /// Frequency threshold applied when the generated corpus is encoded;
    /// rare original values and cross cells collapse to OOV.
    #[serde(default = "default_min_frequency")]
    pub min_frequency: u64,
    pub seed: u64,
}

fn default_min_frequency() -> u64 {
    1
}

impl SyntheticSpec {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let spec: SyntheticSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.version != 1 {
            return Err(DataError::Domain(format!("unsupported synthetic spec version {}", self.version)));
        }
        if self.fields.len() < 2 {
            return Err(DataError::Domain("synthetic spec needs at least 2 fields".into()));
        }
        for f in &self.fields {
            if f.cardinality == 0 {
                return Err(DataError::Domain(format!("field {:?} has cardinality 0", f.name)));
            }
        }
        if self.rows == 0 {
            return Err(DataError::Domain("synthetic spec needs rows >= 1".into()));
        }
        if self.factor_rank == 0 {
            return Err(DataError::Domain("factor_rank must be >= 1".into()));
        }
        let m = self.fields.len();
        for p in &self.pairs {
            if p.i >= p.j || p.j >= m {
                return Err(DataError::Domain(format!("planted pair ({}, {}) is not a valid i<j<M pair", p.i, p.j)));
            }
        }
        Ok(())
    }

    /// Ground-truth kind per pair in canonical pair order.
    pub fn ground_truth(&self) -> Vec<InteractionKind> {
        let pairs = pair_list(self.fields.len());
        let mut truth = vec![InteractionKind::Noise; pairs.len()];
        for planted in &self.pairs {
            if let Some(p) = pairs.iter().position(|&(i, j)| (i, j) == (planted.i, planted.j)) {
                truth[p] = planted.kind;
            }
        }
        truth
    }

    pub fn schema(&self) -> FeatureSchema {
        FeatureSchema::new(
            self.fields
                .iter()
                .map(|f| FieldSpec { name: f.name.clone(), kind: FieldKind::CategoricalUnivalent })
                .collect(),
        )
        .expect("validated spec produces a valid schema")
    }
}

/// Raw and encoded splits plus the recorded per-pair ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub raw_train: Vec<RawRow>,
    pub raw_validation: Vec<RawRow>,
    pub raw_test: Vec<RawRow>,
    pub ground_truth: Vec<InteractionKind>,
}

enum PairEffect {
    None,
    Lookup { cols: usize, table: Vec<f64> },
    Latent { left: Vec<Vec<f64>>, right: Vec<Vec<f64>> },
}

/// Draws a corpus whose labels are Bernoulli(sigmoid(bias + main effects +
/// planted pair contributions + Gaussian noise)). Deterministic in
/// (spec, seed): identical inputs give byte-identical datasets.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData, DataError> {
    spec.validate()?;
    let schema = Arc::new(spec.schema());
    let m = spec.fields.len();
    let pairs = pair_list(m);
    let root = Rng::seeded(seed);
    let mut param_rng = root.derive(0x70617261);
    let mut row_rng = root.derive(0x726f7773);

    // Ground-truth parameters.
    let main_effects: Vec<Vec<f64>> = spec
        .fields
        .iter()
        .map(|f| (0..f.cardinality).map(|_| param_rng.normal() * spec.main_effect_scale).collect())
        .collect();
    let mut effects: Vec<PairEffect> = Vec::with_capacity(pairs.len());
    let truth = spec.ground_truth();
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let strength = spec
            .pairs
            .iter()
            .find(|pl| (pl.i, pl.j) == (i, j))
            .map(|pl| pl.strength)
            .unwrap_or(0.0);
        let card_i = spec.fields[i].cardinality as usize;
        let card_j = spec.fields[j].cardinality as usize;
        let effect = match truth[p] {
            InteractionKind::Noise => PairEffect::None,
            InteractionKind::Memorize => PairEffect::Lookup {
                cols: card_j,
                table: (0..card_i * card_j).map(|_| param_rng.normal() * strength).collect(),
            },
            InteractionKind::Factorize => {
                // Scale so the inner product has variance ~ strength^2.
                let rank = spec.factor_rank;
                let a = strength.abs().sqrt() / (rank as f64).powf(0.25);
                let draw = |rng: &mut Rng, card: usize| -> Vec<Vec<f64>> {
                    (0..card).map(|_| (0..rank).map(|_| rng.normal() * a).collect()).collect()
                };
                PairEffect::Latent { left: draw(&mut param_rng, card_i), right: draw(&mut param_rng, card_j) }
            }
        };
        effects.push(effect);
    }

    // Rows.
    let mut raw_rows = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let values: Vec<u32> =
            spec.fields.iter().map(|f| row_rng.below(u64::from(f.cardinality)) as u32).collect();
        let mut logit = spec.bias;
        for (i, &v) in values.iter().enumerate() {
            logit += main_effects[i][v as usize];
        }
        for (p, &(i, j)) in pairs.iter().enumerate() {
            match &effects[p] {
                PairEffect::None => {}
                PairEffect::Lookup { cols, table } => {
                    logit += table[values[i] as usize * cols + values[j] as usize];
                }
                PairEffect::Latent { left, right } => {
                    let u = &left[values[i] as usize];
                    let w = &right[values[j] as usize];
                    logit += u.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        if spec.noise_level > 0.0 {
            logit += spec.noise_level * row_rng.normal();
        }
        let label = u8::from(row_rng.bernoulli(sigmoid_scalar(logit)));
        raw_rows.push(RawRow {
            label: label.to_string(),
            fields: values.iter().map(|v| v.to_string()).collect(),
        });
    }

    // Contiguous split; the rows are i.i.d. so no shuffle is needed.
    let (ft, fv, fe) = spec.fractions;
    for f in [ft, fv, fe] {
        if f < 0.0 {
            return Err(DataError::Domain(format!("split fraction must be >= 0, got {f}")));
        }
    }
    if (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(DataError::Domain("synthetic split fractions must sum to 1".into()));
    }
    let n = raw_rows.len();
    let n_train = (n as f64 * ft).floor() as usize;
    let n_val = ((n as f64 * fv).floor() as usize).min(n - n_train);
    let raw_test = raw_rows.split_off(n_train + n_val);
    let raw_validation = raw_rows.split_off(n_train);
    let raw_train = raw_rows;
    if raw_train.is_empty() {
        return Err(DataError::Domain("synthetic train split is empty".into()));
    }

    let vocab = Arc::new(Vocabulary::build(
        &raw_train,
        &schema,
        VocabularyOptions { min_frequency: spec.min_frequency, ..Default::default() },
    )?);
    let encode = |rows: &[RawRow], split: Split| -> Result<Dataset, DataError> {
        Ok(Dataset {
            schema: Arc::clone(&schema),
            vocabulary: Arc::clone(&vocab),
            split,
            instances: encode_dataset(rows, &schema, &vocab)?,
        })
    };
    Ok(SyntheticData {
        train: encode(&raw_train, Split::Train)?,
        validation: encode(&raw_validation, Split::Validation)?,
        test: encode(&raw_test, Split::Test)?,
        raw_train,
        raw_validation,
        raw_test,
        ground_truth: truth,
    })
}
