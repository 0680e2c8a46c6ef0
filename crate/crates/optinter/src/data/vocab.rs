use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::csvio::RawRow;
use super::schema::{FeatureSchema, FieldKind};
use super::DataError;

/// Index reserved for out-of-vocabulary values in every field and pair.
pub const OOV_INDEX: u32 = 0;

#[derive(Clone, Debug)]
pub enum FieldVocab {
    /// Values with training frequency >= min_frequency, in first-appearance
    /// order. entries[k] owns index k+1; index 0 is OOV.
    Categorical { entries: Vec<String>, index: HashMap<String, u32> },
    /// Continuous fields own a single embedding row (index 0) and carry the
    /// training-split range used for min-max normalization.
    Continuous { min: f64, max: f64 },
}

#[derive(Clone, Debug)]
pub enum PairVocab {
    /// Exact dictionary over raw value pairs, same indexing discipline as
    /// categorical fields.
    Exact { entries: Vec<(String, String)>, index: HashMap<(String, String), u32> },
    /// Hashing fallback for memory-bounded runs: the pair key hashes into a
    /// fixed number of buckets and no OOV slot exists.
    Hashed { buckets: u32 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VocabularyOptions {
    /// Values appearing fewer than this many times collapse to OOV.
    pub min_frequency: u64,
    /// Equal-width buckets used when a continuous field enters a
    /// cross-product.
    pub continuous_buckets: u32,
    /// When set, pair vocabularies hash into this many buckets instead of
    /// keeping exact dictionaries.
    pub pair_hash_buckets: Option<u32>,
}

impl Default for VocabularyOptions {
    fn default() -> Self {
        VocabularyOptions { min_frequency: 1, continuous_buckets: 10, pair_hash_buckets: None }
    }
}

/// Value-to-index maps for all original fields and all unordered field
/// pairs, built from the training split only.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    options: VocabularyOptions,
    fields: Vec<FieldVocab>,
    pairs: Vec<PairVocab>,
    pair_ids: Vec<(usize, usize)>,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Canonical per-field token used to form cross-product keys.
/// Univalent: the raw value. Multivalent: the sorted, deduplicated value set
/// joined by '|'. Continuous: the equal-width bucket of the normalized value.
fn cross_token(kind: FieldKind, raw: &str, vocab: &FieldVocab, buckets: u32) -> String {
    match kind {
        FieldKind::CategoricalUnivalent => raw.to_string(),
        FieldKind::CategoricalMultivalent => {
            let mut vals: Vec<&str> = raw.split('|').filter(|s| !s.is_empty()).collect();
            vals.sort_unstable();
            vals.dedup();
            vals.join("|")
        }
        FieldKind::Continuous => {
            let (min, max) = match vocab {
                FieldVocab::Continuous { min, max } => (*min, *max),
                _ => unreachable!("continuous field must carry continuous vocab"),
            };
            let v: f64 = raw.parse().unwrap_or(0.0);
            let norm = normalize_continuous(v, min, max);
            let b = ((norm * f64::from(buckets)) as u32).min(buckets.saturating_sub(1));
            format!("b{b}")
        }
    }
}

/// Min-max normalization with clamping to the training range.
pub(crate) fn normalize_continuous(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

impl Vocabulary {
    /// Builds field and pair vocabularies from training rows.
    pub fn build(
        rows: &[RawRow],
        schema: &FeatureSchema,
        options: VocabularyOptions,
    ) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptyInput);
        }
        if options.continuous_buckets == 0 {
            return Err(DataError::Domain("continuous_buckets must be >= 1".into()));
        }
        if let Some(b) = options.pair_hash_buckets {
            if b == 0 {
                return Err(DataError::Domain("pair_hash_buckets must be >= 1".into()));
            }
        }
        let m = schema.num_fields();
        for (r, row) in rows.iter().enumerate() {
            if row.fields.len() != m {
                return Err(DataError::SchemaMismatch(format!(
                    "row {} has {} fields, schema declares {m}",
                    r + 1,
                    row.fields.len()
                )));
            }
        }

        // Pass 1: per-field value frequencies and continuous ranges.
        let mut field_counts: Vec<HashMap<String, u64>> = vec![HashMap::new(); m];
        let mut cont_range: Vec<Option<(f64, f64)>> = vec![None; m];
        for (r, row) in rows.iter().enumerate() {
            for (i, raw) in row.fields.iter().enumerate() {
                match schema.field(i).kind {
                    FieldKind::CategoricalUnivalent => {
                        *field_counts[i].entry(raw.clone()).or_insert(0) += 1;
                    }
                    FieldKind::CategoricalMultivalent => {
                        for v in raw.split('|').filter(|s| !s.is_empty()) {
                            *field_counts[i].entry(v.to_string()).or_insert(0) += 1;
                        }
                    }
                    FieldKind::Continuous => {
                        let v: f64 = raw.parse().map_err(|_| DataError::Format {
                            row: r + 1,
                            msg: format!("field {:?}: cannot parse {raw:?} as a number", schema.field(i).name),
                        })?;
                        let e = cont_range[i].get_or_insert((v, v));
                        e.0 = e.0.min(v);
                        e.1 = e.1.max(v);
                    }
                }
            }
        }

        // Pass 2: assign field indices in first-appearance order.
        let mut fields: Vec<FieldVocab> = Vec::with_capacity(m);
        for i in 0..m {
            match schema.field(i).kind {
                FieldKind::Continuous => {
                    let (min, max) = cont_range[i].expect("range set in pass 1");
                    fields.push(FieldVocab::Continuous { min, max });
                }
                _ => fields.push(FieldVocab::Categorical { entries: Vec::new(), index: HashMap::new() }),
            }
        }
        for row in rows {
            for (i, raw) in row.fields.iter().enumerate() {
                let counts = &field_counts[i];
                if let FieldVocab::Categorical { entries, index } = &mut fields[i] {
                    let mut admit = |v: &str| {
                        if counts[v] >= options.min_frequency && !index.contains_key(v) {
                            entries.push(v.to_string());
                            index.insert(v.to_string(), entries.len() as u32);
                        }
                    };
                    match schema.field(i).kind {
                        FieldKind::CategoricalUnivalent => admit(raw),
                        FieldKind::CategoricalMultivalent => {
                            for v in raw.split('|').filter(|s| !s.is_empty()) {
                                admit(v);
                            }
                        }
                        FieldKind::Continuous => unreachable!(),
                    }
                }
            }
        }

        // Pass 3/4: pair key frequencies, then indices, in the canonical
        // pair order.
        let pair_ids = schema.pairs();
        let mut pairs: Vec<PairVocab> = Vec::with_capacity(pair_ids.len());
        if let Some(buckets) = options.pair_hash_buckets {
            pairs.resize_with(pair_ids.len(), || PairVocab::Hashed { buckets });
        } else {
            let tokens: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    (0..m)
                        .map(|i| {
                            cross_token(
                                schema.field(i).kind,
                                &row.fields[i],
                                &fields[i],
                                options.continuous_buckets,
                            )
                        })
                        .collect()
                })
                .collect();
            for &(i, j) in &pair_ids {
                let mut counts: HashMap<(String, String), u64> = HashMap::new();
                for row_tokens in &tokens {
                    let key = (row_tokens[i].clone(), row_tokens[j].clone());
                    *counts.entry(key).or_insert(0) += 1;
                }
                let mut entries = Vec::new();
                let mut index = HashMap::new();
                for row_tokens in &tokens {
                    let key = (row_tokens[i].clone(), row_tokens[j].clone());
                    if counts[&key] >= options.min_frequency && !index.contains_key(&key) {
                        entries.push(key.clone());
                        index.insert(key, entries.len() as u32);
                    }
                }
                pairs.push(PairVocab::Exact { entries, index });
            }
        }

        Ok(Vocabulary { options, fields, pairs, pair_ids })
    }

    pub fn options(&self) -> VocabularyOptions {
        self.options
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair_ids(&self) -> &[(usize, usize)] {
        &self.pair_ids
    }

    pub fn field(&self, i: usize) -> &FieldVocab {
        &self.fields[i]
    }

    /// Dense vocabulary size including the OOV slot (1 for continuous).
    pub fn field_vocab_size(&self, i: usize) -> usize {
        match &self.fields[i] {
            FieldVocab::Categorical { entries, .. } => entries.len() + 1,
            FieldVocab::Continuous { .. } => 1,
        }
    }

    pub fn pair_vocab_size(&self, p: usize) -> usize {
        match &self.pairs[p] {
            PairVocab::Exact { entries, .. } => entries.len() + 1,
            PairVocab::Hashed { buckets } => *buckets as usize,
        }
    }

    pub fn lookup_field(&self, i: usize, value: &str) -> u32 {
        match &self.fields[i] {
            FieldVocab::Categorical { index, .. } => index.get(value).copied().unwrap_or(OOV_INDEX),
            FieldVocab::Continuous { .. } => 0,
        }
    }

    pub fn lookup_pair(&self, p: usize, key: (&str, &str)) -> u32 {
        match &self.pairs[p] {
            PairVocab::Exact { index, .. } => {
                // HashMap<(String,String)> cannot be probed with (&str,&str);
                // pair lookups are not on the hot path at this scale.
                index.get(&(key.0.to_string(), key.1.to_string())).copied().unwrap_or(OOV_INDEX)
            }
            PairVocab::Hashed { buckets } => {
                let mut bytes = Vec::with_capacity(key.0.len() + key.1.len() + 1);
                bytes.extend_from_slice(key.0.as_bytes());
                bytes.push(0x1f);
                bytes.extend_from_slice(key.1.as_bytes());
                (fnv1a64(&bytes) % u64::from(*buckets)) as u32
            }
        }
    }

    /// Per-field token used for cross-product keys (public for tests and
    /// the encoder).
    pub fn token(&self, schema: &FeatureSchema, i: usize, raw: &str) -> String {
        cross_token(schema.field(i).kind, raw, &self.fields[i], self.options.continuous_buckets)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&VocabRepr::from(self)).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let repr: VocabRepr = serde_json::from_str(text)?;
        repr.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

// ---------------------------------------------------------------------------
// Persisted representation: versioned, explicit (name, value, index) triples,
// deterministic byte-for-byte because entries are stored in index order.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    version: u32,
    min_frequency: u64,
    continuous_buckets: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pair_hash_buckets: Option<u32>,
    fields: Vec<FieldRepr>,
    pairs: Vec<PairRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FieldRepr {
    Continuous { min: f64, max: f64 },
    Categorical { entries: Vec<String> },
}

#[derive(Serialize, Deserialize)]
struct PairRepr {
    i: usize,
    j: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    entries: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    buckets: Option<u32>,
}

impl From<&Vocabulary> for VocabRepr {
    fn from(v: &Vocabulary) -> Self {
        VocabRepr {
            version: 1,
            min_frequency: v.options.min_frequency,
            continuous_buckets: v.options.continuous_buckets,
            pair_hash_buckets: v.options.pair_hash_buckets,
            fields: v
                .fields
                .iter()
                .map(|f| match f {
                    FieldVocab::Categorical { entries, .. } => {
                        FieldRepr::Categorical { entries: entries.clone() }
                    }
                    FieldVocab::Continuous { min, max } => FieldRepr::Continuous { min: *min, max: *max },
                })
                .collect(),
            pairs: v
                .pairs
                .iter()
                .zip(&v.pair_ids)
                .map(|(p, &(i, j))| match p {
                    PairVocab::Exact { entries, .. } => {
                        PairRepr { i, j, entries: Some(entries.clone()), buckets: None }
                    }
                    PairVocab::Hashed { buckets } => PairRepr { i, j, entries: None, buckets: Some(*buckets) },
                })
                .collect(),
        }
    }
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = DataError;
    fn try_from(repr: VocabRepr) -> Result<Self, DataError> {
        if repr.version != 1 {
            return Err(DataError::Domain(format!("unsupported vocabulary version {}", repr.version)));
        }
        let fields = repr
            .fields
            .into_iter()
            .map(|f| match f {
                FieldRepr::Categorical { entries } => {
                    let index = entries
                        .iter()
                        .enumerate()
                        .map(|(k, v)| (v.clone(), k as u32 + 1))
                        .collect();
                    FieldVocab::Categorical { entries, index }
                }
                FieldRepr::Continuous { min, max } => FieldVocab::Continuous { min, max },
            })
            .collect();
        let mut pair_ids = Vec::with_capacity(repr.pairs.len());
        let pairs = repr
            .pairs
            .into_iter()
            .map(|p| {
                pair_ids.push((p.i, p.j));
                match (p.entries, p.buckets) {
                    (Some(entries), None) => {
                        let index = entries
                            .iter()
                            .enumerate()
                            .map(|(k, v)| (v.clone(), k as u32 + 1))
                            .collect();
                        Ok(PairVocab::Exact { entries, index })
                    }
                    (None, Some(buckets)) => Ok(PairVocab::Hashed { buckets }),
                    _ => Err(DataError::Domain("pair entry must carry entries xor buckets".into())),
                }
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        Ok(Vocabulary {
            options: VocabularyOptions {
                min_frequency: repr.min_frequency,
                continuous_buckets: repr.continuous_buckets,
                pair_hash_buckets: repr.pair_hash_buckets,
            },
            fields,
            pairs,
            pair_ids,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{FieldSpec, FieldKind};

    fn schema2() -> FeatureSchema {
        FeatureSchema::new(vec![
            FieldSpec { name: "u".into(), kind: FieldKind::CategoricalUnivalent },
            FieldSpec { name: "v".into(), kind: FieldKind::CategoricalUnivalent },
        ])
        .unwrap()
    }

    fn row(label: &str, fields: &[&str]) -> RawRow {
        RawRow { label: label.into(), fields: fields.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn threshold_collapses_rare_values_to_oov() {
        // "a" appears 25 times, "b" 3 times; with min_frequency 20 only "a"
        // earns an index.
        let mut rows: Vec<RawRow> = (0..25).map(|_| row("1", &["a", "x"])).collect();
        rows.extend((0..3).map(|_| row("0", &["b", "x"])));
        let vocab = Vocabulary::build(
            &rows,
            &schema2(),
            VocabularyOptions { min_frequency: 20, ..Default::default() },
        )
        .unwrap();
        assert_eq!(vocab.lookup_field(0, "a"), 1);
        assert_eq!(vocab.lookup_field(0, "b"), OOV_INDEX);
        assert_eq!(vocab.field_vocab_size(0), 2);
    }

    #[test]
    fn min_frequency_one_keeps_every_seen_value() {
        let rows = vec![row("0", &["a", "x"]), row("1", &["b", "y"])];
        let vocab = Vocabulary::build(&rows, &schema2(), VocabularyOptions::default()).unwrap();
        assert_eq!(vocab.lookup_field(0, "a"), 1);
        assert_eq!(vocab.lookup_field(0, "b"), 2);
        assert_eq!(vocab.lookup_field(0, "unseen"), OOV_INDEX);
    }

    #[test]
    fn twenty_six_fields_give_325_pair_vocabularies() {
        let fields: Vec<FieldSpec> = (0..26)
            .map(|i| FieldSpec { name: format!("f{i}"), kind: FieldKind::CategoricalUnivalent })
            .collect();
        let schema = FeatureSchema::new(fields).unwrap();
        let rows = vec![RawRow { label: "0".into(), fields: vec!["v".into(); 26] }];
        let vocab = Vocabulary::build(&rows, &schema, VocabularyOptions::default()).unwrap();
        assert_eq!(vocab.num_pairs(), 325);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            Vocabulary::build(&[], &schema2(), VocabularyOptions::default()),
            Err(DataError::EmptyInput)
        ));
    }

    #[test]
    fn column_mismatch_rejected() {
        let rows = vec![row("0", &["a"])];
        assert!(matches!(
            Vocabulary::build(&rows, &schema2(), VocabularyOptions::default()),
            Err(DataError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn pair_lookup_uses_exact_value_pairs() {
        let rows = vec![row("0", &["a", "x"]), row("1", &["a", "y"]), row("0", &["b", "x"])];
        let vocab = Vocabulary::build(&rows, &schema2(), VocabularyOptions::default()).unwrap();
        assert_eq!(vocab.lookup_pair(0, ("a", "x")), 1);
        assert_eq!(vocab.lookup_pair(0, ("a", "y")), 2);
        assert_eq!(vocab.lookup_pair(0, ("b", "x")), 3);
        assert_eq!(vocab.lookup_pair(0, ("b", "y")), OOV_INDEX);
        assert_eq!(vocab.pair_vocab_size(0), 4);
    }

    #[test]
    fn multivalent_token_is_sorted_and_deduplicated() {
        let schema = FeatureSchema::new(vec![
            FieldSpec { name: "tags".into(), kind: FieldKind::CategoricalMultivalent },
            FieldSpec { name: "v".into(), kind: FieldKind::CategoricalUnivalent },
        ])
        .unwrap();
        let rows = vec![row("0", &["b|a|b", "x"])];
        let vocab = Vocabulary::build(&rows, &schema, VocabularyOptions::default()).unwrap();
        assert_eq!(vocab.token(&schema, 0, "b|a|b"), "a|b");
        assert_eq!(vocab.token(&schema, 0, "a|b"), "a|b");
        assert_eq!(vocab.lookup_pair(0, ("a|b", "x")), 1);
    }

    #[test]
    fn continuous_token_buckets_by_training_range() {
        let schema = FeatureSchema::new(vec![
            FieldSpec { name: "price".into(), kind: FieldKind::Continuous },
            FieldSpec { name: "v".into(), kind: FieldKind::CategoricalUnivalent },
        ])
        .unwrap();
        let rows = vec![row("0", &["0.0", "x"]), row("1", &["10.0", "x"])];
        let vocab = Vocabulary::build(&rows, &schema, VocabularyOptions::default()).unwrap();
        assert_eq!(vocab.token(&schema, 0, "0.0"), "b0");
        assert_eq!(vocab.token(&schema, 0, "5.0"), "b5");
        // The maximum clamps into the last bucket.
        assert_eq!(vocab.token(&schema, 0, "10.0"), "b9");
        assert_eq!(vocab.token(&schema, 0, "999.0"), "b9");
    }

    #[test]
    fn hashed_pairs_stay_inside_bucket_range() {
        let rows = vec![row("0", &["a", "x"]), row("1", &["b", "y"])];
        let vocab = Vocabulary::build(
            &rows,
            &schema2(),
            VocabularyOptions { pair_hash_buckets: Some(8), ..Default::default() },
        )
        .unwrap();
        assert_eq!(vocab.pair_vocab_size(0), 8);
        for key in [("a", "x"), ("b", "y"), ("zz", "qq")] {
            assert!(vocab.lookup_pair(0, key) < 8);
        }
        // Deterministic.
        assert_eq!(vocab.lookup_pair(0, ("a", "x")), vocab.lookup_pair(0, ("a", "x")));
    }

    #[test]
    fn json_round_trip_preserves_lookups() {
        let rows = vec![row("0", &["a", "x"]), row("1", &["b", "y"]), row("0", &["a", "y"])];
        let vocab = Vocabulary::build(&rows, &schema2(), VocabularyOptions::default()).unwrap();
        let back = Vocabulary::from_json(&vocab.to_json()).unwrap();
        for v in ["a", "b", "zz"] {
            assert_eq!(vocab.lookup_field(0, v), back.lookup_field(0, v));
        }
        for key in [("a", "x"), ("a", "y"), ("b", "y"), ("b", "x")] {
            assert_eq!(vocab.lookup_pair(0, key), back.lookup_pair(0, key));
        }
        assert_eq!(vocab.to_json(), back.to_json());
    }
}
