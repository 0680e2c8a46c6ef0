use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encode::{EncodedInstance, FieldPayload};
use super::schema::FeatureSchema;
use super::vocab::Vocabulary;
use super::DataError;
use crate::num::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Validation => write!(f, "validation"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// An encoded, immutable split. All instances conform to the shared schema
/// and vocabulary.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub schema: Arc<FeatureSchema>,
    pub vocabulary: Arc<Vocabulary>,
    pub split: Split,
    pub instances: Vec<EncodedInstance>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.instances.iter().map(|i| f64::from(i.label)).collect()
    }

    /// Content hash tying encoded artifacts to the exact schema and
    /// vocabulary they were produced with.
    pub fn schema_hash(&self) -> String {
        schema_vocab_hash(&self.schema, &self.vocabulary)
    }
}

/// SHA-256 over the canonical JSON of the schema and the full vocabulary.
pub fn schema_vocab_hash(schema: &FeatureSchema, vocab: &Vocabulary) -> String {
    let mut hasher = Sha256::new();
    hasher.update(schema.to_json().as_bytes());
    hasher.update(b"\x1e");
    hasher.update(vocab.to_json().as_bytes());
    hex::encode(hasher.finalize())
}

/// Disjoint seeded-shuffle partition into train/validation/test.
/// Fractions must be non-negative and sum to 1; sizes are
/// floor(n*f_train), floor(n*f_validation), remainder.
pub fn split_dataset(
    dataset: &Dataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset), DataError> {
    let (ft, fv, fe) = fractions;
    for f in [ft, fv, fe] {
        if f < 0.0 || !f.is_finite() {
            return Err(DataError::Domain(format!("split fraction must be >= 0, got {f}")));
        }
    }
    if (ft + fv + fe - 1.0).abs() > 1e-9 {
        return Err(DataError::Domain(format!("split fractions must sum to 1, got {}", ft + fv + fe)));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    Rng::seeded(seed).shuffle(&mut order);
    let n_train = (n as f64 * ft).floor() as usize;
    let n_val = ((n as f64 * fv).floor() as usize).min(n - n_train);
    let take = |range: std::ops::Range<usize>, split: Split| Dataset {
        schema: Arc::clone(&dataset.schema),
        vocabulary: Arc::clone(&dataset.vocabulary),
        split,
        instances: order[range].iter().map(|&i| dataset.instances[i].clone()).collect(),
    };
    Ok((
        take(0..n_train, Split::Train),
        take(n_train..n_train + n_val, Split::Validation),
        take(n_train + n_val..n, Split::Test),
    ))
}

// ---------------------------------------------------------------------------
// Encoded split file: magic, version, JSON header, then fixed-layout
// little-endian instance records (layout implied by the schema).
// ---------------------------------------------------------------------------

const DATA_MAGIC: &[u8; 8] = b"OPTDATA1";
const DATA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DataFileHeader {
    split: Split,
    n_instances: u64,
    schema_hash: String,
}

pub fn write_dataset_file(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(DATA_MAGIC)?;
    out.write_all(&DATA_VERSION.to_le_bytes())?;
    let header = serde_json::to_vec(&DataFileHeader {
        split: dataset.split,
        n_instances: dataset.len() as u64,
        schema_hash: dataset.schema_hash(),
    })?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    for inst in &dataset.instances {
        out.write_all(&[inst.label])?;
        for payload in &inst.fields {
            match payload {
                FieldPayload::Univalent(idx) => out.write_all(&idx.to_le_bytes())?,
                FieldPayload::Multivalent(ids) => {
                    out.write_all(&(ids.len() as u32).to_le_bytes())?;
                    for idx in ids {
                        out.write_all(&idx.to_le_bytes())?;
                    }
                }
                FieldPayload::Continuous { value, .. } => out.write_all(&value.to_le_bytes())?,
            }
        }
        for c in &inst.cross {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset_file(
    path: &Path,
    schema: Arc<FeatureSchema>,
    vocabulary: Arc<Vocabulary>,
) -> Result<Dataset, DataError> {
    use super::schema::FieldKind;
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != DATA_MAGIC {
        return Err(DataError::Domain(format!("{}: not an encoded dataset file", path.display())));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != DATA_VERSION {
        return Err(DataError::Domain(format!("unsupported dataset file version {version}")));
    }
    let mut len8 = [0u8; 8];
    input.read_exact(&mut len8)?;
    let header_len = u64::from_le_bytes(len8) as usize;
    let mut header_bytes = vec![0u8; header_len];
    input.read_exact(&mut header_bytes)?;
    let header: DataFileHeader = serde_json::from_slice(&header_bytes)?;
    let expected_hash = schema_vocab_hash(&schema, &vocabulary);
    if header.schema_hash != expected_hash {
        return Err(DataError::SchemaMismatch(format!(
            "{}: schema hash {} does not match the provided schema/vocabulary {}",
            path.display(),
            header.schema_hash,
            expected_hash
        )));
    }

    let read_u32 = |input: &mut dyn Read| -> Result<u32, DataError> {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let mut instances = Vec::with_capacity(header.n_instances as usize);
    for _ in 0..header.n_instances {
        let mut label = [0u8; 1];
        input.read_exact(&mut label)?;
        let mut fields = Vec::with_capacity(schema.num_fields());
        for spec in schema.fields() {
            let payload = match spec.kind {
                FieldKind::CategoricalUnivalent => FieldPayload::Univalent(read_u32(&mut input)?),
                FieldKind::CategoricalMultivalent => {
                    let n = read_u32(&mut input)? as usize;
                    let mut ids = Vec::with_capacity(n);
                    for _ in 0..n {
                        ids.push(read_u32(&mut input)?);
                    }
                    FieldPayload::Multivalent(ids)
                }
                FieldKind::Continuous => {
                    let mut b = [0u8; 8];
                    input.read_exact(&mut b)?;
                    FieldPayload::Continuous { value: f64::from_le_bytes(b), index: 0 }
                }
            };
            fields.push(payload);
        }
        let mut cross = Vec::with_capacity(schema.num_pairs());
        for _ in 0..schema.num_pairs() {
            cross.push(read_u32(&mut input)?);
        }
        instances.push(EncodedInstance { label: label[0], fields, cross });
    }
    Ok(Dataset { schema, vocabulary, split: header.split, instances })
}
