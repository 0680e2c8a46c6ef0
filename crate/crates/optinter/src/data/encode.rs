use serde::{Deserialize, Serialize};

use super::csvio::RawRow;
use super::schema::{FeatureSchema, FieldKind};
use super::vocab::{normalize_continuous, FieldVocab, Vocabulary};
use super::DataError;

/// Index-encoded payload of one original field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FieldPayload {
    Univalent(u32),
    Multivalent(Vec<u32>),
    /// Normalized value in [0, 1] plus the field's fixed embedding row.
    Continuous { value: f64, index: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedInstance {
    pub label: u8,
    pub fields: Vec<FieldPayload>,
    /// One cross-product index per unordered pair, canonical pair order.
    pub cross: Vec<u32>,
}

/// Encodes one raw row against a vocabulary built from the training split.
/// Unseen values (original or pair) resolve to the OOV index. `row_number`
/// is 1-based and only used in error messages.
pub fn encode_instance(
    row: &RawRow,
    schema: &FeatureSchema,
    vocab: &Vocabulary,
    row_number: usize,
) -> Result<EncodedInstance, DataError> {
    let m = schema.num_fields();
    if row.fields.len() != m {
        return Err(DataError::Format {
            row: row_number,
            msg: format!("{} fields, schema declares {m}", row.fields.len()),
        });
    }
    let label: u8 = match row.label.trim() {
        "0" => 0,
        "1" => 1,
        other => {
            return Err(DataError::Format {
                row: row_number,
                msg: format!("label must be 0 or 1, got {other:?}"),
            })
        }
    };

    let mut fields = Vec::with_capacity(m);
    for (i, raw) in row.fields.iter().enumerate() {
        let payload = match schema.field(i).kind {
            FieldKind::CategoricalUnivalent => FieldPayload::Univalent(vocab.lookup_field(i, raw)),
            FieldKind::CategoricalMultivalent => FieldPayload::Multivalent(
                raw.split('|')
                    .filter(|s| !s.is_empty())
                    .map(|v| vocab.lookup_field(i, v))
                    .collect(),
            ),
            FieldKind::Continuous => {
                let v: f64 = raw.parse().map_err(|_| DataError::Format {
                    row: row_number,
                    msg: format!("field {:?}: cannot parse {raw:?} as a number", schema.field(i).name),
                })?;
                let (min, max) = match vocab.field(i) {
                    FieldVocab::Continuous { min, max } => (*min, *max),
                    _ => {
                        return Err(DataError::SchemaMismatch(format!(
                            "field {:?} is continuous in the schema but not in the vocabulary",
                            schema.field(i).name
                        )))
                    }
                };
                FieldPayload::Continuous { value: normalize_continuous(v, min, max), index: 0 }
            }
        };
        fields.push(payload);
    }

    let tokens: Vec<String> = (0..m).map(|i| vocab.token(schema, i, &row.fields[i])).collect();
    let cross = vocab
        .pair_ids()
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| vocab.lookup_pair(p, (tokens[i].as_str(), tokens[j].as_str())))
        .collect();

    Ok(EncodedInstance { label, fields, cross })
}

/// Encodes a batch of rows, reporting the first malformed row.
pub fn encode_dataset(
    rows: &[RawRow],
    schema: &FeatureSchema,
    vocab: &Vocabulary,
) -> Result<Vec<EncodedInstance>, DataError> {
    rows.iter()
        .enumerate()
        .map(|(r, row)| encode_instance(row, schema, vocab, r + 1))
        .collect()
}
