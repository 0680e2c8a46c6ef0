use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    #[serde(rename = "categorical-univalent")]
    CategoricalUnivalent,
    #[serde(rename = "categorical-multivalent")]
    CategoricalMultivalent,
    #[serde(rename = "continuous")]
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
}

/// Ordered field declarations. Field order is fixed and identical across
/// train/validation/test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaRepr", into = "SchemaRepr")]
pub struct FeatureSchema {
    fields: Vec<FieldSpec>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    version: u32,
    fields: Vec<FieldSpec>,
}

impl TryFrom<SchemaRepr> for FeatureSchema {
    type Error = String;
    fn try_from(repr: SchemaRepr) -> Result<Self, String> {
        if repr.version != 1 {
            return Err(format!("unsupported schema version {}", repr.version));
        }
        FeatureSchema::new(repr.fields).map_err(|e| e.to_string())
    }
}

impl From<FeatureSchema> for SchemaRepr {
    fn from(s: FeatureSchema) -> SchemaRepr {
        SchemaRepr { version: 1, fields: s.fields }
    }
}

impl FeatureSchema {
    pub fn new(fields: Vec<FieldSpec>) -> Result<Self, DataError> {
        if fields.len() < 2 {
            return Err(DataError::Domain(format!(
                "a schema needs at least 2 fields, got {}",
                fields.len()
            )));
        }
        let mut seen = HashSet::new();
        for f in &fields {
            if !seen.insert(f.name.as_str()) {
                return Err(DataError::Domain(format!("duplicate field name {:?}", f.name)));
            }
        }
        Ok(FeatureSchema { fields })
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn field(&self, i: usize) -> &FieldSpec {
        &self.fields[i]
    }

    pub fn num_pairs(&self) -> usize {
        self.fields.len() * (self.fields.len() - 1) / 2
    }

    /// All unordered pairs (i, j), i < j, in the canonical order
    /// (0,1), (0,2), ..., (M-2,M-1).
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pair_list(self.fields.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Number of unordered second-order interactions: M(M-1)/2.
pub fn count_pairs(m: usize) -> Result<usize, DataError> {
    if m < 2 {
        return Err(DataError::Domain(format!("need at least 2 fields for pairs, got {m}")));
    }
    Ok(m * (m - 1) / 2)
}

pub fn pair_list(m: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(m.saturating_mul(m.saturating_sub(1)) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((i, j));
        }
    }
    pairs
}
