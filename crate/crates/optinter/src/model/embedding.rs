use super::ModelError;
use crate::data::{EncodedInstance, FieldPayload};
use crate::num::{xavier_init, Parameter, Rng, Tensor2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableOwner {
    Field(usize),
    Pair(usize, usize),
}

impl std::fmt::Display for TableOwner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TableOwner::Field(i) => write!(f, "field {i}"),
            TableOwner::Pair(i, j) => write!(f, "pair ({i},{j})"),
        }
    }
}

/// Dense trainable lookup table, one row per vocabulary index.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub param: Parameter,
    owner: TableOwner,
}

impl EmbeddingTable {
    pub fn new(
        vocab_size: usize,
        dim: usize,
        owner: TableOwner,
        rng: &mut Rng,
    ) -> Result<Self, ModelError> {
        let value = xavier_init(vocab_size, dim, rng)?;
        Ok(EmbeddingTable { param: Parameter::new(value), owner })
    }

    pub fn vocab_size(&self) -> usize {
        self.param.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.param.value.cols()
    }

    pub fn owner(&self) -> TableOwner {
        self.owner
    }

    fn check_index(&self, idx: u32) -> Result<usize, ModelError> {
        let idx = idx as usize;
        if idx >= self.vocab_size() {
            return Err(ModelError::Lookup(format!(
                "index {idx} out of range for {} table of size {}",
                self.owner,
                self.vocab_size()
            )));
        }
        Ok(idx)
    }

    pub fn row(&self, idx: u32) -> Result<&[f64], ModelError> {
        Ok(self.param.value.row(self.check_index(idx)?))
    }

    /// Embeds one field payload into `out` (length = dim).
    /// Univalent: the row. Multivalent: mean of the value rows (empty set
    /// embeds to zero). Continuous: the single row scaled by the
    /// normalized value.
    pub fn embed_field(&self, payload: &FieldPayload, out: &mut [f64]) -> Result<(), ModelError> {
        debug_assert_eq!(out.len(), self.dim());
        match payload {
            FieldPayload::Univalent(idx) => out.copy_from_slice(self.row(*idx)?),
            FieldPayload::Multivalent(ids) => {
                out.fill(0.0);
                if !ids.is_empty() {
                    for idx in ids {
                        let row = self.row(*idx)?;
                        for (o, r) in out.iter_mut().zip(row) {
                            *o += r;
                        }
                    }
                    let inv = 1.0 / ids.len() as f64;
                    for o in out.iter_mut() {
                        *o *= inv;
                    }
                }
            }
            FieldPayload::Continuous { value, index } => {
                let row = self.row(*index)?;
                for (o, r) in out.iter_mut().zip(row) {
                    *o = r * value;
                }
            }
        }
        Ok(())
    }

    /// Scatters the gradient of one embedded field back onto the rows the
    /// forward pass touched.
    pub fn accumulate_field_grad(
        &mut self,
        payload: &FieldPayload,
        dout: &[f64],
    ) -> Result<(), ModelError> {
        match payload {
            FieldPayload::Univalent(idx) => {
                let idx = self.check_index(*idx)?;
                let row = self.param.grad.row_mut(idx);
                for (g, d) in row.iter_mut().zip(dout) {
                    *g += d;
                }
            }
            FieldPayload::Multivalent(ids) => {
                if ids.is_empty() {
                    return Ok(());
                }
                let inv = 1.0 / ids.len() as f64;
                for idx in ids {
                    let idx = self.check_index(*idx)?;
                    let row = self.param.grad.row_mut(idx);
                    for (g, d) in row.iter_mut().zip(dout) {
                        *g += d * inv;
                    }
                }
            }
            FieldPayload::Continuous { value, index } => {
                let idx = self.check_index(*index)?;
                let row = self.param.grad.row_mut(idx);
                for (g, d) in row.iter_mut().zip(dout) {
                    *g += d * value;
                }
            }
        }
        Ok(())
    }

    /// Gradient scatter for a plain index lookup (cross tables).
    pub fn accumulate_row_grad(&mut self, idx: u32, dout: &[f64]) -> Result<(), ModelError> {
        let idx = self.check_index(idx)?;
        let row = self.param.grad.row_mut(idx);
        for (g, d) in row.iter_mut().zip(dout) {
            *g += d;
        }
        Ok(())
    }
}

/// Embeds every original field of a batch: one B x dim tensor per field.
pub fn embed_original(
    batch: &[EncodedInstance],
    tables: &[EmbeddingTable],
) -> Result<Vec<Tensor2>, ModelError> {
    let mut out = Vec::with_capacity(tables.len());
    for (i, table) in tables.iter().enumerate() {
        let mut t = Tensor2::zeros(batch.len(), table.dim());
        for (r, inst) in batch.iter().enumerate() {
            table.embed_field(&inst.fields[i], t.row_mut(r))?;
        }
        out.push(t);
    }
    Ok(out)
}
