//! Mutual information between each feature interaction (its cross-product
//! value) and the click label: MI = H(y) - H(y | pair value), empirical
//! plug-in probabilities, natural log. Used to interpret which pairs a
//! searched architecture memorizes, factorizes, or drops.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::data::Dataset;
use crate::model::{ArchitectureDecision, Method};

#[derive(Debug, Error)]
pub enum MiError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Binary entropy in nats from a probability, with 0 ln 0 = 0.
fn entropy2(p: f64) -> f64 {
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    h
}

/// MI between a discrete pair value and a binary label, in nats.
pub fn mutual_information(pair_indices: &[u32], labels: &[u8]) -> Result<f64, MiError> {
    if pair_indices.is_empty() || pair_indices.len() != labels.len() {
        return Err(MiError::Domain(format!(
            "mutual_information: {} values vs {} labels",
            pair_indices.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(MiError::Domain("labels must be 0 or 1".into()));
    }
    let n = labels.len() as f64;
    let mut joint: HashMap<u32, [f64; 2]> = HashMap::new();
    let mut positives = 0.0;
    for (&v, &y) in pair_indices.iter().zip(labels) {
        joint.entry(v).or_insert([0.0, 0.0])[y as usize] += 1.0;
        positives += f64::from(y);
    }
    let h_label = entropy2(positives / n);
    let mut h_cond = 0.0;
    for counts in joint.values() {
        let n_v = counts[0] + counts[1];
        h_cond += (n_v / n) * entropy2(counts[1] / n_v);
    }
    // Plug-in MI is non-negative up to rounding; clamp the rounding away.
    Ok((h_label - h_cond).max(0.0))
}

/// Symmetric M x M grid of per-pair MI scores (diagonal unset).
#[derive(Clone, Debug)]
pub struct MiMatrix {
    num_fields: usize,
    pair_ids: Vec<(usize, usize)>,
    entries: Vec<f64>,
    label_entropy: f64,
}

impl MiMatrix {
    pub fn num_fields(&self) -> usize {
        self.num_fields
    }

    pub fn label_entropy(&self) -> f64 {
        self.label_entropy
    }

    /// Per-pair entries in canonical pair order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn pair_ids(&self) -> &[(usize, usize)] {
        &self.pair_ids
    }

    /// Symmetric access; the diagonal is unset.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        let key = (i.min(j), i.max(j));
        self.pair_ids.iter().position(|&p| p == key).map(|idx| self.entries[idx])
    }

    pub fn max_entry(&self) -> Option<(usize, usize, f64)> {
        self.entries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite MI"))
            .map(|(p, &v)| (self.pair_ids[p].0, self.pair_ids[p].1, v))
    }
}

/// MI for all pairs of an encoded dataset.
pub fn mi_matrix(dataset: &Dataset) -> Result<MiMatrix, MiError> {
    if dataset.is_empty() {
        return Err(MiError::Domain("mi_matrix on an empty dataset".into()));
    }
    let labels: Vec<u8> = dataset.instances.iter().map(|i| i.label).collect();
    let num_pairs = dataset.vocabulary.num_pairs();
    let mut entries = Vec::with_capacity(num_pairs);
    let mut indices = Vec::with_capacity(dataset.len());
    for p in 0..num_pairs {
        indices.clear();
        indices.extend(dataset.instances.iter().map(|inst| inst.cross[p]));
        entries.push(mutual_information(&indices, &labels)?);
    }
    let positives: f64 = labels.iter().map(|&y| f64::from(y)).sum();
    Ok(MiMatrix {
        num_fields: dataset.schema.num_fields(),
        pair_ids: dataset.vocabulary.pair_ids().to_vec(),
        entries,
        label_entropy: entropy2(positives / labels.len() as f64),
    })
}

/// Mean MI per method group. Methods with no assigned pairs are absent.
pub fn group_mean_mi(
    matrix: &MiMatrix,
    decision: &ArchitectureDecision,
) -> Result<BTreeMap<Method, f64>, MiError> {
    if decision.num_pairs() != matrix.entries.len() {
        return Err(MiError::Domain(format!(
            "decision covers {} pairs, matrix has {}",
            decision.num_pairs(),
            matrix.entries.len()
        )));
    }
    let mut sums: BTreeMap<Method, (f64, usize)> = BTreeMap::new();
    for (&mi, &method) in matrix.entries.iter().zip(decision.methods()) {
        let e = sums.entry(method).or_insert((0.0, 0));
        e.0 += mi;
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(m, (sum, n))| (m, sum / n as f64)).collect())
}

/// Writes `row,col,mi[,method]` CSV, one line per pair, full f64 precision.
pub fn export_heatmap(
    matrix: &MiMatrix,
    decision: Option<&ArchitectureDecision>,
    path: &Path,
) -> Result<(), MiError> {
    if let Some(d) = decision {
        if d.num_pairs() != matrix.entries.len() {
            return Err(MiError::Domain(format!(
                "decision covers {} pairs, matrix has {}",
                d.num_pairs(),
                matrix.entries.len()
            )));
        }
    }
    let mut out = String::new();
    out.push_str(if decision.is_some() { "row,col,mi,method\n" } else { "row,col,mi\n" });
    for (p, (&(i, j), &mi)) in matrix.pair_ids.iter().zip(&matrix.entries).enumerate() {
        match decision {
            Some(d) => out.push_str(&format!("{i},{j},{mi},{}\n", d.method(p).name())),
            None => out.push_str(&format!("{i},{j},{mi}\n")),
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
