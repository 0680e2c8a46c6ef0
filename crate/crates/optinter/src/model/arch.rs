use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::data::pair_list;
use crate::num::{Parameter, Tensor2};

/// Interaction modelling method for one feature pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Memorize,
    Factorize,
    Naive,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Memorize, Method::Factorize, Method::Naive];

    pub fn index(self) -> usize {
        match self {
            Method::Memorize => 0,
            Method::Factorize => 1,
            Method::Naive => 2,
        }
    }

    pub fn from_index(i: usize) -> Method {
        Method::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Memorize => "memorize",
            Method::Factorize => "factorize",
            Method::Naive => "naive",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Per-pair architecture weights over (memorize, factorize, naive).
/// Stored as free logits; alpha = exp(logit) keeps every weight positive
/// and log(alpha) is the logit itself.
#[derive(Clone, Debug)]
pub struct ArchParams {
    pub logits: Parameter,
}

impl ArchParams {
    /// Uniform start: all logits zero, i.e. p = 1/3 for each method.
    pub fn uniform(num_pairs: usize) -> Self {
        ArchParams { logits: Parameter::new(Tensor2::zeros(num_pairs, 3)) }
    }

    pub fn num_pairs(&self) -> usize {
        self.logits.value.rows()
    }

    pub fn logits_row(&self, pair: usize) -> [f64; 3] {
        let r = self.logits.value.row(pair);
        [r[0], r[1], r[2]]
    }

    /// Positive architecture weights alpha = exp(logits), row per pair.
    pub fn alpha(&self) -> Vec<[f64; 3]> {
        (0..self.num_pairs())
            .map(|p| {
                let r = self.logits.value.row(p);
                [r[0].exp(), r[1].exp(), r[2].exp()]
            })
            .collect()
    }
}

/// The discrete per-pair method assignment produced by search and consumed
/// by retrain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchitectureDecision {
    methods: Vec<Method>,
}

impl ArchitectureDecision {
    pub fn new(methods: Vec<Method>) -> Self {
        ArchitectureDecision { methods }
    }

    /// Same method for every pair (the fixed baselines).
    pub fn all(num_pairs: usize, method: Method) -> Self {
        ArchitectureDecision { methods: vec![method; num_pairs] }
    }

    pub fn methods(&self) -> &[Method] {
        &self.methods
    }

    pub fn num_pairs(&self) -> usize {
        self.methods.len()
    }

    pub fn method(&self, pair: usize) -> Method {
        self.methods[pair]
    }

    /// Counts as [memorize, factorize, naive].
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0usize; 3];
        for m in &self.methods {
            c[m.index()] += 1;
        }
        c
    }

    pub fn to_json(&self, num_fields: usize) -> Result<String, ModelError> {
        let pairs = pair_list(num_fields);
        if pairs.len() != self.methods.len() {
            return Err(ModelError::Config(format!(
                "decision covers {} pairs but {num_fields} fields give {}",
                self.methods.len(),
                pairs.len()
            )));
        }
        let map: BTreeMap<String, String> = pairs
            .iter()
            .zip(&self.methods)
            .map(|(&(i, j), m)| (format!("({i},{j})"), m.name().to_string()))
            .collect();
        let repr = DecisionRepr { version: 1, num_fields, pairs: map };
        Ok(serde_json::to_string_pretty(&repr)?)
    }

    pub fn from_json(text: &str) -> Result<(Self, usize), ModelError> {
        let repr: DecisionRepr = serde_json::from_str(text)?;
        if repr.version != 1 {
            return Err(ModelError::Config(format!("unsupported decision version {}", repr.version)));
        }
        let pairs = pair_list(repr.num_fields);
        let mut methods = Vec::with_capacity(pairs.len());
        for (i, j) in pairs {
            let key = format!("({i},{j})");
            let name = repr.pairs.get(&key).ok_or_else(|| {
                ModelError::Config(format!("decision file is missing pair {key}"))
            })?;
            let method = match name.as_str() {
                "memorize" => Method::Memorize,
                "factorize" => Method::Factorize,
                "naive" => Method::Naive,
                other => {
                    return Err(ModelError::Config(format!("unknown method {other:?} for pair {key}")))
                }
            };
            methods.push(method);
        }
        if repr.pairs.len() != methods.len() {
            return Err(ModelError::Config(format!(
                "decision file lists {} pairs, expected {}",
                repr.pairs.len(),
                methods.len()
            )));
        }
        Ok((ArchitectureDecision { methods }, repr.num_fields))
    }

    pub fn save(&self, num_fields: usize, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json(num_fields)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(Self, usize), ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct DecisionRepr {
    version: u32,
    num_fields: usize,
    pairs: BTreeMap<String, String>,
}

/// Per-pair argmax of alpha. Ties break by the fixed priority
/// memorize > factorize > naive.
pub fn derive_architecture(alpha: &[[f64; 3]]) -> ArchitectureDecision {
    let methods = alpha
        .iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..3 {
                if row[k] > row[best] {
                    best = k;
                }
            }
            Method::from_index(best)
        })
        .collect();
    ArchitectureDecision::new(methods)
}
