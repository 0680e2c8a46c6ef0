use serde::{Deserialize, Serialize};

use super::ModelError;

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-8
}
fn default_ln_eps() -> f64 {
    1e-5
}

/// Model hyperparameters. JSON keys follow the conventional short names:
/// `s1`/`s2` are the original/cross embedding sizes, `net` the MLP hidden
/// widths, `LN` the layer-normalization switch, `lr_o`/`lr_c`/`lr_a` the
/// learning rates for (original tables + network), cross tables, and
/// architecture parameters, `l2_o`/`l2_c` the embedding regularizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub s1: usize,
    pub s2: usize,
    #[serde(rename = "net")]
    pub mlp_layers: Vec<usize>,
    #[serde(rename = "LN")]
    pub layer_norm: bool,
    pub seed: u64,
    pub l2_o: f64,
    pub l2_c: f64,
    pub lr_o: f64,
    pub lr_c: f64,
    pub lr_a: f64,
    #[serde(rename = "eps", default = "default_adam_eps")]
    pub adam_eps: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_ln_eps")]
    pub ln_eps: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.s1 == 0 || self.s2 == 0 {
            return Err(ModelError::Config(format!("s1/s2 must be >= 1, got {}/{}", self.s1, self.s2)));
        }
        if self.mlp_layers.is_empty() {
            return Err(ModelError::Config("net must declare at least one hidden layer".into()));
        }
        if self.mlp_layers.iter().any(|&w| w == 0) {
            return Err(ModelError::Config("net layer widths must be >= 1".into()));
        }
        for (name, v) in [("lr_o", self.lr_o), ("lr_c", self.lr_c), ("lr_a", self.lr_a)] {
            if v <= 0.0 || !v.is_finite() {
                return Err(ModelError::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in [("l2_o", self.l2_o), ("l2_c", self.l2_c)] {
            if v < 0.0 || !v.is_finite() {
                return Err(ModelError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.adam_eps <= 0.0 || self.ln_eps <= 0.0 {
            return Err(ModelError::Config("eps values must be > 0".into()));
        }
        Ok(())
    }

    /// Width each pair occupies in the relaxed combination: candidates are
    /// zero-padded to the larger of the two embedding sizes.
    pub fn padded_width(&self) -> usize {
        self.s1.max(self.s2)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            s1: 8,
            s2: 8,
            mlp_layers: vec![64, 32],
            layer_norm: true,
            seed: 0,
            l2_o: 0.0,
            l2_c: 0.0,
            lr_o: 1e-3,
            lr_c: 1e-3,
            lr_a: 1e-3,
            adam_eps: default_adam_eps(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            ln_eps: default_ln_eps(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        ModelConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_zero_sizes_and_rates() {
        let mut c = ModelConfig::default();
        c.s1 = 0;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.mlp_layers = vec![];
        assert!(c.validate().is_err());
        let mut c = ModelConfig::default();
        c.lr_a = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_uses_short_names() {
        let c = ModelConfig::default();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"net\""));
        assert!(json.contains("\"LN\""));
        assert!(json.contains("\"eps\""));
        let back: ModelConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
