use super::network::OptInterModel;
use crate::data::EncodedInstance;
use crate::num::{sigmoid_bce_with_logits, DiffFunction, NumError};

/// Cross-entropy loss of the model on a fixed batch, viewed as a scalar
/// function of every parameter block. Used for end-to-end gradient checks.
/// Gumbel noise, when present, is frozen so the objective is deterministic.
pub struct BatchObjective<'a> {
    model: &'a mut OptInterModel,
    batch: &'a [EncodedInstance],
    labels: Vec<f64>,
    tau: Option<f64>,
    gumbel: Option<Vec<[f64; 3]>>,
}

impl<'a> BatchObjective<'a> {
    pub fn new(
        model: &'a mut OptInterModel,
        batch: &'a [EncodedInstance],
        tau: Option<f64>,
        gumbel: Option<Vec<[f64; 3]>>,
    ) -> Self {
        let labels = batch.iter().map(|i| f64::from(i.label)).collect();
        BatchObjective { model, batch, labels, tau, gumbel }
    }

    fn forward_loss(&mut self) -> Result<f64, NumError> {
        let logits = if self.model.is_relaxed() {
            let tau = self.tau.expect("relaxed objective needs a temperature");
            self.model
                .forward_relaxed(self.batch, tau, self.gumbel.as_deref())
                .map_err(|e| NumError::Domain(e.to_string()))?
                .0
        } else {
            self.model
                .forward_fixed(self.batch)
                .map_err(|e| NumError::Domain(e.to_string()))?
                .0
        };
        let (loss, _, _) = sigmoid_bce_with_logits(&logits, &self.labels)?;
        Ok(loss)
    }
}

impl DiffFunction for BatchObjective<'_> {
    fn block_names(&self) -> Vec<String> {
        self.model.named_parameters().into_iter().map(|(n, _)| n).collect()
    }

    fn block_len(&self, block: usize) -> usize {
        self.model.named_parameters()[block].1.len()
    }

    fn get_param(&self, block: usize, idx: usize) -> f64 {
        self.model.named_parameters()[block].1.value.data()[idx]
    }

    fn set_param(&mut self, block: usize, idx: usize, value: f64) {
        self.model.named_parameters_mut()[block].1.value.data_mut()[idx] = value;
    }

    fn eval(&mut self) -> Result<f64, NumError> {
        self.forward_loss()
    }

    fn grad(&mut self) -> Result<Vec<Vec<f64>>, NumError> {
        self.model.zero_grads();
        let wrap = |e: super::ModelError| NumError::Domain(e.to_string());
        let (logits, state) = if self.model.is_relaxed() {
            let tau = self.tau.expect("relaxed objective needs a temperature");
            self.model.forward_relaxed(self.batch, tau, self.gumbel.as_deref()).map_err(wrap)?
        } else {
            self.model.forward_fixed(self.batch).map_err(wrap)?
        };
        let (_, dlogits, _) = sigmoid_bce_with_logits(&logits, &self.labels)?;
        self.model.backward(self.batch, &state, &dlogits).map_err(wrap)?;
        let grads = self
            .model
            .named_parameters()
            .into_iter()
            .map(|(_, p)| p.grad.data().to_vec())
            .collect();
        self.model.zero_grads();
        Ok(grads)
    }
}
