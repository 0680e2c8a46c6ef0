use serde::{Deserialize, Serialize};

use super::arch::{ArchParams, ArchitectureDecision, Method};
use super::combination::gumbel_softmax_weights;
use super::config::ModelConfig;
use super::embedding::{embed_original, EmbeddingTable, TableOwner};
use super::mlp::{Mlp, MlpState};
use super::ModelError;
use crate::data::{count_pairs, pair_list, Dataset, EncodedInstance};
use crate::num::{adam_step, sigmoid, AdamConfig, Parameter, Rng, Tensor2};

/// Everything needed to size a model against an encoded dataset, plus the
/// content hash that ties checkpoints to the exact schema and vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataDims {
    pub field_vocab_sizes: Vec<usize>,
    pub pair_vocab_sizes: Vec<usize>,
    pub schema_hash: String,
}

impl DataDims {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let m = dataset.schema.num_fields();
        DataDims {
            field_vocab_sizes: (0..m).map(|i| dataset.vocabulary.field_vocab_size(i)).collect(),
            pair_vocab_sizes: (0..dataset.vocabulary.num_pairs())
                .map(|p| dataset.vocabulary.pair_vocab_size(p))
                .collect(),
            schema_hash: dataset.schema_hash(),
        }
    }

    pub fn num_fields(&self) -> usize {
        self.field_vocab_sizes.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_vocab_sizes.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.num_fields();
        let expected = count_pairs(m).map_err(|e| ModelError::Config(e.to_string()))?;
        if expected != self.num_pairs() {
            return Err(ModelError::Config(format!(
                "{m} fields require {expected} pair vocabularies, got {}",
                self.num_pairs()
            )));
        }
        if self.field_vocab_sizes.iter().chain(&self.pair_vocab_sizes).any(|&s| s == 0) {
            return Err(ModelError::Config("vocabulary sizes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Relaxed: all candidates exist and mix under architecture weights.
/// Fixed: one method per pair, native widths, no architecture parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    Relaxed,
    Fixed(ArchitectureDecision),
}

/// Caches from one forward pass, consumed by `backward`.
pub struct ForwardState {
    e_orig: Vec<Tensor2>,
    e_cross: Vec<Option<Tensor2>>,
    e_fact: Vec<Option<Tensor2>>,
    weights: Option<Vec<[f64; 3]>>,
    tau: Option<f64>,
    mlp: MlpState,
}

#[derive(Clone, Debug)]
pub struct OptInterModel {
    config: ModelConfig,
    dims: DataDims,
    mode: Mode,
    original: Vec<EmbeddingTable>,
    cross: Vec<Option<EmbeddingTable>>,
    arch: Option<ArchParams>,
    mlp: Mlp,
}

impl OptInterModel {
    /// Search-stage model: every cross table allocated, architecture
    /// parameters at the uniform start.
    pub fn new_relaxed(dims: DataDims, config: ModelConfig) -> Result<Self, ModelError> {
        Self::build(dims, config, Mode::Relaxed)
    }

    /// Retrain-stage model under a discrete decision. Cross tables exist
    /// only for memorized pairs.
    pub fn new_fixed(
        dims: DataDims,
        config: ModelConfig,
        decision: ArchitectureDecision,
    ) -> Result<Self, ModelError> {
        Self::build(dims, config, Mode::Fixed(decision))
    }

    fn build(dims: DataDims, config: ModelConfig, mode: Mode) -> Result<Self, ModelError> {
        config.validate()?;
        dims.validate()?;
        if let Mode::Fixed(decision) = &mode {
            if decision.num_pairs() != dims.num_pairs() {
                return Err(ModelError::Config(format!(
                    "decision covers {} pairs, data has {}",
                    decision.num_pairs(),
                    dims.num_pairs()
                )));
            }
        }
        let m = dims.num_fields();
        let pairs = pair_list(m);
        let mut rng = Rng::seeded(config.seed);

        let mut original = Vec::with_capacity(m);
        for (i, &vocab) in dims.field_vocab_sizes.iter().enumerate() {
            original.push(EmbeddingTable::new(vocab, config.s1, TableOwner::Field(i), &mut rng)?);
        }
        let mut cross: Vec<Option<EmbeddingTable>> = Vec::with_capacity(pairs.len());
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let wanted = match &mode {
                Mode::Relaxed => true,
                Mode::Fixed(decision) => decision.method(p) == Method::Memorize,
            };
            cross.push(if wanted {
                Some(EmbeddingTable::new(
                    dims.pair_vocab_sizes[p],
                    config.s2,
                    TableOwner::Pair(i, j),
                    &mut rng,
                )?)
            } else {
                None
            });
        }
        let arch = match &mode {
            Mode::Relaxed => Some(ArchParams::uniform(pairs.len())),
            Mode::Fixed(_) => None,
        };
        let input_width = match &mode {
            Mode::Relaxed => m * config.s1 + pairs.len() * config.padded_width(),
            Mode::Fixed(decision) => m * config.s1 + fixed_extra_width(decision, &config),
        };
        let mlp = Mlp::new(input_width, &config.mlp_layers, config.layer_norm, config.ln_eps, &mut rng)?;
        Ok(OptInterModel { config, dims, mode, original, cross, arch, mlp })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn dims(&self) -> &DataDims {
        &self.dims
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn decision(&self) -> Option<&ArchitectureDecision> {
        match &self.mode {
            Mode::Fixed(d) => Some(d),
            Mode::Relaxed => None,
        }
    }

    pub fn is_relaxed(&self) -> bool {
        matches!(self.mode, Mode::Relaxed)
    }

    /// Positive architecture weights, relaxed mode only.
    pub fn alpha(&self) -> Option<Vec<[f64; 3]>> {
        self.arch.as_ref().map(ArchParams::alpha)
    }

    pub fn arch_params(&self) -> Option<&ArchParams> {
        self.arch.as_ref()
    }

    pub fn arch_params_mut(&mut self) -> Option<&mut ArchParams> {
        self.arch.as_mut()
    }

    pub fn mlp_input_width(&self) -> usize {
        self.mlp.input_width()
    }

    fn check_batch(&self, batch: &[EncodedInstance]) -> Result<(), ModelError> {
        if batch.is_empty() {
            return Err(ModelError::Config("empty batch".into()));
        }
        let m = self.dims.num_fields();
        let p = self.dims.num_pairs();
        for inst in batch {
            if inst.fields.len() != m || inst.cross.len() != p {
                return Err(ModelError::Config(format!(
                    "instance has {} fields / {} cross indices, model expects {m} / {p}",
                    inst.fields.len(),
                    inst.cross.len()
                )));
            }
        }
        Ok(())
    }

    /// Relaxed forward. `gumbel` carries one noise triple per pair (fresh
    /// per step during search); `None` reproduces the noise-free softmax.
    pub fn forward_relaxed(
        &self,
        batch: &[EncodedInstance],
        tau: f64,
        gumbel: Option<&[[f64; 3]]>,
    ) -> Result<(Tensor2, ForwardState), ModelError> {
        let (input, e_orig, e_cross, e_fact, weights) = self.assemble_relaxed(batch, tau, gumbel)?;
        let (logit, mlp_state) = self.mlp.forward(&input)?;
        Ok((
            logit,
            ForwardState {
                e_orig,
                e_cross,
                e_fact,
                weights: Some(weights),
                tau: Some(tau),
                mlp: mlp_state,
            },
        ))
    }

    /// The assembled classifier input [e_orig | e_b] in relaxed mode.
    pub fn relaxed_input(
        &self,
        batch: &[EncodedInstance],
        tau: f64,
        gumbel: Option<&[[f64; 3]]>,
    ) -> Result<Tensor2, ModelError> {
        Ok(self.assemble_relaxed(batch, tau, gumbel)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn assemble_relaxed(
        &self,
        batch: &[EncodedInstance],
        tau: f64,
        gumbel: Option<&[[f64; 3]]>,
    ) -> Result<
        (Tensor2, Vec<Tensor2>, Vec<Option<Tensor2>>, Vec<Option<Tensor2>>, Vec<[f64; 3]>),
        ModelError,
    > {
        let arch = self
            .arch
            .as_ref()
            .ok_or_else(|| ModelError::Config("relaxed forward on a fixed-mode model".into()))?;
        self.check_batch(batch)?;
        if let Some(g) = gumbel {
            if g.len() != self.dims.num_pairs() {
                return Err(ModelError::Config(format!(
                    "{} noise rows for {} pairs",
                    g.len(),
                    self.dims.num_pairs()
                )));
            }
        }
        let batch_size = batch.len();
        let (s1, s2) = (self.config.s1, self.config.s2);
        let d_pad = self.config.padded_width();
        let m = self.dims.num_fields();
        let pairs = pair_list(m);

        let e_orig = embed_original(batch, &self.original)?;
        let mut e_cross = Vec::with_capacity(pairs.len());
        let mut e_fact = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        let mut input = Tensor2::zeros(batch_size, m * s1 + pairs.len() * d_pad);

        for r in 0..batch_size {
            let row = input.row_mut(r);
            for i in 0..m {
                row[i * s1..(i + 1) * s1].copy_from_slice(e_orig[i].row(r));
            }
        }
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let table = self.cross[p].as_ref().expect("relaxed mode allocates all cross tables");
            let mut cross_p = Tensor2::zeros(batch_size, s2);
            for (r, inst) in batch.iter().enumerate() {
                cross_p.row_mut(r).copy_from_slice(table.row(inst.cross[p])?);
            }
            let mut fact_p = Tensor2::zeros(batch_size, s1);
            for r in 0..batch_size {
                let (ei, ej) = (e_orig[i].row(r), e_orig[j].row(r));
                for (slot, (a, b)) in fact_p.row_mut(r).iter_mut().zip(ei.iter().zip(ej)) {
                    *slot = a * b;
                }
            }
            let w = gumbel_softmax_weights(arch.logits_row(p), tau, gumbel.map(|g| g[p]))?;
            let offset = m * s1 + p * d_pad;
            for r in 0..batch_size {
                let out = &mut input.row_mut(r)[offset..offset + d_pad];
                for (d, slot) in out.iter_mut().enumerate() {
                    let mut v = 0.0;
                    if d < s2 {
                        v += w[0] * cross_p.get(r, d);
                    }
                    if d < s1 {
                        v += w[1] * fact_p.get(r, d);
                    }
                    // The naive candidate is the zero vector.
                    *slot = v;
                }
            }
            e_cross.push(Some(cross_p));
            e_fact.push(Some(fact_p));
            weights.push(w);
        }

        Ok((input, e_orig, e_cross, e_fact, weights))
    }

    /// Fixed forward: concatenates only the selected native-width
    /// embeddings after the original block; naive pairs contribute nothing.
    pub fn forward_fixed(
        &self,
        batch: &[EncodedInstance],
    ) -> Result<(Tensor2, ForwardState), ModelError> {
        let (input, e_orig, e_cross, e_fact) = self.assemble_fixed(batch)?;
        let (logit, mlp_state) = self.mlp.forward(&input)?;
        Ok((
            logit,
            ForwardState { e_orig, e_cross, e_fact, weights: None, tau: None, mlp: mlp_state },
        ))
    }

    /// The assembled classifier input [e_orig | e_b] in fixed mode.
    pub fn fixed_input(&self, batch: &[EncodedInstance]) -> Result<Tensor2, ModelError> {
        Ok(self.assemble_fixed(batch)?.0)
    }

    #[allow(clippy::type_complexity)]
    fn assemble_fixed(
        &self,
        batch: &[EncodedInstance],
    ) -> Result<(Tensor2, Vec<Tensor2>, Vec<Option<Tensor2>>, Vec<Option<Tensor2>>), ModelError>
    {
        let decision = match &self.mode {
            Mode::Fixed(d) => d,
            Mode::Relaxed => {
                return Err(ModelError::Config("fixed forward on a relaxed-mode model".into()))
            }
        };
        self.check_batch(batch)?;
        let batch_size = batch.len();
        let (s1, s2) = (self.config.s1, self.config.s2);
        let m = self.dims.num_fields();
        let pairs = pair_list(m);

        let e_orig = embed_original(batch, &self.original)?;
        let mut e_cross: Vec<Option<Tensor2>> = vec![None; pairs.len()];
        let mut e_fact: Vec<Option<Tensor2>> = vec![None; pairs.len()];
        let width = m * s1 + fixed_extra_width(decision, &self.config);
        let mut input = Tensor2::zeros(batch_size, width);
        for r in 0..batch_size {
            let row = input.row_mut(r);
            for i in 0..m {
                row[i * s1..(i + 1) * s1].copy_from_slice(e_orig[i].row(r));
            }
        }
        let mut offset = m * s1;
        for (p, &(i, j)) in pairs.iter().enumerate() {
            match decision.method(p) {
                Method::Memorize => {
                    let table = self.cross[p].as_ref().ok_or_else(|| {
                        ModelError::Config(format!("memorized pair ({i},{j}) has no cross table"))
                    })?;
                    let mut cross_p = Tensor2::zeros(batch_size, s2);
                    for (r, inst) in batch.iter().enumerate() {
                        let row = table.row(inst.cross[p])?;
                        cross_p.row_mut(r).copy_from_slice(row);
                        input.row_mut(r)[offset..offset + s2].copy_from_slice(row);
                    }
                    e_cross[p] = Some(cross_p);
                    offset += s2;
                }
                Method::Factorize => {
                    let mut fact_p = Tensor2::zeros(batch_size, s1);
                    for r in 0..batch_size {
                        let (ei, ej) = (e_orig[i].row(r), e_orig[j].row(r));
                        for (slot, (a, b)) in fact_p.row_mut(r).iter_mut().zip(ei.iter().zip(ej)) {
                            *slot = a * b;
                        }
                        input.row_mut(r)[offset..offset + s1].copy_from_slice(fact_p.row(r));
                    }
                    e_fact[p] = Some(fact_p);
                    offset += s1;
                }
                Method::Naive => {}
            }
        }

        Ok((input, e_orig, e_cross, e_fact))
    }

    /// Accumulates gradients for every parameter block from one forward
    /// state. Gradients flow to the MLP, to touched embedding rows, and (in
    /// relaxed mode) through the mixture weights to the architecture logits.
    pub fn backward(
        &mut self,
        batch: &[EncodedInstance],
        state: &ForwardState,
        dlogit: &Tensor2,
    ) -> Result<(), ModelError> {
        let dinput = self.mlp.backward(&state.mlp, dlogit)?;
        let batch_size = batch.len();
        let (s1, s2) = (self.config.s1, self.config.s2);
        let m = self.dims.num_fields();
        let pairs = pair_list(m);

        // Direct gradient of the original-embedding block.
        let mut d_orig: Vec<Tensor2> = (0..m)
            .map(|i| {
                let mut t = Tensor2::zeros(batch_size, s1);
                for r in 0..batch_size {
                    t.row_mut(r).copy_from_slice(&dinput.row(r)[i * s1..(i + 1) * s1]);
                }
                t
            })
            .collect();

        if self.is_relaxed() {
            let weights = state.weights.as_ref().ok_or_else(|| {
                ModelError::Config("relaxed backward needs a relaxed forward state".into())
            })?;
            let d_pad = self.config.padded_width();
            let tau = state.tau.expect("relaxed state carries tau");
            for (p, &(i, j)) in pairs.iter().enumerate() {
                let offset = m * s1 + p * d_pad;
                let w = weights[p];
                let cross_p = state.e_cross[p].as_ref().expect("relaxed caches cross");
                let fact_p = state.e_fact[p].as_ref().expect("relaxed caches fact");
                let table = self.cross[p].as_mut().expect("relaxed allocates cross tables");
                // dL/dp_k per candidate; the naive candidate is zero.
                let mut dp = [0.0f64; 3];
                let mut d_cross_row = vec![0.0; s2];
                for (r, inst) in batch.iter().enumerate() {
                    let d_eb = &dinput.row(r)[offset..offset + d_pad];
                    for d in 0..s2 {
                        dp[0] += d_eb[d] * cross_p.get(r, d);
                        d_cross_row[d] = w[0] * d_eb[d];
                    }
                    table.accumulate_row_grad(inst.cross[p], &d_cross_row)?;
                    let (ei, ej) = (state.e_orig[i].row(r), state.e_orig[j].row(r));
                    let di = d_orig[i].row_mut(r);
                    for d in 0..s1 {
                        dp[1] += d_eb[d] * fact_p.get(r, d);
                        di[d] += w[1] * d_eb[d] * ej[d];
                    }
                    let dj = d_orig[j].row_mut(r);
                    for d in 0..s1 {
                        dj[d] += w[1] * d_eb[d] * ei[d];
                    }
                }
                // Softmax backward through h = (logit + g) / tau.
                let dot = w[0] * dp[0] + w[1] * dp[1] + w[2] * dp[2];
                let arch = self.arch.as_mut().expect("relaxed mode has arch params");
                let grad_row = arch.logits.grad.row_mut(p);
                for k in 0..3 {
                    grad_row[k] += w[k] * (dp[k] - dot) / tau;
                }
            }
        } else {
            let decision = self.decision().expect("fixed mode carries a decision").clone();
            let mut offset = m * s1;
            for (p, &(i, j)) in pairs.iter().enumerate() {
                match decision.method(p) {
                    Method::Memorize => {
                        let table = self.cross[p].as_mut().expect("memorized pair has table");
                        for (r, inst) in batch.iter().enumerate() {
                            table.accumulate_row_grad(
                                inst.cross[p],
                                &dinput.row(r)[offset..offset + s2],
                            )?;
                        }
                        offset += s2;
                    }
                    Method::Factorize => {
                        for r in 0..batch_size {
                            let d_eb = &dinput.row(r)[offset..offset + s1];
                            let (ei, ej) = (state.e_orig[i].row(r), state.e_orig[j].row(r));
                            let di = d_orig[i].row_mut(r);
                            for d in 0..s1 {
                                di[d] += d_eb[d] * ej[d];
                            }
                            let dj = d_orig[j].row_mut(r);
                            for d in 0..s1 {
                                dj[d] += d_eb[d] * ei[d];
                            }
                        }
                        offset += s1;
                    }
                    Method::Naive => {}
                }
            }
        }

        for (i, table) in self.original.iter_mut().enumerate() {
            for (r, inst) in batch.iter().enumerate() {
                table.accumulate_field_grad(&inst.fields[i], d_orig[i].row(r))?;
            }
        }
        Ok(())
    }

    /// Predicted click probabilities. Relaxed mode evaluates the noise-free
    /// softmax mixture at the given temperature.
    pub fn predict(
        &self,
        batch: &[EncodedInstance],
        tau: Option<f64>,
    ) -> Result<Vec<f64>, ModelError> {
        let logits = match &self.mode {
            Mode::Relaxed => {
                let tau = tau.ok_or_else(|| {
                    ModelError::Config("relaxed prediction needs a temperature".into())
                })?;
                self.forward_relaxed(batch, tau, None)?.0
            }
            Mode::Fixed(_) => self.forward_fixed(batch)?.0,
        };
        Ok(sigmoid(&logits).data().to_vec())
    }

    /// Adam over selected parameter groups: `theta` covers embeddings and
    /// the network (lr_o / lr_c), `alpha` the architecture logits (lr_a).
    /// Called once per mini-batch after `backward`, so both gradients come
    /// from the same forward pass.
    pub fn adam_step_groups(&mut self, theta: bool, alpha: bool) -> Result<(), ModelError> {
        let base = AdamConfig {
            lr: self.config.lr_o,
            beta1: self.config.beta1,
            beta2: self.config.beta2,
            eps: self.config.adam_eps,
            l2: 0.0,
        };
        if theta {
            let orig_cfg = AdamConfig { l2: self.config.l2_o, ..base };
            for table in &mut self.original {
                adam_step(&mut table.param, orig_cfg)?;
            }
            let cross_cfg = AdamConfig { lr: self.config.lr_c, l2: self.config.l2_c, ..base };
            for table in self.cross.iter_mut().flatten() {
                adam_step(&mut table.param, cross_cfg)?;
            }
            for (_, p) in self.mlp.named_parameters_mut() {
                adam_step(p, base)?;
            }
        }
        if alpha {
            if let Some(arch) = self.arch.as_mut() {
                adam_step(&mut arch.logits, AdamConfig { lr: self.config.lr_a, ..base })?;
            }
        }
        Ok(())
    }

    pub fn adam_step_all(&mut self) -> Result<(), ModelError> {
        self.adam_step_groups(true, true)
    }

    pub fn zero_grads(&mut self) {
        for (_, p) in self.named_parameters_mut() {
            p.zero_grad();
        }
    }

    /// All parameter blocks in deterministic declaration order.
    pub fn named_parameters(&self) -> Vec<(String, &Parameter)> {
        let mut out = Vec::new();
        for (i, t) in self.original.iter().enumerate() {
            out.push((format!("orig_table.{i}"), &t.param));
        }
        let pairs = pair_list(self.dims.num_fields());
        for (p, t) in self.cross.iter().enumerate() {
            if let Some(t) = t {
                let (i, j) = pairs[p];
                out.push((format!("cross_table.{i}_{j}"), &t.param));
            }
        }
        if let Some(arch) = &self.arch {
            out.push(("alpha".into(), &arch.logits));
        }
        out.extend(self.mlp.named_parameters());
        out
    }

    pub fn named_parameters_mut(&mut self) -> Vec<(String, &mut Parameter)> {
        let mut out: Vec<(String, &mut Parameter)> = Vec::new();
        for (i, t) in self.original.iter_mut().enumerate() {
            out.push((format!("orig_table.{i}"), &mut t.param));
        }
        let pairs = pair_list(self.dims.field_vocab_sizes.len());
        for (p, t) in self.cross.iter_mut().enumerate() {
            if let Some(t) = t {
                let (i, j) = pairs[p];
                out.push((format!("cross_table.{i}_{j}"), &mut t.param));
            }
        }
        if let Some(arch) = &mut self.arch {
            out.push(("alpha".into(), &mut arch.logits));
        }
        out.extend(self.mlp.named_parameters_mut());
        out
    }

    /// Total trainable scalars reachable in the current mode.
    pub fn count_parameters(&self) -> usize {
        self.named_parameters().iter().map(|(_, p)| p.len()).sum()
    }

    /// Per-block (name, size) breakdown backing `count_parameters`.
    pub fn parameter_ledger(&self) -> Vec<(String, usize)> {
        self.named_parameters().into_iter().map(|(n, p)| (n, p.len())).collect()
    }

    /// Copies values for every block present in both models (matched by
    /// name; shapes must agree). Blocks unique to either side are skipped.
    pub fn copy_parameters_from(&mut self, other: &OptInterModel) -> Result<(), ModelError> {
        let source: std::collections::HashMap<String, &Parameter> =
            other.named_parameters().into_iter().collect();
        for (name, p) in self.named_parameters_mut() {
            if let Some(src) = source.get(&name) {
                if !src.value.same_shape(&p.value) {
                    return Err(ModelError::Config(format!(
                        "parameter {name}: shape {:?} vs {:?}",
                        src.value.shape(),
                        p.value.shape()
                    )));
                }
                p.value = src.value.clone();
            }
        }
        Ok(())
    }
}

/// Input width contributed by the combination block in fixed mode.
pub(super) fn fixed_extra_width(decision: &ArchitectureDecision, config: &ModelConfig) -> usize {
    decision
        .methods()
        .iter()
        .map(|m| match m {
            Method::Memorize => config.s2,
            Method::Factorize => config.s1,
            Method::Naive => 0,
        })
        .sum()
}
