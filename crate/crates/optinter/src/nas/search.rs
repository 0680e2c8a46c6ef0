use serde::{Deserialize, Serialize};

use super::gumbel::sample_gumbel_rows;
use super::schedule::TemperatureSchedule;
use super::SearchError;
use crate::data::{Dataset, EncodedInstance};
use crate::metrics::{auc, logloss};
use crate::model::{derive_architecture, ArchitectureDecision, Method, OptInterModel};
use crate::num::{sigmoid_bce_with_logits, Rng};

fn default_gumbel_on() -> bool {
    true
}

/// Mini-batch loop settings shared by search and retrain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLoopConfig {
    #[serde(rename = "bs")]
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive non-improving validation evaluations tolerated before
    /// stopping (0 stops at the first one).
    pub patience: usize,
    /// Evaluate every this many epochs.
    pub eval_every: usize,
    pub seed: u64,
    /// Search only: add Gumbel noise inside the softmax. Off reproduces the
    /// plain softmax(log alpha / tau) relaxation.
    #[serde(default = "default_gumbel_on")]
    pub gumbel_on: bool,
}

impl TrainLoopConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.batch_size == 0 {
            return Err(SearchError::Config("bs must be >= 1".into()));
        }
        if self.eval_every == 0 {
            return Err(SearchError::Config("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainLoopConfig {
    fn default() -> Self {
        TrainLoopConfig {
            batch_size: 256,
            max_epochs: 10,
            patience: 3,
            eval_every: 1,
            seed: 0,
            gumbel_on: true,
        }
    }
}

/// One run-log record. `tau` is present for search-stage evaluations only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: String,
    pub auc: f64,
    pub logloss: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tau: Option<f64>,
    pub param_count: usize,
}

#[derive(Debug)]
pub struct SearchResult {
    /// Positive architecture weights at the end of search, row per pair.
    pub alpha: Vec<[f64; 3]>,
    /// Per-pair argmax of the final alpha.
    pub decision: ArchitectureDecision,
    pub trace: Vec<EpochRecord>,
    /// The relaxed model as it stood when search stopped.
    pub model: OptInterModel,
}

#[derive(Debug)]
pub struct RetrainResult {
    /// The model restored to its best-validation-AUC snapshot.
    pub model: OptInterModel,
    pub trace: Vec<EpochRecord>,
    pub best_validation_auc: f64,
}

/// AUC and log loss of a frozen model on a dataset. Relaxed models
/// evaluate the noise-free mixture at temperature `tau`.
pub fn evaluate(
    model: &OptInterModel,
    dataset: &Dataset,
    tau: Option<f64>,
) -> Result<(f64, f64), SearchError> {
    if dataset.is_empty() {
        return Err(SearchError::Config(format!("cannot evaluate on an empty {} split", dataset.split)));
    }
    let mut scores = Vec::with_capacity(dataset.len());
    for chunk in dataset.instances.chunks(4096) {
        scores.extend(model.predict(chunk, tau)?);
    }
    let labels = dataset.labels_f64();
    Ok((auc(&scores, &labels)?, logloss(&scores, &labels)?))
}

struct EarlyStop {
    best: f64,
    bad: usize,
    patience: usize,
}

impl EarlyStop {
    fn new(patience: usize) -> Self {
        EarlyStop { best: f64::NEG_INFINITY, bad: 0, patience }
    }

    /// Returns true when training should stop.
    fn observe(&mut self, auc: f64) -> (bool, bool) {
        if auc > self.best {
            self.best = auc;
            self.bad = 0;
            (false, true)
        } else {
            self.bad += 1;
            (self.bad > self.patience, false)
        }
    }
}

fn check_loop_inputs(
    train: &Dataset,
    validation: &Dataset,
    cfg: &TrainLoopConfig,
) -> Result<(), SearchError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(SearchError::Config("training split is empty".into()));
    }
    if validation.is_empty() && cfg.max_epochs > 0 {
        return Err(SearchError::Config("validation split is empty".into()));
    }
    Ok(())
}

fn train_loss_step(
    model: &mut OptInterModel,
    batch: &[EncodedInstance],
    relaxed: Option<(f64, Option<&[[f64; 3]]>)>,
) -> Result<f64, SearchError> {
    let labels: Vec<f64> = batch.iter().map(|i| f64::from(i.label)).collect();
    let (logits, state) = match relaxed {
        Some((tau, noise)) => model.forward_relaxed(batch, tau, noise)?,
        None => model.forward_fixed(batch)?,
    };
    let (loss, dlogits, _) =
        sigmoid_bce_with_logits(&logits, &labels).map_err(crate::model::ModelError::Num)?;
    if !loss.is_finite() {
        return Err(SearchError::Divergence(format!("non-finite training loss {loss}")));
    }
    model.backward(batch, &state, &dlogits)?;
    Ok(loss)
}

/// Joint search: network weights and architecture parameters descend
/// gradients computed from the same mini-batch forward pass, updated
/// simultaneously rather than alternately. The temperature decays per
/// epoch; early stopping watches validation AUC.
pub fn search(
    train: &Dataset,
    validation: &Dataset,
    model: OptInterModel,
    schedule: &TemperatureSchedule,
    cfg: &TrainLoopConfig,
) -> Result<SearchResult, SearchError> {
    run_search(train, validation, model, schedule, cfg, false)
}

/// Bi-level ablation: theta descends on a training batch, then alpha
/// descends on a validation batch, alternately.
pub fn bilevel_search(
    train: &Dataset,
    validation: &Dataset,
    model: OptInterModel,
    schedule: &TemperatureSchedule,
    cfg: &TrainLoopConfig,
) -> Result<SearchResult, SearchError> {
    if validation.is_empty() {
        return Err(SearchError::Config("bi-level search needs a non-empty validation split".into()));
    }
    run_search(train, validation, model, schedule, cfg, true)
}

fn run_search(
    train: &Dataset,
    validation: &Dataset,
    mut model: OptInterModel,
    schedule: &TemperatureSchedule,
    cfg: &TrainLoopConfig,
    bilevel: bool,
) -> Result<SearchResult, SearchError> {
    if !model.is_relaxed() {
        return Err(SearchError::Config("search needs a relaxed-mode model".into()));
    }
    check_loop_inputs(train, validation, cfg)?;
    schedule.validate()?;
    let num_pairs = model.dims().num_pairs();
    let root = Rng::seeded(cfg.seed);
    let mut shuffle_rng = root.derive(0x5B);
    let mut noise_rng = root.derive(0x6E);
    let mut val_rng = root.derive(0x7A);

    let mut scratch: Vec<EncodedInstance> = train.instances.clone();
    let mut val_scratch: Vec<EncodedInstance> = if bilevel {
        validation.instances.clone()
    } else {
        Vec::new()
    };
    let mut val_cursor = val_scratch.len(); // forces an initial shuffle

    let mut trace = Vec::new();
    let mut stopper = EarlyStop::new(cfg.patience);
    let mut tau = schedule.tau_at(0, cfg.max_epochs);
    model.zero_grads();

    'epochs: for epoch in 0..cfg.max_epochs {
        tau = schedule.tau_at(epoch, cfg.max_epochs);
        shuffle_rng.shuffle(&mut scratch);
        let mut start = 0;
        while start < scratch.len() {
            let end = (start + cfg.batch_size).min(scratch.len());
            let batch = &scratch[start..end];
            start = end;

            let noise = cfg.gumbel_on.then(|| sample_gumbel_rows(&mut noise_rng, num_pairs));
            if bilevel {
                train_loss_step(&mut model, batch, Some((tau, noise.as_deref())))?;
                model.adam_step_groups(true, false)?;
                model.zero_grads();

                // Alpha descends on a validation batch (cycled, reshuffled
                // when exhausted).
                if val_cursor >= val_scratch.len() {
                    val_rng.shuffle(&mut val_scratch);
                    val_cursor = 0;
                }
                let val_end = (val_cursor + cfg.batch_size).min(val_scratch.len());
                let val_batch = &val_scratch[val_cursor..val_end];
                val_cursor = val_end;
                let noise = cfg.gumbel_on.then(|| sample_gumbel_rows(&mut noise_rng, num_pairs));
                train_loss_step(&mut model, val_batch, Some((tau, noise.as_deref())))?;
                model.adam_step_groups(false, true)?;
                model.zero_grads();
            } else {
                // Joint: both families updated from one forward/backward.
                train_loss_step(&mut model, batch, Some((tau, noise.as_deref())))?;
                model.adam_step_groups(true, true)?;
            }
        }

        if (epoch + 1) % cfg.eval_every == 0 {
            let (val_auc, val_ll) = evaluate(&model, validation, Some(tau))?;
            trace.push(EpochRecord {
                epoch,
                split: validation.split.to_string(),
                auc: val_auc,
                logloss: val_ll,
                tau: Some(tau),
                param_count: model.count_parameters(),
            });
            let (stop, _) = stopper.observe(val_auc);
            if stop {
                break 'epochs;
            }
        }
    }
    let _ = tau;

    let alpha = model.alpha().expect("relaxed model has alpha");
    let decision = derive_architecture(&alpha);
    Ok(SearchResult { alpha, decision, trace, model })
}

/// Retrain from scratch under a fixed decision: only network weights and
/// reachable embedding tables train; the Gumbel-softmax machinery is gone.
/// Returns the best-validation-AUC snapshot.
pub fn retrain(
    train: &Dataset,
    validation: &Dataset,
    decision: &ArchitectureDecision,
    model: OptInterModel,
    cfg: &TrainLoopConfig,
) -> Result<RetrainResult, SearchError> {
    match model.decision() {
        Some(d) if d == decision => {}
        Some(_) => {
            return Err(SearchError::Config(
                "model was built for a different architecture decision".into(),
            ))
        }
        None => return Err(SearchError::Config("retrain needs a fixed-mode model".into())),
    }
    check_loop_inputs(train, validation, cfg)?;
    let mut model = model;
    let mut shuffle_rng = Rng::seeded(cfg.seed).derive(0x5B);

    let mut scratch: Vec<EncodedInstance> = train.instances.clone();
    let mut trace = Vec::new();
    let mut stopper = EarlyStop::new(cfg.patience);
    let mut best_model = model.clone();
    model.zero_grads();

    'epochs: for epoch in 0..cfg.max_epochs {
        shuffle_rng.shuffle(&mut scratch);
        let mut start = 0;
        while start < scratch.len() {
            let end = (start + cfg.batch_size).min(scratch.len());
            let batch = &scratch[start..end];
            start = end;
            train_loss_step(&mut model, batch, None)?;
            model.adam_step_groups(true, false)?;
        }

        if (epoch + 1) % cfg.eval_every == 0 {
            let (val_auc, val_ll) = evaluate(&model, validation, None)?;
            trace.push(EpochRecord {
                epoch,
                split: validation.split.to_string(),
                auc: val_auc,
                logloss: val_ll,
                tau: None,
                param_count: model.count_parameters(),
            });
            let (stop, improved) = stopper.observe(val_auc);
            if improved {
                best_model = model.clone();
            }
            if stop {
                break 'epochs;
            }
        }
    }

    let best_validation_auc = if stopper.best.is_finite() { stopper.best } else { f64::NAN };
    Ok(RetrainResult { model: best_model, trace, best_validation_auc })
}

/// Uniform i.i.d. method assignment per pair (the random-search baseline).
pub fn random_architecture(num_pairs: usize, rng: &mut Rng) -> ArchitectureDecision {
    ArchitectureDecision::new(
        (0..num_pairs).map(|_| Method::from_index(rng.below(3) as usize)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_architecture_is_uniform_by_chi_squared() {
        let mut rng = Rng::seeded(1000);
        let draws = 3000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let d = random_architecture(1, &mut rng);
            counts[d.method(0).index()] += 1;
        }
        let expected = draws as f64 / 3.0;
        let chi2: f64 =
            counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // p > 0.01 for chi-squared with 2 dof means chi2 < -2 ln 0.01.
        let threshold = -2.0 * 0.01f64.ln();
        assert!(chi2 < threshold, "chi2 {chi2} vs threshold {threshold}");
    }

    #[test]
    fn random_architecture_is_reproducible() {
        let a = random_architecture(10, &mut Rng::seeded(5));
        let b = random_architecture(10, &mut Rng::seeded(5));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_pairs_gives_empty_decision() {
        let d = random_architecture(0, &mut Rng::seeded(1));
        assert_eq!(d.num_pairs(), 0);
    }

    #[test]
    fn early_stop_patience_semantics() {
        let mut s = EarlyStop::new(2);
        assert_eq!(s.observe(0.7), (false, true));
        assert_eq!(s.observe(0.69), (false, false));
        assert_eq!(s.observe(0.69), (false, false));
        assert_eq!(s.observe(0.68), (true, false));

        let mut s0 = EarlyStop::new(0);
        assert_eq!(s0.observe(0.7), (false, true));
        assert_eq!(s0.observe(0.7), (true, false));
    }
}
