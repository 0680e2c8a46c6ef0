//! Search/retrain loop behavior on small corpora: degenerate configs,
//! divergence handling, the bi-level degeneracy, and loop determinism.

mod common;

use optinter::data::{generate_synthetic, InteractionKind, SyntheticField, SyntheticSpec};
use optinter::model::{ArchitectureDecision, DataDims, Method, ModelConfig, OptInterModel};
use optinter::nas::{
    bilevel_search, evaluate, retrain, search, SearchError, TemperatureSchedule, TrainLoopConfig,
};

use common::{planted_data, tiny_categorical};

fn toy_model(data: &optinter::data::Dataset, seed: u64) -> OptInterModel {
    let config = ModelConfig {
        s1: 4,
        s2: 4,
        mlp_layers: vec![8],
        seed,
        lr_o: 1e-2,
        lr_c: 1e-2,
        lr_a: 1e-2,
        ..ModelConfig::default()
    };
    OptInterModel::new_relaxed(DataDims::from_dataset(data), config).unwrap()
}

fn quick_loop(max_epochs: usize, seed: u64) -> TrainLoopConfig {
    TrainLoopConfig { batch_size: 64, max_epochs, patience: 10, eval_every: 1, seed, gumbel_on: true }
}

#[test]
fn zero_epoch_search_returns_argmax_of_initial_alpha() {
    let data = tiny_categorical(&[5, 4, 3], 60, 1);
    let model = toy_model(&data, 3);
    let result =
        search(&data, &data, model, &TemperatureSchedule::default(), &quick_loop(0, 1)).unwrap();
    // Uniform initialization ties everywhere; the tie-break order puts
    // memorize first.
    assert!(result.decision.methods().iter().all(|&m| m == Method::Memorize));
    assert!(result.trace.is_empty());
    assert_eq!(result.alpha.len(), 3);
}

#[test]
fn search_rejects_fixed_mode_models() {
    let data = tiny_categorical(&[5, 4], 40, 2);
    let fixed = OptInterModel::new_fixed(
        DataDims::from_dataset(&data),
        ModelConfig { s1: 4, s2: 4, mlp_layers: vec![8], seed: 0, ..ModelConfig::default() },
        ArchitectureDecision::all(1, Method::Naive),
    )
    .unwrap();
    let err = search(&data, &data, fixed, &TemperatureSchedule::default(), &quick_loop(1, 1))
        .unwrap_err();
    assert!(matches!(err, SearchError::Config(_)));
}

#[test]
fn search_emits_one_record_per_evaluation() {
    let data = tiny_categorical(&[5, 4, 3], 120, 3);
    let model = toy_model(&data, 4);
    let mut cfg = quick_loop(4, 2);
    cfg.eval_every = 2;
    let result = search(&data, &data, model, &TemperatureSchedule::default(), &cfg).unwrap();
    assert_eq!(result.trace.len(), 2); // epochs 1 and 3
    for rec in &result.trace {
        assert_eq!(rec.split, "train");
        assert!(rec.tau.is_some());
        assert!(rec.auc > 0.0 && rec.auc < 1.0 + 1e-12);
    }
    // The emitted decision is the argmax of the emitted alpha.
    let derived = optinter::model::derive_architecture(&result.alpha);
    assert_eq!(derived, result.decision);
}

#[test]
fn diverging_learning_rate_reports_divergence() {
    let data = tiny_categorical(&[5, 4, 3], 200, 4);
    let config = ModelConfig {
        s1: 4,
        s2: 4,
        mlp_layers: vec![8],
        seed: 0,
        lr_o: 1e200,
        lr_c: 1e200,
        lr_a: 1e200,
        ..ModelConfig::default()
    };
    let model = OptInterModel::new_relaxed(DataDims::from_dataset(&data), config).unwrap();
    let err = search(&data, &data, model, &TemperatureSchedule::default(), &quick_loop(50, 3))
        .unwrap_err();
    assert!(matches!(err, SearchError::Divergence(_)), "got {err:?}");
}

#[test]
fn bilevel_with_saturated_alpha_degenerates_to_plain_training() {
    // With a +/-800 logit margin the mixture weights are exactly one-hot,
    // every alpha gradient is exactly zero, and both algorithms reduce to
    // identical theta-only trajectories over identical batch streams.
    let data = tiny_categorical(&[5, 4, 3, 3], 160, 5);
    let (train, val) = (&data, &data);
    let rig = |mut model: OptInterModel| {
        let arch = model.arch_params_mut().unwrap();
        for p in 0..arch.num_pairs() {
            arch.logits.value.row_mut(p).copy_from_slice(&[800.0, -800.0, -800.0]);
        }
        model
    };
    let schedule = TemperatureSchedule::default();
    let cfg = quick_loop(2, 7);
    let joint = search(train, val, rig(toy_model(&data, 6)), &schedule, &cfg).unwrap();
    let bilevel = bilevel_search(train, val, rig(toy_model(&data, 6)), &schedule, &cfg).unwrap();

    for (a, b) in joint.alpha.iter().zip(&bilevel.alpha) {
        assert_eq!(a, b, "alpha frozen in both");
        assert_eq!(a, &[800.0f64.exp(), (-800.0f64).exp(), (-800.0f64).exp()]);
    }
    let batch = &data.instances[..16];
    let pa = joint.model.predict(batch, Some(1.0)).unwrap();
    let pb = bilevel.model.predict(batch, Some(1.0)).unwrap();
    assert_eq!(pa, pb, "theta trajectories identical");
}

#[test]
fn bilevel_requires_validation_split() {
    let data = tiny_categorical(&[5, 4], 40, 8);
    let empty = optinter::data::Dataset {
        schema: data.schema.clone(),
        vocabulary: data.vocabulary.clone(),
        split: optinter::data::Split::Validation,
        instances: vec![],
    };
    let err = bilevel_search(
        &data,
        &empty,
        toy_model(&data, 1),
        &TemperatureSchedule::default(),
        &quick_loop(1, 1),
    )
    .unwrap_err();
    assert!(matches!(err, SearchError::Config(_)));
}

#[test]
fn bilevel_smokes_through_a_four_field_toy() {
    let data = tiny_categorical(&[5, 4, 3, 3], 200, 9);
    let result = bilevel_search(
        &data,
        &data,
        toy_model(&data, 2),
        &TemperatureSchedule::default(),
        &quick_loop(3, 5),
    )
    .unwrap();
    assert_eq!(result.trace.len(), 3);
}

#[test]
fn retrain_all_naive_is_the_original_features_baseline() {
    let data = tiny_categorical(&[5, 4, 3], 200, 10);
    let dims = DataDims::from_dataset(&data);
    let config = ModelConfig {
        s1: 4,
        s2: 4,
        mlp_layers: vec![8],
        seed: 3,
        lr_o: 1e-2,
        lr_c: 1e-2,
        lr_a: 1e-2,
        ..ModelConfig::default()
    };
    let decision = ArchitectureDecision::all(3, Method::Naive);
    let build = || {
        OptInterModel::new_fixed(dims.clone(), config.clone(), decision.clone()).unwrap()
    };
    assert_eq!(build().mlp_input_width(), 3 * 4);

    // Identical seed, identical trajectory.
    let cfg = quick_loop(2, 11);
    let a = retrain(&data, &data, &decision, build(), &cfg).unwrap();
    let b = retrain(&data, &data, &decision, build(), &cfg).unwrap();
    let batch = &data.instances[..16];
    assert_eq!(
        a.model.predict(batch, None).unwrap(),
        b.model.predict(batch, None).unwrap()
    );
    assert_eq!(a.trace, b.trace);
}

#[test]
fn retrain_validates_decision_against_model() {
    let data = tiny_categorical(&[5, 4, 3], 60, 11);
    let dims = DataDims::from_dataset(&data);
    let config = ModelConfig { s1: 4, s2: 4, mlp_layers: vec![8], seed: 0, ..ModelConfig::default() };
    let model = OptInterModel::new_fixed(
        dims,
        config,
        ArchitectureDecision::all(3, Method::Naive),
    )
    .unwrap();
    let other = ArchitectureDecision::all(3, Method::Memorize);
    let err = retrain(&data, &data, &other, model, &quick_loop(1, 1)).unwrap_err();
    assert!(matches!(err, SearchError::Config(_)));
}

#[test]
fn decision_file_round_trip_preserves_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let data = tiny_categorical(&[5, 4, 3, 3], 60, 12);
    let decision = ArchitectureDecision::new(vec![
        Method::Memorize,
        Method::Naive,
        Method::Factorize,
        Method::Naive,
        Method::Memorize,
        Method::Naive,
    ]);
    let path = dir.path().join("decision.json");
    decision.save(4, &path).unwrap();
    let (loaded, m) = ArchitectureDecision::load(&path).unwrap();
    assert_eq!(loaded, decision);
    assert_eq!(m, 4);

    let config = ModelConfig { s1: 4, s2: 4, mlp_layers: vec![8], seed: 5, ..ModelConfig::default() };
    let a = OptInterModel::new_fixed(DataDims::from_dataset(&data), config.clone(), decision)
        .unwrap();
    let b = OptInterModel::new_fixed(DataDims::from_dataset(&data), config, loaded).unwrap();
    assert_eq!(a.decision(), b.decision());
    assert_eq!(a.mlp_input_width(), b.mlp_input_width());
}

#[test]
fn evaluate_rejects_empty_split() {
    let data = tiny_categorical(&[5, 4], 40, 13);
    let empty = optinter::data::Dataset {
        schema: data.schema.clone(),
        vocabulary: data.vocabulary.clone(),
        split: optinter::data::Split::Test,
        instances: vec![],
    };
    let model = toy_model(&data, 1);
    assert!(matches!(evaluate(&model, &empty, Some(1.0)), Err(SearchError::Config(_))));
}

#[test]
fn loop_config_validation() {
    let mut cfg = TrainLoopConfig::default();
    cfg.batch_size = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = TrainLoopConfig::default();
    cfg.eval_every = 0;
    assert!(cfg.validate().is_err());
}

/// Labels carry only main effects; pairs are pure noise. Search should
/// send a majority of pairs to naive, averaged over seeds.
#[test]
fn main_effects_only_data_drives_majority_of_pairs_naive() {
    let spec = SyntheticSpec {
        version: 1,
        fields: (0..4)
            .map(|i| SyntheticField { name: format!("f{i}"), cardinality: 12 })
            .collect(),
        pairs: vec![],
        rows: 5000,
        fractions: (0.8, 0.1, 0.1),
        noise_level: 0.1,
        bias: 0.0,
        main_effect_scale: 0.8,
        factor_rank: 2,
        seed: 0,
    };
    let mut naive_majorities = 0;
    for seed in 0..5u64 {
        let data = generate_synthetic(&spec, 100 + seed).unwrap();
        let config = ModelConfig {
            s1: 6,
            s2: 6,
            mlp_layers: vec![32, 16],
            seed,
            lr_o: 3e-3,
            lr_c: 3e-3,
            lr_a: 3e-2,
            l2_c: 1e-4,
            ..ModelConfig::default()
        };
        let model =
            OptInterModel::new_relaxed(DataDims::from_dataset(&data.train), config).unwrap();
        let cfg = TrainLoopConfig {
            batch_size: 256,
            max_epochs: 5,
            patience: 5,
            eval_every: 1,
            seed,
            gumbel_on: true,
        };
        let result = search(
            &data.train,
            &data.validation,
            model,
            &TemperatureSchedule::default(),
            &cfg,
        )
        .unwrap();
        let counts = result.decision.counts();
        if counts[Method::Naive.index()] > 3 {
            naive_majorities += 1;
        }
    }
    assert!(
        naive_majorities >= 4,
        "naive majority in {naive_majorities}/5 seeds"
    );
    // Keep the planted fixture linked so both synthetic paths stay built.
    let _ = planted_data(100, 0);
}
