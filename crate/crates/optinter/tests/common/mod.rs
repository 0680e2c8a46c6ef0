#![allow(dead_code)]

use std::sync::Arc;

use optinter::data::{
    encode_dataset, generate_synthetic, Dataset, FeatureSchema, FieldKind, FieldSpec,
    InteractionKind, PlantedPair, RawRow, Split, SyntheticData, SyntheticField, SyntheticSpec,
    Vocabulary, VocabularyOptions,
};
use optinter::num::Rng;

/// Small all-categorical dataset with labels correlated to the first field.
pub fn tiny_categorical(cards: &[u32], n: usize, seed: u64) -> Dataset {
    let schema = Arc::new(
        FeatureSchema::new(
            (0..cards.len())
                .map(|i| FieldSpec { name: format!("f{i}"), kind: FieldKind::CategoricalUnivalent })
                .collect(),
        )
        .unwrap(),
    );
    let mut rng = Rng::seeded(seed);
    let rows: Vec<RawRow> = (0..n)
        .map(|_| {
            let values: Vec<u64> = cards.iter().map(|&c| rng.below(u64::from(c))).collect();
            let label = u8::from(values[0] % 2 == 0) ^ u8::from(rng.bernoulli(0.1));
            RawRow {
                label: label.to_string(),
                fields: values.iter().map(|v| v.to_string()).collect(),
            }
        })
        .collect();
    let vocab = Arc::new(Vocabulary::build(&rows, &schema, VocabularyOptions::default()).unwrap());
    let instances = encode_dataset(&rows, &schema, &vocab).unwrap();
    Dataset { schema, vocabulary: vocab, split: Split::Train, instances }
}

/// The planted-architecture corpus used across the recovery experiments:
/// one memorized pair (0,1), one factorizable pair (2,3), everything else
/// noise.
pub fn planted_spec(rows: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        version: 1,
        fields: vec![
            SyntheticField { name: "f0".into(), cardinality: 24 },
            SyntheticField { name: "f1".into(), cardinality: 24 },
            SyntheticField { name: "f2".into(), cardinality: 16 },
            SyntheticField { name: "f3".into(), cardinality: 16 },
            SyntheticField { name: "f4".into(), cardinality: 12 },
            SyntheticField { name: "f5".into(), cardinality: 12 },
        ],
        pairs: vec![
            PlantedPair { i: 0, j: 1, kind: InteractionKind::Memorize, strength: 2.0 },
            PlantedPair { i: 2, j: 3, kind: InteractionKind::Factorize, strength: 1.2 },
        ],
        rows,
        fractions: (0.8, 0.1, 0.1),
        noise_level: 0.2,
        bias: -0.2,
        main_effect_scale: 0.3,
        factor_rank: 2,
        min_frequency: 1,
        seed,
    }
}

pub fn planted_data(rows: usize, seed: u64) -> SyntheticData {
    generate_synthetic(&planted_spec(rows, seed), seed).unwrap()
}
