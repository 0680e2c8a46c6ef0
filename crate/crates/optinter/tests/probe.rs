mod common;
use optinter::data::{generate_synthetic, InteractionKind, PlantedPair, SyntheticField, SyntheticSpec};
use optinter::model::{DataDims, Method, ModelConfig, OptInterModel};
use optinter::nas::{search, TemperatureSchedule, TrainLoopConfig};

fn spec(c_mem: u32, c_fac: u32, c_noise: u32, rows: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        version: 1,
        fields: vec![
            SyntheticField { name: "f0".into(), cardinality: c_mem },
            SyntheticField { name: "f1".into(), cardinality: c_mem },
            SyntheticField { name: "f2".into(), cardinality: c_fac },
            SyntheticField { name: "f3".into(), cardinality: c_fac },
            SyntheticField { name: "f4".into(), cardinality: c_noise },
            SyntheticField { name: "f5".into(), cardinality: c_noise },
        ],
        pairs: vec![
            PlantedPair { i: 0, j: 1, kind: InteractionKind::Memorize, strength: 2.5 },
            PlantedPair { i: 2, j: 3, kind: InteractionKind::Factorize, strength: 1.5 },
        ],
        rows, fractions: (0.8, 0.1, 0.1), noise_level: 0.2, bias: -0.2,
        main_effect_scale: 0.3, factor_rank: 2, min_frequency: 20, seed,
    }
}

fn run(tag: &str, c: (u32,u32,u32), s2: usize, lr_c: f64, lr_a: f64, epochs: usize, tau_end: f64, noise_level: f64) {
    let mut mem_ok = 0; let mut naive_ok = 0;
    let t0 = std::time::Instant::now();
    for seed in 0..3u64 {
        let mut sp = spec(c.0, c.1, c.2, 62_500, 1000 + seed); sp.noise_level = noise_level;
        let data = generate_synthetic(&sp, 1000 + seed).unwrap();
        let config = ModelConfig {
            s1: 8, s2, mlp_layers: vec![64, 32], seed,
            lr_o: 3e-3, lr_c, lr_a, l2_c: 1e-3,
            ..ModelConfig::default()
        };
        let model = OptInterModel::new_relaxed(DataDims::from_dataset(&data.train), config).unwrap();
        let cfg = TrainLoopConfig { batch_size: 512, max_epochs: epochs, patience: 5, eval_every: 1, seed, gumbel_on: true };
        let result = search(&data.train, &data.validation, model, &TemperatureSchedule { tau_start: 1.0, tau_end }, &cfg).unwrap();
        let d = &result.decision;
        let mem = d.method(0) == Method::Memorize;
        let noise_pairs: Vec<usize> = (0..15).filter(|&p| p != 0 && p != 9).collect();
        let nn = noise_pairs.iter().filter(|&&p| d.method(p) == Method::Naive).count();
        if mem { mem_ok += 1; }
        if nn * 2 >= noise_pairs.len() { naive_ok += 1; }
        let a0 = result.alpha[0];
        println!("  [{tag}] seed {seed}: (0,1)={:?} margin {:.2}, naive {}/13, counts {:?}, val_auc {:.4}",
            d.method(0), a0[0].ln() - a0[1].ln().max(a0[2].ln()), nn, d.counts(),
            result.trace.last().map(|r| r.auc).unwrap_or(0.0));
    }
    println!("[{tag}] mem {mem_ok}/3 naive {naive_ok}/3 in {:?}", t0.elapsed());
}

#[test]
fn probe_grid() {
    run("S", (40,16,12), 8, 1e-4, 2e-2, 6, 0.3, 0.2);
    run("T", (40,16,12), 8, 1e-4, 2e-2, 8, 0.3, 0.2);
    run("U", (40,16,12), 8, 5e-5, 2.5e-2, 6, 0.3, 0.2);
}
