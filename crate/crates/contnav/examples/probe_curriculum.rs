//! Scratch diagnostic: full-curriculum behavior of the key strategies.
use contnav::harness::{generate_benchmark, run_curriculum, Curriculum, ExperimentConfig};
use contnav::metrics::Metric;
use contnav::strategies::{StrategyConfig, StrategyKind};
use std::time::Instant;

fn main() {
    let lr: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    let mut cfg = ExperimentConfig::default();
    cfg.training.lr = lr;
    let bench = generate_benchmark::<f64>(&cfg).unwrap();
    let t0 = Instant::now();
    println!("lr={lr}");
    for kind in [StrategyKind::Vanilla, StrategyKind::Joint, StrategyKind::RandR, StrategyKind::PerpR, StrategyKind::Esr] {
        let mut avg_srs = vec![];
        let mut r11s = vec![];
        let mut r10_1s = vec![];
        for &seed in &cfg.experiment.curriculum_seeds {
            let curriculum = Curriculum::new(seed, bench.flavor, cfg.generation.num_domains);
            let strat = StrategyConfig { memory_capacity: cfg.experiment.memory_capacity, ..StrategyConfig::for_kind(kind) };
            let m = run_curriculum(&cfg, &bench, &strat, &curriculum, None, None).unwrap();
            avg_srs.push(m.average_metric(Metric::Sr).unwrap());
            if kind != StrategyKind::Joint {
                r11s.push(m.get(1, 1).unwrap().sr);
                r10_1s.push(m.get(10, 1).unwrap().sr);
            }
        }
        let mean = avg_srs.iter().sum::<f64>() / avg_srs.len() as f64;
        if kind == StrategyKind::Joint {
            println!("{:10} AvgSR {:.1} {:?}", kind.label(), mean, avg_srs.iter().map(|v| (v*10.0).round()/10.0).collect::<Vec<_>>());
        } else {
            let r11 = r11s.iter().sum::<f64>() / r11s.len() as f64;
            let r101 = r10_1s.iter().sum::<f64>() / r10_1s.len() as f64;
            println!("{:10} AvgSR {:.1} {:?}  R[1][1] {:.1}  R[10][1] {:.1}  ratio {:.2}",
                kind.label(), mean, avg_srs.iter().map(|v| (v*10.0).round()/10.0).collect::<Vec<_>>(), r11, r101, r101 / r11.max(1e-9));
        }
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
