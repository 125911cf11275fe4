//! Scratch preflight: evaluate the empirical acceptance criteria on the
//! current defaults (or overrides from env vars) in one pass.
use contnav::harness::{generate_benchmark, run_curriculum, Curriculum, ExperimentConfig};
use contnav::metrics::Metric;
use contnav::strategies::{StrategyConfig, StrategyKind};
use std::time::Instant;

fn envf(key: &str) -> Option<f64> { std::env::var(key).ok().and_then(|v| v.parse().ok()) }
fn envu(key: &str) -> Option<usize> { std::env::var(key).ok().and_then(|v| v.parse().ok()) }

fn main() {
    let mut cfg = ExperimentConfig::default();
    if let Some(v) = envf("LR") { cfg.training.lr = v; }
    if let Some(v) = envu("EPOCHS") { cfg.training.epochs_per_domain = v; }
    if let Some(v) = envu("MAXP") { cfg.generation.max_path_len = v; }
    if let Some(v) = envf("MARGIN") { cfg.generation.shift_margin = v; }
    if let Some(v) = envf("NOISE") { cfg.generation.feature_noise = v; }
    if let Some(v) = envf("LSCALE") { cfg.generation.landmark_scale = v; }
    if let Some(v) = envf("SIDE") { cfg.generation.square_side = v; }
    if let Some(v) = envf("RADIUS") { cfg.generation.connect_radius = v; }
    if let Some(v) = envu("NODES") { cfg.generation.nodes_per_scene = v; }
    if let Some(v) = envu("CAP") { cfg.experiment.memory_capacity = v; }
    if let Some(v) = envf("L1") { cfg.strategies.lambda1 = v; }
    if let Some(v) = envf("L2W") { cfg.strategies.lambda2 = v; }
    let bench = generate_benchmark::<f64>(&cfg).unwrap();
    let seeds = cfg.experiment.curriculum_seeds.clone();
    let t0 = Instant::now();

    let run = |kind: StrategyKind, cap: usize, rev: bool, nolm: bool, nolesr: bool| -> Vec<contnav::metrics::ResultMatrix> {
        seeds.iter().map(|&seed| {
            let curriculum = Curriculum::new(seed, bench.flavor, cfg.generation.num_domains);
            let strat = StrategyConfig {
                memory_capacity: cap,
                perpr_reverse: rev,
                esr_use_lm: !nolm,
                esr_use_lesr: !nolesr,
                lambda_l2: cfg.strategies.lambda_l2,
                lambda1: cfg.strategies.lambda1,
                lambda2: cfg.strategies.lambda2,
                adapter_rank: cfg.strategies.adapter_rank,
                kind,
            };
            run_curriculum(&cfg, &bench, &strat, &curriculum, None, None).unwrap()
        }).collect()
    };
    let avg = |ms: &[contnav::metrics::ResultMatrix]| -> Vec<f64> {
        ms.iter().map(|m| m.average_metric(Metric::Sr).unwrap()).collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let cap = cfg.experiment.memory_capacity;
    let vanilla = run(StrategyKind::Vanilla, cap, false, false, false);
    let joint = run(StrategyKind::Joint, cap, false, false, false);
    let l2 = run(StrategyKind::L2, cap, false, false, false);
    let agem = run(StrategyKind::Agem, cap, false, false, false);
    let adapter = run(StrategyKind::AdapterCl, cap, false, false, false);
    let randr = run(StrategyKind::RandR, cap, false, false, false);
    let perpr = run(StrategyKind::PerpR, cap, false, false, false);
    let esr = run(StrategyKind::Esr, cap, false, false, false);

    let v_avg = avg(&vanilla); let j_avg = avg(&joint); let r_avg = avg(&randr);
    let p_avg = avg(&perpr); let e_avg = avg(&esr);
    println!("Vanilla  {:5.1} {:?}", mean(&v_avg), v_avg);
    println!("Joint    {:5.1} {:?}", mean(&j_avg), j_avg);
    println!("L2       {:5.1}", mean(&avg(&l2)));
    println!("AGEM     {:5.1}", mean(&avg(&agem)));
    println!("AdaptCL  {:5.1}", mean(&avg(&adapter)));
    println!("RandR    {:5.1} {:?}", mean(&r_avg), r_avg);
    println!("PerpR    {:5.1} {:?}", mean(&p_avg), p_avg);
    println!("ESR      {:5.1} {:?}", mean(&e_avg), e_avg);

    // C8: forgetting.
    let r11 = mean(&vanilla.iter().map(|m| m.get(1,1).unwrap().sr).collect::<Vec<_>>());
    let r101 = mean(&vanilla.iter().map(|m| m.get(10,1).unwrap().sr).collect::<Vec<_>>());
    println!("C8  forgetting: R[1][1] {:.1} R[10][1] {:.1} ratio {:.2} -> {}", r11, r101, r101/r11.max(1e-9), if r101 <= 0.7*r11 {"PASS"} else {"FAIL"});
    // C9: bounds.
    let mut c9 = true;
    for i in 0..seeds.len() {
        if !(j_avg[i] > v_avg[i]) { c9 = false; println!("  seed {}: Joint {:.1} !> Vanilla {:.1}", seeds[i], j_avg[i], v_avg[i]); }
        if !(r_avg[i] > v_avg[i]) { c9 = false; println!("  seed {}: RandR {:.1} !> Vanilla {:.1}", seeds[i], r_avg[i], v_avg[i]); }
    }
    let perpr_ok = mean(&p_avg) >= mean(&r_avg) - 1.0;
    let esr_ok = mean(&e_avg) >= mean(&r_avg);
    println!("C9  bounds: perseed {} | PerpR {:.1} vs RandR-1 {:.1}: {} | ESR {:.1} vs RandR {:.1}: {}",
        c9, mean(&p_avg), mean(&r_avg)-1.0, perpr_ok, mean(&e_avg), mean(&r_avg), esr_ok);
    // C10: memory monotonicity.
    for kind in [StrategyKind::PerpR, StrategyKind::Esr] {
        let m10 = mean(&avg(&run(kind, 10, false, false, false)));
        let m20 = if kind == StrategyKind::PerpR { mean(&p_avg) } else { mean(&e_avg) };
        let m40 = mean(&avg(&run(kind, 40, false, false, false)));
        let ok = m20 >= m10 - 1.0 && m40 >= m20 - 1.0;
        println!("C10 {:?}: cap10 {:.1} cap20 {:.1} cap40 {:.1} -> {}", kind.label(), m10, m20, m40, if ok {"PASS"} else {"FAIL"});
    }
    // C11: ablations.
    let prev = mean(&avg(&run(StrategyKind::PerpR, cap, true, false, false)));
    let nolm = mean(&avg(&run(StrategyKind::Esr, cap, false, true, false)));
    let nolesr = mean(&avg(&run(StrategyKind::Esr, cap, false, false, true)));
    println!("C11 PerpR-Rev {:.1} <= PerpR {:.1}: {} | ESR-noLM {:.1} >= ESR-noLESR {:.1}: {}",
        prev, mean(&p_avg), prev <= mean(&p_avg), nolm, nolesr, nolm >= nolesr);
    println!("grid time {:.1}s", t0.elapsed().as_secs_f64());
}
