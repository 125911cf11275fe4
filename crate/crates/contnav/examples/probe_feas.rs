//! Scratch diagnostic: feasibility + degree/edge stats per geometry.
use contnav::sim::{generate_domain, Flavor, GenParams};

fn main() {
    for (side, nodes, cap) in [
        (12.0, 16usize, 4usize),
        (12.0, 18, 4),
        (13.0, 18, 4),
        (12.5, 17, 4),
        (13.0, 20, 4),
        (12.0, 20, 4),
    ] {
        let params = GenParams {
            nodes_per_scene: nodes,
            square_side: side,
            max_degree: cap,
            ..GenParams::default()
        };
        let mut fails = 0;
        let mut degs: Vec<usize> = vec![];
        let mut lens: Vec<f64> = vec![];
        for seed in [7u64, 8, 9] {
            for d in 0..10u32 {
                match generate_domain::<f64>(d, seed, Flavor::InitialInstruction, &params) {
                    Err(_) => fails += 1,
                    Ok(dom) => {
                        for s in &dom.scenes {
                            for nbrs in &s.adjacency { degs.push(nbrs.len()); }
                            for (u, nbrs) in s.adjacency.iter().enumerate() {
                                for &(v, l) in nbrs { if (u as u32) < v { lens.push(l); } }
                            }
                        }
                    }
                }
            }
        }
        if degs.is_empty() { println!("side={side} n={nodes} cap={cap}: all infeasible"); continue; }
        let dmean = degs.iter().sum::<usize>() as f64 / degs.len() as f64;
        let at_cap = degs.iter().filter(|&&d| d == cap).count() as f64 / degs.len() as f64;
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!("side={side} n={nodes} cap={cap}: {fails}/30 infeasible, mean_deg {:.2}, at_cap {:.0}%, median_edge {:.2}",
            dmean, 100.0 * at_cap, lens[lens.len()/2]);
    }
}
