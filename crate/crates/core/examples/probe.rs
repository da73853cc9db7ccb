use qfqs::ansatz::{build_alt_ansatz, initialize, BlockType, Connectivity, InitPolicy};
use qfqs::costs::VqeCost;
use qfqs::hamiltonian::ising_hamiltonian;
use qfqs::optimizer::{run_sweeps, SweepOptions, TomographyConfigs};
use rayon::prelude::*;
use std::time::Instant;

fn main() {
    let start = Instant::now();
    let h = ising_hamiltonian(8, 1.0, std::f64::consts::FRAC_1_SQRT_2, true).unwrap();
    let ground = h.ground_energy().unwrap();
    eprintln!("ground {ground} ({:?})", start.elapsed());
    let jobs: Vec<(BlockType, usize, u64)> = [BlockType::Fqs, BlockType::Cfqs, BlockType::Scf]
        .iter()
        .flat_map(|&b| [2usize, 3].iter().flat_map(move |&l| (0..5u64).map(move |s| (b, l, s))).collect::<Vec<_>>())
        .collect();
    let results: Vec<((BlockType, usize, u64), f64)> = jobs
        .par_iter()
        .map(|&(block, layers, seed)| {
            let mut c = build_alt_ansatz(8, layers, block, Connectivity::NearestNeighbor).unwrap();
            let policy = if block == BlockType::Fqs { InitPolicy::CzInit } else { InitPolicy::Random };
            initialize(&mut c, policy, seed);
            let mut cost = VqeCost::exact(h.clone());
            let t = run_sweeps(&mut c, &mut cost, &TomographyConfigs::default(), &SweepOptions::new(100)).unwrap();
            ((block, layers, seed), t.final_cost())
        })
        .collect();
    for l in [2usize, 3] {
        for block in [BlockType::Fqs, BlockType::Cfqs, BlockType::Scf] {
            let vals: Vec<f64> = results.iter().filter(|((b, ll, _), _)| *b == block && *ll == l).map(|(_, v)| *v).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            let se = (var / vals.len() as f64).sqrt();
            eprintln!("L={l} {block:?}: mean {mean:.6} se {se:.2e} (gap to ground {:.3e})", mean - ground);
        }
    }
    eprintln!("total {:?}", start.elapsed());
}
