//! Compressing the signal matrix to 2L columns leaves the controller unchanged.

use smmpc::harness::{closed_loop, ScenarioConfig};

fn main() -> smmpc::Result<()> {
    let plain = ScenarioConfig::benchmark(0);
    let mut compressed = plain.clone();
    compressed.online.compress = true;

    let sm = smmpc::signal_matrix::SignalMatrix::build(&smmpc::harness::offline_data(&plain, 0)?, 4, 10)?;
    let small = sm.compress();
    println!(
        "signal matrix {}x{} -> {}x{}",
        2 * sm.depth(),
        sm.columns(),
        2 * small.depth(),
        small.columns()
    );
    let gram_gap = (sm.gram() - small.gram()).amax();
    println!("largest Gram matrix difference {gram_gap:.2e}");

    for run in 0..5 {
        let a = closed_loop(&plain, run)?;
        let b = closed_loop(&compressed, run)?;
        let gap = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!(
            "run {run}: J_tot {:.4} vs {:.4}, max input gap {gap:.2e}",
            a.j_tot, b.j_tot
        );
    }
    Ok(())
}
