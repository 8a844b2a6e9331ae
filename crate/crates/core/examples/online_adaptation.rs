//! Appending closed-loop data to the signal matrix under heavy offline noise.

use smmpc::harness::{monte_carlo, ScenarioConfig};

fn main() -> smmpc::Result<()> {
    let mut fixed = ScenarioConfig::benchmark(0);
    fixed.data.length = 100;
    fixed.data.sigma2 = 1.0;
    let mut adaptive = fixed.clone();
    adaptive.online.adapt = true;

    for cfg in [&fixed, &adaptive] {
        let s = monte_carlo(cfg, 20, 0)?.summary;
        let j = s.j_tot.expect("completed runs");
        println!("{:<28} median {:.4}  q1 {:.4}  q3 {:.4}", s.label, j.median, j.q1, j.q3);
    }
    Ok(())
}
