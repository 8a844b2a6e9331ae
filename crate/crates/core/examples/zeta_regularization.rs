//! Penalizing the predicted output variance: smaller g, cheaper inputs.

use smmpc::experiments::ZETAS;
use smmpc::harness::{monte_carlo, ScenarioConfig};

fn main() -> smmpc::Result<()> {
    println!("{:>8} {:>10} {:>10} {:>10}", "zeta", "J", "J_u", "mean |g|^2");
    for zeta in ZETAS {
        let mut cfg = ScenarioConfig::benchmark(0);
        cfg.controller.zeta = zeta;
        let s = monte_carlo(&cfg, 20, 0)?.summary;
        let med = |x: Option<smmpc::harness::Stats>| x.map_or(f64::NAN, |s| s.median);
        println!(
            "{zeta:>8} {:>10.4} {:>10.4} {:>10.4}",
            med(s.j_tot),
            med(s.j_tot_u),
            med(s.mean_g_norm_sq)
        );
    }
    Ok(())
}
