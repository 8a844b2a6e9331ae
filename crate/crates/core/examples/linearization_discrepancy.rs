//! Distance between the linearized predictor used for control and the fully
//! iterated signal matrix model along closed-loop trajectories.

use smmpc::harness::{monte_carlo, DiscrepancyStats, ScenarioConfig};

fn main() -> smmpc::Result<()> {
    let mut cfg = ScenarioConfig::benchmark(0);
    cfg.controller.track_discrepancy = true;
    let mc = monte_carlo(&cfg, 10, 0)?;
    let e: Vec<f64> = mc.runs.iter().flat_map(|r| r.discrepancies()).collect();
    let Some(d) = DiscrepancyStats::of(&e) else {
        println!("no discrepancy samples");
        return Ok(());
    };
    println!("{} samples over {} runs", d.stats.count, mc.summary.completed);
    println!(
        "median {:.4}  q3 {:.4}  max {:.4}",
        d.stats.median, d.stats.q3, d.stats.max
    );
    println!(
        "below 5%: {:.1}%  below 10%: {:.1}%",
        100.0 * d.fraction_below_5pct,
        100.0 * d.fraction_below_10pct
    );
    Ok(())
}
