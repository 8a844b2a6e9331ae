//! SMM-PC against DeePC over a grid of regularization weights.

use smmpc::experiments::lambda_g_grid;
use smmpc::harness::{monte_carlo, ControllerKind, ScenarioConfig};

fn main() -> smmpc::Result<()> {
    let runs = 20;
    let smm = ScenarioConfig::benchmark(0);
    let j = |cfg: &ScenarioConfig| -> smmpc::Result<f64> {
        Ok(monte_carlo(cfg, runs, 0)?.summary.j_tot.map_or(f64::NAN, |s| s.median))
    };
    println!("{:<28} {:>10}", "controller", "median J");
    println!("{:<28} {:>10.4}", "smm-pc", j(&smm)?);
    for lambda_g in lambda_g_grid() {
        let mut cfg = smm.clone().with_kind(ControllerKind::Deepc);
        cfg.controller.lambda_g = lambda_g;
        println!("{:<28} {:>10.4}", cfg.label(), j(&cfg)?);
    }
    println!(
        "{:<28} {:>10.4}",
        "ideal-mpc",
        j(&smm.with_kind(ControllerKind::IdealMpc))?
    );
    Ok(())
}
