//! A slowly drifting plant: forgetting old columns tracks the change.

use smmpc::experiments::GAMMAS;
use smmpc::harness::{monte_carlo, ScenarioConfig};
use smmpc::plant::DriftSpec;

fn main() -> smmpc::Result<()> {
    let mut base = ScenarioConfig::benchmark(0);
    base.plant.drift = Some(DriftSpec::benchmark());
    base.data.sigma2 = 0.01;
    base.online.sigma2_p = 0.01;

    let drift = DriftSpec::benchmark();
    println!(
        "drifting coefficient: {:.3} at t = 0, {:.3} at t = 120",
        drift.theta(0.0),
        drift.theta(120.0)
    );
    let mut configs = vec![base.clone()];
    for gamma in GAMMAS {
        let mut c = base.clone();
        c.online.adapt = true;
        c.online.gamma = gamma;
        configs.push(c);
    }
    for cfg in &configs {
        let s = monte_carlo(cfg, 20, 0)?.summary;
        println!("{:<34} median J {:.4}", s.label, s.j_tot.map_or(f64::NAN, |j| j.median));
    }
    Ok(())
}
