//! Parse a TOML experiment with a sweep and run every point.

use smmpc::config::ExperimentFile;
use smmpc::harness::monte_carlo;

const EXPERIMENT: &str = r#"
seed = 7
runs = 5

[data]
length = 50
sigma2 = 0.1

[online]
sigma2_p = 0.1

[controller]
kind = "smm-pc"
l0 = 4
horizon = 10
u_min = -2.0
u_max = 2.0

[task]
steps = 80
reference = { kind = "step", at = 20, before = 0.0, after = 1.0 }

[sweep]
zeta = [0.0, 100.0]
l0 = [4, 6]
"#;

fn main() -> smmpc::Result<()> {
    let file = ExperimentFile::parse(EXPERIMENT)?;
    for sc in file.scenarios(file.seed.unwrap_or(0)) {
        let s = monte_carlo(&sc.config, file.runs(), 0)?.summary;
        println!(
            "{:<16} {}/{} runs, median J {:.4}",
            sc.label,
            s.completed,
            s.runs,
            s.j_tot.map_or(f64::NAN, |j| j.median)
        );
    }
    Ok(())
}
