//! Initial-condition window length against an impulse-response predictor.

use smmpc::controllers::impulse_fir_identify;
use smmpc::harness::{monte_carlo, offline_data, ControllerKind, ScenarioConfig};
use smmpc::plant::tf_to_ss;
use smmpc::signal_matrix::SignalMatrix;

fn main() -> smmpc::Result<()> {
    let mut base = ScenarioConfig::benchmark(0);
    base.data.length = 100;
    base.data.sigma2 = 1.0;
    base.online.sigma2_p = 1.0;
    let data = offline_data(&base, 0)?;
    let fir = impulse_fir_identify(&SignalMatrix::build(&data, 4, 10)?, &base.noise()?)?;
    let truth = tf_to_ss(&base.plant.transfer_function())?.markov_params(10);
    println!("  k  identified        true");
    for (k, (a, b)) in fir.iter().zip(&truth).enumerate() {
        println!("{k:>3} {a:>11.5} {b:>11.5}");
    }

    for l0 in [4, 10] {
        let mut fixed = base.clone();
        fixed.controller.l0 = l0;
        let mut adaptive = fixed.clone();
        adaptive.online.adapt = true;
        let impulse = fixed.clone().with_kind(ControllerKind::ImpulseMpc);
        for cfg in [&fixed, &adaptive, &impulse] {
            let s = monte_carlo(cfg, 10, 0)?.summary;
            println!("{:<28} median J {:.4}", s.label, s.j_tot.map_or(f64::NAN, |j| j.median));
        }
    }
    Ok(())
}
