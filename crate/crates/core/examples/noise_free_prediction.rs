//! Noise-free data: the signal matrix model reproduces the plant exactly.

use nalgebra::DVector;
use smmpc::plant::{generate_data, simulate, tf_to_ss, NoiseSpec, TransferFunction};
use smmpc::rng::{self, Role};
use smmpc::signal_matrix::{pe_order, SignalMatrix};
use smmpc::smm::{SmmModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

fn main() -> smmpc::Result<()> {
    let ss = tf_to_ss(&TransferFunction::benchmark())?;
    let data = generate_data(&ss, 60, NoiseSpec::noise_free(), 0, 0)?;
    println!("input persistently exciting of order 18: {}", pe_order(&data.u, 18));

    let model = SmmModel::new(SignalMatrix::build(&data, 4, 10)?, NoiseSpec::noise_free())?;
    let mut rng = rng::stream(0, 0, Role::Auxiliary);
    let x0 = DVector::from_fn(4, |_, _| rng::standard_normal(&mut rng));
    let u: Vec<f64> = (0..14).map(|_| rng::standard_normal(&mut rng)).collect();
    let truth = simulate(&ss, &u, &x0, 0.0, &mut rng)?.y;

    let g0 = DVector::from_element(model.signal_matrix().columns(), 1.0);
    let it = model.iterate(&u[..4], &truth[..4], &u[4..], &g0, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let y_hat = model.predict(&it.g)?.y_hat;
    println!("{} iterations, lambda = {:.3e}", it.iterations, it.lambda);
    println!("  k   predicted        true");
    for (k, (p, t)) in y_hat.iter().zip(&truth[4..]).enumerate() {
        println!("{k:>3} {p:>11.6} {t:>11.6}");
    }
    Ok(())
}
