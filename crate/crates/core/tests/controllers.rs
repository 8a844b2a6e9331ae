use nalgebra::{DMatrix, DVector};

use smmpc::controllers::{
    condensed_prediction, deepc_step, ideal_mpc_step, impulse_fir_identify, impulse_mpc_step, smmpc_step,
    BoxConstraints, CostSpec, DeePcProblem,
};
use smmpc::harness::{closed_loop, ControllerKind, PlantConfig, ReferenceSpec, ScenarioConfig};
use smmpc::plant::{generate_data, simulate, tf_to_ss, NoiseSpec, StateSpace, TransferFunction};
use smmpc::qp::{qp_solve, qp_solve_active_set, QpProblem};
use smmpc::rng::{self, Role};
use smmpc::signal_matrix::SignalMatrix;
use smmpc::smm::SmmModel;

fn benchmark() -> StateSpace {
    tf_to_ss(&TransferFunction::benchmark()).unwrap()
}

fn normals(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng::standard_normal(rng)).collect()
}

/// A short trajectory from a random state: `(u_ini, y_ini, state after the window)`.
fn random_window(ss: &StateSpace, l0: usize, rng: &mut impl rand::Rng) -> (Vec<f64>, Vec<f64>, DVector<f64>) {
    let x0 = DVector::from_vec(normals(rng, ss.order()));
    let u = normals(rng, l0);
    let sim = simulate(ss, &u, &x0, 0.0, rng).unwrap();
    (u, sim.y, sim.x_final)
}

#[test]
fn condensed_prediction_matches_simulation() {
    let ss = benchmark();
    let mut rng = rng::stream(1, 0, Role::Auxiliary);
    for _ in 0..10 {
        let x = DVector::from_vec(normals(&mut rng, 4));
        let u = normals(&mut rng, 10);
        let (free, gamma) = condensed_prediction(&ss, &x, 10).unwrap();
        let pred = free + gamma * DVector::from_column_slice(&u);
        let sim = simulate(&ss, &u, &x, 0.0, &mut rng).unwrap();
        let err = (pred - DVector::from_vec(sim.y)).amax();
        assert!(err < 1e-10, "{err}");
    }
}

#[test]
fn ideal_mpc_at_rest_stays_at_rest() {
    let step = ideal_mpc_step(
        &benchmark(),
        &DVector::zeros(4),
        &[0.0; 10],
        &CostSpec::new(1.0, 1.0, 10),
        &BoxConstraints::none(),
        0.0,
    )
    .unwrap();
    assert!(step.u_plan.iter().all(|u| *u == 0.0));
    assert!(step.y_pred.iter().all(|y| *y == 0.0));
}

#[test]
fn impulse_response_from_noise_free_data() {
    let ss = benchmark();
    let data = generate_data(&ss, 60, NoiseSpec::noise_free(), 2, 0).unwrap();
    let sm = SignalMatrix::build(&data, 4, 10).unwrap();
    let fir = impulse_fir_identify(&sm, &NoiseSpec::noise_free()).unwrap();
    let truth = ss.markov_params(10);
    for (a, b) in fir.iter().zip(&truth) {
        assert!((a - b).abs() < 1e-6, "{fir:?} vs {truth:?}");
    }
}

#[test]
fn impulse_response_of_unit_delay() {
    // 1/z has no direct feedthrough: h_0 = 0, h_1 = 1.
    let ss = tf_to_ss(&TransferFunction::new(vec![1.0], vec![1.0, 0.0])).unwrap();
    let data = generate_data(&ss, 40, NoiseSpec::noise_free(), 0, 0).unwrap();
    let fir = impulse_fir_identify(&SignalMatrix::build(&data, 2, 6).unwrap(), &NoiseSpec::noise_free()).unwrap();
    let expected = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    for (a, b) in fir.iter().zip(expected) {
        assert!((a - b).abs() < 1e-8, "{fir:?}");
    }
}

#[test]
fn impulse_mpc_at_rest_stays_at_rest() {
    let fir = benchmark().markov_params(10);
    let step = impulse_mpc_step(
        &fir,
        &[0.0; 20],
        &[0.0; 10],
        &CostSpec::new(1.0, 1.0, 10),
        &BoxConstraints::none(),
    )
    .unwrap();
    assert!(step.u_plan.iter().all(|u| u.abs() < 1e-15));
}

#[test]
fn impulse_mpc_on_fir_plant_equals_ideal_mpc() {
    let mut cfg = ScenarioConfig::benchmark(4);
    cfg.plant = PlantConfig {
        num: vec![0.0, 0.5, -0.3, 0.2],
        den: vec![1.0, 0.0, 0.0, 0.0],
        drift: None,
    };
    cfg.data.sigma2 = 0.0;
    cfg.online.sigma2_p = 0.0;
    cfg.task.steps = 40;
    let ideal = closed_loop(&cfg.clone().with_kind(ControllerKind::IdealMpc), 0).unwrap();
    let fir = closed_loop(&cfg.with_kind(ControllerKind::ImpulseMpc), 0).unwrap();
    assert!(!ideal.failed() && !fir.failed());
    let gap = ideal
        .u
        .iter()
        .zip(&fir.u)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-8, "{gap}");
}

#[test]
fn deepc_approaches_exact_prediction_without_noise() {
    let ss = benchmark();
    let data = generate_data(&ss, 60, NoiseSpec::noise_free(), 3, 0).unwrap();
    let sm = SignalMatrix::build(&data, 4, 10).unwrap();
    let problem = DeePcProblem::new(&sm, CostSpec::new(1.0, 1.0, 10), 1e-8, 1e8).unwrap();
    let mut rng = rng::stream(3, 0, Role::Auxiliary);
    for _ in 0..5 {
        let (u_ini, y_ini, x) = random_window(&ss, 4, &mut rng);
        let reference = normals(&mut rng, 10);
        let sol = deepc_step(&problem, &u_ini, &y_ini, &reference, &BoxConstraints::none()).unwrap();
        let truth = simulate(&ss, &sol.u_plan, &x, 0.0, &mut rng).unwrap().y;
        let err = sol
            .y_pred
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }
}

#[test]
fn variance_penalty_shrinks_planned_g() {
    let ss = benchmark();
    let noise = NoiseSpec::new(0.1, 0.1).unwrap();
    let data = generate_data(&ss, 50, noise, 5, 0).unwrap();
    let model = SmmModel::new(SignalMatrix::build(&data, 4, 10).unwrap(), noise).unwrap();
    let mut rng = rng::stream(5, 0, Role::Auxiliary);
    for _ in 0..10 {
        let (u_ini, y_ini, _) = random_window(&ss, 4, &mut rng);
        let reference = normals(&mut rng, 10);
        let g0 = model.init_g(&u_ini, &y_ini, &reference).unwrap();
        let lin = model.linearize(&g0).unwrap();
        let mut previous = f64::INFINITY;
        for zeta in [0.0, 1.0, 10.0, 1e2, 1e3, 1e4] {
            let cost = CostSpec {
                zeta,
                ..CostSpec::new(1.0, 1.0, 10)
            };
            let plan = smmpc_step(&model, &lin, &u_ini, &y_ini, &reference, &cost, &BoxConstraints::none()).unwrap();
            let g2 = plan.g.norm_squared();
            assert!(g2 <= previous * (1.0 + 1e-9), "zeta {zeta}: {g2} > {previous}");
            previous = g2;
        }
    }
}

#[test]
fn closed_form_and_active_set_agree_without_bounds() {
    let mut rng = rng::stream(6, 0, Role::Auxiliary);
    for n in 1..=8 {
        let a = DMatrix::from_fn(n, n, |_, _| rng::standard_normal(&mut rng));
        let h = a.transpose() * &a + DMatrix::identity(n, n);
        let f = DVector::from_vec(normals(&mut rng, n));
        let qp = QpProblem::unconstrained(h, f);
        let x1 = qp_solve(&qp).unwrap().x;
        let x2 = qp_solve_active_set(&qp).unwrap().x;
        assert!((x1 - x2).amax() < 1e-10);
    }
}

#[test]
fn every_controller_completes_the_benchmark_task() {
    for kind in [
        ControllerKind::SmmPc,
        ControllerKind::Deepc,
        ControllerKind::IdealMpc,
        ControllerKind::ImpulseMpc,
    ] {
        let mut cfg = ScenarioConfig::benchmark(7).with_kind(kind);
        cfg.task.reference = ReferenceSpec::Constant { value: 0.3 };
        let run = closed_loop(&cfg, 0).unwrap();
        assert!(!run.failed(), "{kind:?}: {:?}", run.failure);
        assert_eq!(run.steps(), 120);
        assert!(run.j_tot.is_finite());
    }
}
