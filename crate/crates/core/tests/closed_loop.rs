use nalgebra::DVector;

use smmpc::controllers::{BoxConstraints, CostSpec, IdealMpc};
use smmpc::harness::{
    closed_loop, closed_loop_with, deviation_from_baseline, monte_carlo, offline_data, ControllerKind, ReferenceSpec,
    ScenarioConfig,
};
use smmpc::plant::{DataRecord, NoiseSpec};

#[test]
fn ideal_mpc_from_rest_with_zero_reference_costs_nothing() {
    let mut cfg = ScenarioConfig::benchmark(0).with_kind(ControllerKind::IdealMpc);
    cfg.data.sigma2 = 0.0;
    cfg.online.sigma2_p = 0.0;
    cfg.task.reference = ReferenceSpec::Constant { value: 0.0 };
    let data = DataRecord {
        u: vec![0.0; 8],
        y: vec![0.0; 8],
        y0: vec![0.0; 8],
        noise: NoiseSpec::noise_free(),
        seed: 0,
        x_final: DVector::zeros(4),
    };
    let mut mpc = IdealMpc::new(CostSpec::new(1.0, 1.0, 10), BoxConstraints::none()).unwrap();
    let run = closed_loop_with(&cfg, 0, &mut mpc, &data).unwrap();
    assert_eq!(run.steps(), 120);
    assert_eq!(run.j_tot, 0.0);
}

#[test]
fn identical_configs_give_identical_runs() {
    for kind in [ControllerKind::SmmPc, ControllerKind::Deepc] {
        let cfg = ScenarioConfig::benchmark(11).with_kind(kind);
        assert_eq!(closed_loop(&cfg, 3).unwrap(), closed_loop(&cfg, 3).unwrap());
    }
}

#[test]
fn total_cost_matches_stored_series() {
    for kind in [ControllerKind::SmmPc, ControllerKind::Deepc, ControllerKind::ImpulseMpc] {
        let cfg = ScenarioConfig::benchmark(12).with_kind(kind);
        let run = closed_loop(&cfg, 0).unwrap();
        let recomputed = run.recomputed_j_tot(&cfg.controller.cost());
        assert!((recomputed - run.j_tot).abs() < 1e-12 * (1.0 + run.j_tot));
        let summed: f64 = run.stage_cost.iter().sum();
        assert!((summed - run.j_tot).abs() < 1e-12 * (1.0 + run.j_tot));
        assert!(run.stage_cost.iter().all(|j| *j >= 0.0));
        let input: f64 = run.u.iter().map(|u| cfg.controller.r * u * u).sum();
        assert!((input - run.j_tot_u).abs() < 1e-12 * (1.0 + input));
    }
}

#[test]
fn online_noise_level_leaves_other_streams_alone() {
    let quiet = {
        let mut c = ScenarioConfig::benchmark(13).with_kind(ControllerKind::IdealMpc);
        c.online.sigma2_p = 0.01;
        c
    };
    let loud = {
        let mut c = quiet.clone();
        c.online.sigma2_p = 0.25;
        c
    };
    let (dq, dl) = (offline_data(&quiet, 2).unwrap(), offline_data(&loud, 2).unwrap());
    assert_eq!((dq.u, dq.y, dq.x_final), (dl.u, dl.y, dl.x_final));
    // Ideal MPC acts on the true state, so only the measurement noise differs,
    // and it comes from the same normal draws scaled by sigma_p.
    let (a, b) = (closed_loop(&quiet, 2).unwrap(), closed_loop(&loud, 2).unwrap());
    assert_eq!(a.u, b.u);
    assert_eq!(a.y0, b.y0);
    for t in 0..a.steps() {
        let (wa, wb) = ((a.y[t] - a.y0[t]) / 0.1, (b.y[t] - b.y0[t]) / 0.5);
        assert!((wa - wb).abs() < 1e-9);
    }
}

#[test]
fn controllers_share_noise_realizations() {
    let smm = ScenarioConfig::benchmark(14);
    let deepc = smm.clone().with_kind(ControllerKind::Deepc);
    assert_eq!(offline_data(&smm, 5).unwrap(), offline_data(&deepc, 5).unwrap());
    let (a, b) = (closed_loop(&smm, 5).unwrap(), closed_loop(&deepc, 5).unwrap());
    for t in 0..a.steps() {
        assert!(((a.y[t] - a.y0[t]) - (b.y[t] - b.y0[t])).abs() < 1e-12);
    }
}

#[test]
fn deviation_from_itself_is_zero() {
    let run = closed_loop(&ScenarioConfig::benchmark(15), 0).unwrap();
    let d = deviation_from_baseline(&run, &run).unwrap();
    assert!(d.series.iter().all(|v| *v == 0.0));
    assert_eq!((d.norm, d.mean), (0.0, 0.0));
}

#[test]
fn compressed_and_plain_controllers_apply_the_same_inputs() {
    let plain = ScenarioConfig::benchmark(16);
    let mut compressed = plain.clone();
    compressed.online.compress = true;
    for run in 0..3 {
        let (a, b) = (
            closed_loop(&plain, run).unwrap(),
            closed_loop(&compressed, run).unwrap(),
        );
        let gap = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "run {run}: {gap}");
    }
}

#[test]
fn adaptive_compressed_matches_adaptive_plain() {
    let mut plain = ScenarioConfig::benchmark(17);
    plain.online.adapt = true;
    plain.task.steps = 60;
    let mut compressed = plain.clone();
    compressed.online.compress = true;
    let (a, b) = (closed_loop(&plain, 0).unwrap(), closed_loop(&compressed, 0).unwrap());
    let gap = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-6, "{gap}");
}

#[test]
fn larger_zeta_lowers_input_cost_in_the_median() {
    let base = ScenarioConfig::benchmark(18);
    let medians: Vec<f64> = [0.0, 1e2, 1e4]
        .into_iter()
        .map(|zeta| {
            let mut c = base.clone();
            c.controller.zeta = zeta;
            monte_carlo(&c, 10, 0).unwrap().summary.j_tot_u.unwrap().median
        })
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}
