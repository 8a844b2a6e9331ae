//! Closed-loop simulation and seeded Monte Carlo studies.
//!
//! A [`ScenarioConfig`] fixes the plant, the offline experiment, the online
//! noise, the controller and the task. [`closed_loop`] runs it once for a
//! given run index and [`monte_carlo`] runs it many times in parallel.
//!
//! Random streams are keyed by `(seed, run_index, role)`, so every controller
//! evaluated under the same seed and run index sees the same offline data and
//! the same measurement noise. Paired comparisons rely on this.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::controllers::{
    impulse_fir_identify, Adaptation, BoxConstraints, Controller, CostSpec, DeePc, IdealMpc, ImpulseMpc, Observation,
    SmmPc, SmmPcOptions,
};
use crate::error::{Error, Result};
use crate::plant::{
    drift_plant, generate_data, tf_to_ss, DataRecord, DriftSpec, NoiseSpec, StateSpace, TransferFunction,
};
use crate::rng::{self, Role};
use crate::signal_matrix::SignalMatrix;

mod io;
mod monte_carlo;
mod stats;

pub use io::{write_envelope_csv, write_runs_csv, write_summary_json, write_trajectories_csv, TRAJECTORY_COLUMNS};
pub use monte_carlo::{monte_carlo, monte_carlo_with_baseline, Envelope, McResult, McSummary, RunFailure};
pub use stats::{DiscrepancyStats, Stats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(default = "benchmark_num")]
    pub num: Vec<f64>,
    #[serde(default = "benchmark_den")]
    pub den: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
}

fn benchmark_num() -> Vec<f64> {
    TransferFunction::benchmark().num
}

fn benchmark_den() -> Vec<f64> {
    TransferFunction::benchmark().den
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            num: benchmark_num(),
            den: benchmark_den(),
            drift: None,
        }
    }
}

impl PlantConfig {
    pub fn transfer_function(&self) -> TransferFunction {
        TransferFunction::new(self.num.clone(), self.den.clone())
    }

    /// Realization at closed-loop time `t` (the offline experiment uses `t = 0`).
    pub fn at(&self, t: usize) -> Result<StateSpace> {
        let tf = self.transfer_function();
        match &self.drift {
            Some(d) => drift_plant(&tf, d, t as f64),
            None => tf_to_ss(&tf),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Offline experiment length `N`.
    pub length: usize,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineConfig {
    pub sigma2_p: f64,
    #[serde(default)]
    pub adapt: bool,
    #[serde(default = "one")]
    pub gamma: f64,
    /// Keep the signal matrix at `2L` columns (offline and after every append).
    #[serde(default)]
    pub compress: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    SmmPc,
    Deepc,
    IdealMpc,
    ImpulseMpc,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::SmmPc => "smm-pc",
            ControllerKind::Deepc => "deepc",
            ControllerKind::IdealMpc => "ideal-mpc",
            ControllerKind::ImpulseMpc => "impulse-mpc",
        }
    }

    /// Whether the controller is built from the offline signal matrix.
    pub fn uses_data(&self) -> bool {
        !matches!(self, ControllerKind::IdealMpc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "one")]
    pub r: f64,
    pub l0: usize,
    /// Prediction horizon `L'`.
    pub horizon: usize,
    #[serde(default)]
    pub zeta: f64,
    #[serde(default = "default_lambda_g")]
    pub lambda_g: f64,
    #[serde(default = "default_lambda_y")]
    pub lambda_y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<f64>,
    /// Evaluate the fully iterated SMM each step and record the discrepancy.
    #[serde(default)]
    pub track_discrepancy: bool,
}

fn default_lambda_g() -> f64 {
    100.0
}

fn default_lambda_y() -> f64 {
    1000.0
}

impl ControllerConfig {
    pub fn cost(&self) -> CostSpec {
        CostSpec {
            q: self.q,
            r: self.r,
            horizon: self.horizon,
            zeta: self.zeta,
        }
    }

    pub fn constraints(&self) -> BoxConstraints {
        BoxConstraints {
            u_min: self.u_min.unwrap_or(f64::NEG_INFINITY),
            u_max: self.u_max.unwrap_or(f64::INFINITY),
            y_min: self.y_min.unwrap_or(f64::NEG_INFINITY),
            y_max: self.y_max.unwrap_or(f64::INFINITY),
        }
    }

    pub fn depth(&self) -> usize {
        self.l0 + self.horizon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceSpec {
    /// `amplitude * sin(2 pi t / period)`.
    Sine {
        amplitude: f64,
        period: f64,
    },
    Constant {
        value: f64,
    },
    /// `before` for `t < at`, `after` from then on.
    Step {
        at: usize,
        before: f64,
        after: f64,
    },
}

impl ReferenceSpec {
    /// `0.5 sin(pi t / 10)`.
    pub fn benchmark() -> Self {
        ReferenceSpec::Sine {
            amplitude: 0.5,
            period: 20.0,
        }
    }
}

pub fn reference(spec: &ReferenceSpec, t: usize) -> f64 {
    match *spec {
        ReferenceSpec::Sine { amplitude, period } => amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin(),
        ReferenceSpec::Constant { value } => value,
        ReferenceSpec::Step { at, before, after } => {
            if t < at {
                before
            } else {
                after
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    /// Task length `N_c`.
    pub steps: usize,
    pub reference: ReferenceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub plant: PlantConfig,
    pub data: DataConfig,
    pub online: OnlineConfig,
    pub controller: ControllerConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub seed: u64,
}

/// One problem with a configuration, located by its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl ScenarioConfig {
    /// The shared benchmark setting: `Q = R = 1`, `L' = 10`, `L0 = 4`,
    /// `N_c = 120`, sinusoidal reference, SMM-PC with `N = 50` and
    /// `sigma^2 = sigma_p^2 = 0.1`.
    pub fn benchmark(seed: u64) -> Self {
        Self {
            plant: PlantConfig::default(),
            data: DataConfig {
                length: 50,
                sigma2: 0.1,
            },
            online: OnlineConfig {
                sigma2_p: 0.1,
                adapt: false,
                gamma: 1.0,
                compress: false,
            },
            controller: ControllerConfig {
                kind: ControllerKind::SmmPc,
                q: 1.0,
                r: 1.0,
                l0: 4,
                horizon: 10,
                zeta: 0.0,
                lambda_g: default_lambda_g(),
                lambda_y: default_lambda_y(),
                u_min: None,
                u_max: None,
                y_min: None,
                y_max: None,
                track_discrepancy: false,
            },
            task: TaskConfig {
                steps: 120,
                reference: ReferenceSpec::benchmark(),
            },
            seed,
        }
    }

    pub fn with_kind(mut self, kind: ControllerKind) -> Self {
        self.controller.kind = kind;
        self
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        NoiseSpec::new(self.data.sigma2, self.online.sigma2_p)
    }

    /// Every semantic problem, with key paths. Empty means valid.
    pub fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut push = |path: &str, message: String| {
            out.push(ConfigIssue {
                path: path.into(),
                message,
            })
        };
        let tf = self.plant.transfer_function();
        if let Err(e) = tf_to_ss(&tf) {
            push("plant", e.to_string());
        } else if let Some(d) = &self.plant.drift {
            if let Err(e) = d.validate(&tf) {
                push("plant.drift", e.to_string());
            }
        }
        if !(self.data.sigma2 >= 0.0 && self.data.sigma2.is_finite()) {
            push(
                "data.sigma2",
                format!("must be a finite non-negative variance, got {}", self.data.sigma2),
            );
        }
        if !(self.online.sigma2_p >= 0.0 && self.online.sigma2_p.is_finite()) {
            push(
                "online.sigma2_p",
                format!("must be a finite non-negative variance, got {}", self.online.sigma2_p),
            );
        }
        if !(self.online.gamma > 0.0 && self.online.gamma <= 1.0) {
            push(
                "online.gamma",
                format!("forgetting factor must lie in (0, 1], got {}", self.online.gamma),
            );
        }
        let c = &self.controller;
        if c.l0 == 0 {
            push("controller.l0", "must be at least one".into());
        }
        if c.horizon == 0 {
            push("controller.horizon", "must be at least one".into());
        }
        if !(c.q >= 0.0 && c.r >= 0.0) || (c.q == 0.0 && c.r == 0.0) {
            push(
                "controller.q",
                format!(
                    "weights must be non-negative and not both zero, got q={}, r={}",
                    c.q, c.r
                ),
            );
        }
        if !(c.zeta >= 0.0 && c.zeta.is_finite()) {
            push(
                "controller.zeta",
                format!("must be finite and non-negative, got {}", c.zeta),
            );
        }
        if !(c.lambda_g > 0.0 && c.lambda_g.is_finite()) {
            push(
                "controller.lambda_g",
                format!("must be finite and positive, got {}", c.lambda_g),
            );
        }
        if !(c.lambda_y > 0.0 && c.lambda_y.is_finite()) {
            push(
                "controller.lambda_y",
                format!("must be finite and positive, got {}", c.lambda_y),
            );
        }
        if let Err(e) = c.constraints().validate() {
            push("controller", e.to_string());
        }
        let l = c.depth();
        if self.data.length < l {
            push(
                "data.length",
                format!("must be at least L0 + L' = {l}, got {}", self.data.length),
            );
        } else if c.kind.uses_data() && self.data.length + 1 < 2 * l {
            push(
                "data.length",
                format!(
                    "the input Hankel matrix needs at least as many columns as rows: need N >= 2(L0 + L') - 1 = {}, got {}",
                    2 * l - 1,
                    self.data.length
                ),
            );
        }
        if self.task.steps == 0 {
            push("task.steps", "must be at least one".into());
        }
        match self.task.reference {
            ReferenceSpec::Sine { amplitude, period } => {
                if !amplitude.is_finite() {
                    push("task.reference.amplitude", "must be finite".into());
                }
                if !(period > 0.0 && period.is_finite()) {
                    push(
                        "task.reference.period",
                        format!("must be finite and positive, got {period}"),
                    );
                }
            }
            ReferenceSpec::Constant { value } => {
                if !value.is_finite() {
                    push("task.reference.value", "must be finite".into());
                }
            }
            ReferenceSpec::Step { before, after, .. } => {
                if !(before.is_finite() && after.is_finite()) {
                    push("task.reference", "levels must be finite".into());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            return Ok(());
        }
        Err(Error::Config {
            path: issues[0].path.clone(),
            message: issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "),
        })
    }

    /// Short label naming the controller and its distinguishing parameters.
    pub fn label(&self) -> String {
        let c = &self.controller;
        match c.kind {
            ControllerKind::SmmPc => {
                let mut s = format!("smm-pc_l0={}", c.l0);
                if self.online.adapt {
                    s += &format!("_adaptive_gamma={}", fmt_param(self.online.gamma));
                } else {
                    s += "_fixed";
                }
                if c.zeta > 0.0 {
                    s += &format!("_zeta={}", fmt_param(c.zeta));
                }
                s
            }
            ControllerKind::Deepc => format!("deepc_lambda_g={}", fmt_param(c.lambda_g)),
            ControllerKind::IdealMpc => "ideal-mpc".into(),
            ControllerKind::ImpulseMpc => format!("impulse-mpc_l0={}", c.l0),
        }
    }
}

/// Compact, file-name friendly number formatting.
pub(crate) fn fmt_param(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Offline experiment for `(cfg.seed, run_index)` on the `t = 0` plant.
pub fn offline_data(cfg: &ScenarioConfig, run_index: u64) -> Result<DataRecord> {
    let ss = cfg.plant.at(0)?;
    generate_data(&ss, cfg.data.length, cfg.noise()?, cfg.seed, run_index)
}

/// Controller described by `cfg`, built from the offline experiment `data`.
pub fn build_controller(cfg: &ScenarioConfig, data: &DataRecord) -> Result<Box<dyn Controller>> {
    let c = &cfg.controller;
    let cost = c.cost();
    let constraints = c.constraints();
    let noise = cfg.noise()?;
    let sm = || SignalMatrix::build(data, c.l0, c.horizon);
    Ok(match c.kind {
        ControllerKind::SmmPc => {
            let opts = SmmPcOptions {
                cost,
                constraints,
                adaptation: cfg.online.adapt.then_some(Adaptation {
                    gamma: cfg.online.gamma,
                    compress: cfg.online.compress,
                }),
                compress: cfg.online.compress,
                track_discrepancy: c.track_discrepancy,
            };
            Box::new(SmmPc::new(sm()?, noise, opts)?)
        }
        ControllerKind::Deepc => Box::new(DeePc::new(&sm()?, cost, constraints, c.lambda_g, c.lambda_y)?),
        ControllerKind::IdealMpc => Box::new(IdealMpc::new(cost, constraints)?),
        ControllerKind::ImpulseMpc => {
            let fir = impulse_fir_identify(&sm()?, &noise)?;
            Box::new(ImpulseMpc::new(fir, cost, constraints)?)
        }
    })
}

/// Closed-loop series and metrics of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub label: String,
    pub seed: u64,
    pub run_index: u64,
    pub r: Vec<f64>,
    /// Applied inputs.
    pub u: Vec<f64>,
    /// Measured outputs, with online noise.
    pub y: Vec<f64>,
    /// Noise-free outputs.
    pub y0: Vec<f64>,
    /// `q (y0_t - r_t)^2 + r u_t^2`.
    pub stage_cost: Vec<f64>,
    pub discrepancy: Vec<Option<f64>>,
    pub g_norm_sq: Vec<Option<f64>>,
    pub lambda: Vec<Option<f64>>,
    /// Steps where the QP failed and the previous input was held.
    pub fallbacks: usize,
    pub j_tot: f64,
    /// Input part of the total cost, `sum r u_t^2`.
    pub j_tot_u: f64,
    /// Set when the controller failed; the series stop at the failing step.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.u.len()
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Time average of `||g_t||^2` over steps that report it.
    pub fn mean_g_norm_sq(&self) -> Option<f64> {
        mean_some(&self.g_norm_sq)
    }

    pub fn discrepancies(&self) -> Vec<f64> {
        self.discrepancy.iter().flatten().copied().collect()
    }

    /// `J_tot` summed again from the stored series.
    pub fn recomputed_j_tot(&self, cost: &CostSpec) -> f64 {
        (0..self.steps())
            .map(|t| cost.stage_cost(self.y0[t], self.r[t], self.u[t]))
            .sum()
    }
}

fn mean_some(v: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = v.iter().flatten().copied().collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Run `cfg` with its own controller for run `run_index`.
pub fn closed_loop(cfg: &ScenarioConfig, run_index: u64) -> Result<RunResult> {
    cfg.validate()?;
    let data = offline_data(cfg, run_index)?;
    let mut controller = build_controller(cfg, &data)?;
    closed_loop_with(cfg, run_index, controller.as_mut(), &data)
}

/// Run a caller-supplied controller on the plant, data and noise of `cfg`.
///
/// The last `L0` offline samples serve as the past window at `t = 0` and the
/// plant state continues from the end of the experiment. After the step at
/// time `t`, once `t + 1 >= L`, the latest length-`L` window is passed to
/// [`Controller::observe_window`].
pub fn closed_loop_with(
    cfg: &ScenarioConfig,
    run_index: u64,
    controller: &mut dyn Controller,
    data: &DataRecord,
) -> Result<RunResult> {
    let c = &cfg.controller;
    let (l0, lp, l) = (c.l0, c.horizon, c.depth());
    if data.len() < l0 {
        return Err(Error::DataTooShort {
            needed: l0,
            available: data.len(),
        });
    }
    let cost = c.cost();
    let sigma_p = cfg.online.sigma2_p.sqrt();
    let mut meas_rng = rng::stream(cfg.seed, run_index, Role::MeasurementNoise);
    let n_c = cfg.task.steps;

    let mut u_hist = data.u.clone();
    let mut y_hist = data.y.clone();
    let mut x: DVector<f64> = data.x_final.clone();
    let static_plant = match cfg.plant.drift {
        None => Some(cfg.plant.at(0)?),
        Some(_) => None,
    };

    let mut res = RunResult {
        label: cfg.label(),
        seed: cfg.seed,
        run_index,
        r: Vec::with_capacity(n_c),
        u: Vec::with_capacity(n_c),
        y: Vec::with_capacity(n_c),
        y0: Vec::with_capacity(n_c),
        stage_cost: Vec::with_capacity(n_c),
        discrepancy: Vec::with_capacity(n_c),
        g_norm_sq: Vec::with_capacity(n_c),
        lambda: Vec::with_capacity(n_c),
        fallbacks: 0,
        j_tot: 0.0,
        j_tot_u: 0.0,
        failure: None,
    };

    for t in 0..n_c {
        let drifting;
        let ss = match &static_plant {
            Some(ss) => ss,
            None => {
                drifting = cfg.plant.at(t)?;
                &drifting
            }
        };
        let reference: Vec<f64> = (t..t + lp).map(|k| reference(&cfg.task.reference, k)).collect();
        let h = u_hist.len();
        let obs = Observation {
            t,
            u_ini: &u_hist[h - l0..],
            y_ini: &y_hist[h - l0..],
            reference: &reference,
            u_history: &u_hist,
            plant: Some(ss),
            state: Some(&x),
        };
        let step = match controller.step(&obs) {
            Ok(s) if s.u.is_finite() => s,
            Ok(s) => {
                res.failure = Some(format!("step {t}: non-finite input {}", s.u));
                break;
            }
            Err(e) => {
                res.failure = Some(format!("step {t}: {e}"));
                break;
            }
        };
        let u = step.u;
        let y0 = ss.output(&x, u);
        let y = y0 + sigma_p * rng::standard_normal(&mut meas_rng);
        x = ss.advance(&x, u);
        u_hist.push(u);
        y_hist.push(y);

        let j_t = cost.stage_cost(y0, reference[0], u);
        res.r.push(reference[0]);
        res.u.push(u);
        res.y.push(y);
        res.y0.push(y0);
        res.stage_cost.push(j_t);
        res.discrepancy.push(step.diagnostics.discrepancy);
        res.g_norm_sq.push(step.diagnostics.g_norm_sq);
        res.lambda.push(step.diagnostics.lambda);
        res.fallbacks += usize::from(step.diagnostics.fallback);
        res.j_tot += j_t;
        res.j_tot_u += cost.r * u * u;

        if t + 1 >= l {
            let h = u_hist.len();
            if let Err(e) = controller.observe_window(&u_hist[h - l..], &y_hist[h - l..]) {
                res.failure = Some(format!("step {t}: data update failed: {e}"));
                break;
            }
        }
    }
    Ok(res)
}

/// Per-step `|y0_t - y0_t^base|` between two runs and its aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub series: Vec<f64>,
    /// Euclidean norm of the series.
    pub norm: f64,
    /// Time average of the series.
    pub mean: f64,
}

pub fn deviation_from_baseline(run: &RunResult, baseline: &RunResult) -> Result<Deviation> {
    if run.y0.len() != baseline.y0.len() {
        return Err(Error::DimensionMismatch {
            context: "deviation from baseline",
            expected: baseline.y0.len(),
            actual: run.y0.len(),
        });
    }
    let series: Vec<f64> = run.y0.iter().zip(&baseline.y0).map(|(a, b)| (a - b).abs()).collect();
    let norm = series.iter().map(|d| d * d).sum::<f64>().sqrt();
    let mean = if series.is_empty() {
        0.0
    } else {
        series.iter().sum::<f64>() / series.len() as f64
    };
    Ok(Deviation { series, norm, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let spec = ReferenceSpec::benchmark();
        assert_eq!(reference(&spec, 0), 0.0);
        assert!((reference(&spec, 5) - 0.5).abs() < 1e-15);
        for t in 0..40 {
            assert!((reference(&spec, t) - reference(&spec, t + 20)).abs() < 1e-12);
        }
        assert_eq!(
            reference(
                &ReferenceSpec::Step {
                    at: 3,
                    before: 0.0,
                    after: 1.0
                },
                2
            ),
            0.0
        );
        assert_eq!(
            reference(
                &ReferenceSpec::Step {
                    at: 3,
                    before: 0.0,
                    after: 1.0
                },
                3
            ),
            1.0
        );
    }

    #[test]
    fn benchmark_config_is_valid_and_labelled() {
        let cfg = ScenarioConfig::benchmark(1);
        assert!(cfg.issues().is_empty(), "{:?}", cfg.issues());
        assert_eq!(cfg.label(), "smm-pc_l0=4_fixed");
        assert_eq!(
            cfg.clone().with_kind(ControllerKind::Deepc).label(),
            "deepc_lambda_g=100"
        );
    }

    #[test]
    fn issues_carry_key_paths() {
        let mut cfg = ScenarioConfig::benchmark(1);
        cfg.data.length = 20;
        cfg.online.gamma = 1.5;
        cfg.controller.zeta = -1.0;
        let paths: Vec<String> = cfg.issues().into_iter().map(|i| i.path).collect();
        assert_eq!(paths, vec!["online.gamma", "controller.zeta", "data.length"]);
        assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn closed_loop_records_consistent_series() {
        let mut cfg = ScenarioConfig::benchmark(7);
        cfg.task.steps = 30;
        let run = closed_loop(&cfg, 0).unwrap();
        assert!(!run.failed());
        assert_eq!(run.steps(), 30);
        assert!(run.stage_cost.iter().all(|&j| j >= 0.0));
        assert!((run.recomputed_j_tot(&cfg.controller.cost()) - run.j_tot).abs() < 1e-12);
        let u_cost: f64 = run.u.iter().map(|u| u * u).sum();
        assert!((u_cost - run.j_tot_u).abs() < 1e-12);
        assert!(run.g_norm_sq.iter().all(Option::is_some));
    }

    #[test]
    fn deviation_of_identical_runs_is_zero() {
        let mut cfg = ScenarioConfig::benchmark(3);
        cfg.task.steps = 10;
        let run = closed_loop(&cfg, 0).unwrap();
        let d = deviation_from_baseline(&run, &run).unwrap();
        assert!(d.series.iter().all(|&v| v == 0.0));
        assert_eq!(d.norm, 0.0);
        let mut short = run.clone();
        short.y0.pop();
        assert!(deviation_from_baseline(&short, &run).is_err());
    }
}
