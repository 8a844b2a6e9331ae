use nalgebra::{DMatrix, DVector};

use super::{tracking_qp, BoxConstraints, Controller, ControllerStep, CostSpec, Observation, StepDiagnostics};
use crate::error::{check_len, Error, Result};
use crate::plant::{NoiseSpec, StateSpace};
use crate::qp::{qp_solve, QpStatus};
use crate::signal_matrix::SignalMatrix;
use crate::smm::{SmmModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// `y_hat = Phi x + Gamma u_hat` over `horizon` steps; `Gamma` is lower
/// triangular Toeplitz in the Markov parameters `h_0 = D, h_1 = CB, ...`.
pub fn condensed_prediction(ss: &StateSpace, x: &DVector<f64>, horizon: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_len("state", ss.order(), x.len())?;
    let free = ss.observability(horizon) * x;
    let gamma = toeplitz(&ss.markov_params(horizon));
    Ok((free, gamma))
}

fn toeplitz(h: &[f64]) -> DMatrix<f64> {
    let n = h.len();
    DMatrix::from_fn(n, n, |k, j| if j <= k { h[k - j] } else { 0.0 })
}

fn plan_to_step(
    qp_sol: crate::qp::QpSolution,
    qp: &crate::qp::QpProblem,
    constant: f64,
    offset: &DVector<f64>,
    map: &DMatrix<f64>,
    held: f64,
) -> ControllerStep {
    let y_pred: Vec<f64> = (offset + map * &qp_sol.x).iter().copied().collect();
    let mut diagnostics = StepDiagnostics {
        qp_status: Some(qp_sol.status),
        kkt_residual: Some(qp_sol.kkt_residual()),
        predicted_cost: Some(qp.objective(&qp_sol.x) + constant),
        ..Default::default()
    };
    if qp_sol.status != QpStatus::Optimal {
        diagnostics.fallback = true;
        return ControllerStep {
            u: held,
            u_plan: vec![held; qp_sol.x.len()],
            y_pred,
            diagnostics,
        };
    }
    ControllerStep {
        u: qp_sol.x[0],
        u_plan: qp_sol.x.iter().copied().collect(),
        y_pred,
        diagnostics,
    }
}

/// Finite-horizon MPC with the true model and noise-free state, no terminal cost.
pub fn ideal_mpc_step(
    ss: &StateSpace,
    x: &DVector<f64>,
    reference: &[f64],
    cost: &CostSpec,
    cons: &BoxConstraints,
    held: f64,
) -> Result<ControllerStep> {
    let (offset, map) = condensed_prediction(ss, x, cost.horizon)?;
    let (qp, constant) = tracking_qp(&offset, &map, reference, cost, cons, None)?;
    let sol = qp_solve(&qp)?;
    Ok(plan_to_step(sol, &qp, constant, &offset, &map, held))
}

pub struct IdealMpc {
    cost: CostSpec,
    constraints: BoxConstraints,
}

impl IdealMpc {
    pub fn new(cost: CostSpec, constraints: BoxConstraints) -> Result<Self> {
        cost.validate()?;
        constraints.validate()?;
        Ok(Self { cost, constraints })
    }
}

impl Controller for IdealMpc {
    fn name(&self) -> String {
        "ideal-mpc".into()
    }

    fn step(&mut self, obs: &Observation<'_>) -> Result<ControllerStep> {
        let (Some(ss), Some(x)) = (obs.plant, obs.state) else {
            return Err(Error::InvalidParameter {
                name: "observation",
                reason: "ideal MPC needs the true plant and state".into(),
            });
        };
        let held = obs.u_history.last().copied().unwrap_or(0.0);
        ideal_mpc_step(ss, x, obs.reference, &self.cost, &self.constraints, held)
    }
}

/// Impulse response `h_0 .. h_{L'-1}` read off the signal matrix model: the
/// fully iterated prediction for a zero past window, a unit input at the
/// first step, and no online noise.
pub fn impulse_fir_identify(sm: &SignalMatrix, noise: &NoiseSpec) -> Result<Vec<f64>> {
    let offline_only = NoiseSpec {
        sigma2: noise.sigma2,
        sigma2_p: 0.0,
    };
    let model = SmmModel::new(sm.clone(), offline_only)?;
    let zeros = vec![0.0; sm.l0()];
    let mut impulse = vec![0.0; sm.lp()];
    impulse[0] = 1.0;
    let u_stack = crate::linalg::vcat(&[&zeros, &impulse]);
    let g0 = crate::linalg::pinv(sm.u()) * u_stack;
    let it = model.iterate(&zeros, &zeros, &impulse, &g0, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(model.predict(&it.g)?.y_hat.iter().copied().collect())
}

/// Prediction by truncated convolution of the input history and the plan
/// with a fixed FIR model `h_0 .. h_{n-1}`.
pub fn fir_prediction(fir: &[f64], u_history: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n = fir.len();
    let past = |back: usize| -> f64 {
        // back = 1 is the most recent applied input
        if back <= u_history.len() {
            u_history[u_history.len() - back]
        } else {
            0.0
        }
    };
    let offset = DVector::from_fn(n, |k, _| (k + 1..n).map(|i| fir[i] * past(i - k)).sum());
    (offset, toeplitz(fir))
}

pub fn impulse_mpc_step(
    fir: &[f64],
    u_history: &[f64],
    reference: &[f64],
    cost: &CostSpec,
    cons: &BoxConstraints,
) -> Result<ControllerStep> {
    check_len("FIR length", cost.horizon, fir.len())?;
    let (offset, map) = fir_prediction(fir, u_history);
    let (qp, constant) = tracking_qp(&offset, &map, reference, cost, cons, None)?;
    let sol = qp_solve(&qp)?;
    let held = u_history.last().copied().unwrap_or(0.0);
    Ok(plan_to_step(sol, &qp, constant, &offset, &map, held))
}

/// MPC on a fixed FIR predictor identified offline; it never uses measured outputs.
pub struct ImpulseMpc {
    fir: Vec<f64>,
    cost: CostSpec,
    constraints: BoxConstraints,
}

impl ImpulseMpc {
    pub fn new(fir: Vec<f64>, cost: CostSpec, constraints: BoxConstraints) -> Result<Self> {
        cost.validate()?;
        constraints.validate()?;
        check_len("FIR length", cost.horizon, fir.len())?;
        Ok(Self { fir, cost, constraints })
    }

    pub fn fir(&self) -> &[f64] {
        &self.fir
    }
}

impl Controller for ImpulseMpc {
    fn name(&self) -> String {
        "impulse-mpc".into()
    }

    fn step(&mut self, obs: &Observation<'_>) -> Result<ControllerStep> {
        impulse_mpc_step(&self.fir, obs.u_history, obs.reference, &self.cost, &self.constraints)
    }
}
