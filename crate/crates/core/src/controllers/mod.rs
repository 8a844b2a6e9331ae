//! Receding-horizon controllers behind one interface.
//!
//! Every controller sees the same [`Observation`] each step (past window,
//! reference segment and, for the model-based baselines, the true plant and
//! state) and returns one applied input.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::plant::StateSpace;
use crate::qp::{AffineBounds, QpProblem, QpStatus};

mod deepc;
mod mpc;
mod smmpc;

pub use deepc::{deepc_step, DeePc, DeePcProblem, DeePcSolution};
pub use mpc::{
    condensed_prediction, fir_prediction, ideal_mpc_step, impulse_fir_identify, impulse_mpc_step, IdealMpc, ImpulseMpc,
};
pub use smmpc::{smmpc_step, Adaptation, SmmPc, SmmPcOptions, SmmPlan};

/// Quadratic tracking weights, horizon and the prediction-variance penalty `zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub q: f64,
    pub r: f64,
    pub horizon: usize,
    #[serde(default)]
    pub zeta: f64,
}

impl CostSpec {
    pub fn new(q: f64, r: f64, horizon: usize) -> Self {
        Self {
            q,
            r,
            horizon,
            zeta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.r >= 0.0) || (self.q == 0.0 && self.r == 0.0) {
            return Err(Error::InvalidParameter {
                name: "q/r",
                reason: format!(
                    "weights must be non-negative and not both zero, got q={}, r={}",
                    self.q, self.r
                ),
            });
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: "must be at least one".into(),
            });
        }
        if !(self.zeta >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "zeta",
                reason: format!("must be non-negative, got {}", self.zeta),
            });
        }
        Ok(())
    }

    pub fn stage_cost(&self, y: f64, r: f64, u: f64) -> f64 {
        self.q * (y - r) * (y - r) + self.r * u * u
    }
}

/// Per-step input and output bounds, the same at every step of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxConstraints {
    pub u_min: f64,
    pub u_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for BoxConstraints {
    fn default() -> Self {
        Self::none()
    }
}

impl BoxConstraints {
    pub fn none() -> Self {
        Self {
            u_min: f64::NEG_INFINITY,
            u_max: f64::INFINITY,
            y_min: f64::NEG_INFINITY,
            y_max: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u_min > self.u_max
            || self.y_min > self.y_max
            || [self.u_min, self.u_max, self.y_min, self.y_max]
                .iter()
                .any(|v| v.is_nan())
        {
            return Err(Error::InvalidParameter {
                name: "constraints",
                reason: format!("bounds must satisfy min <= max, got {self:?}"),
            });
        }
        Ok(())
    }

    pub fn bounds_input(&self) -> bool {
        self.u_min.is_finite() || self.u_max.is_finite()
    }

    pub fn bounds_output(&self) -> bool {
        self.y_min.is_finite() || self.y_max.is_finite()
    }
}

/// What a controller sees at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub t: usize,
    /// Last `L0` applied inputs.
    pub u_ini: &'a [f64],
    /// Last `L0` measured (noisy) outputs.
    pub y_ini: &'a [f64],
    /// `r_t .. r_{t+L'-1}`.
    pub reference: &'a [f64],
    /// Every input applied so far, oldest first, including the offline experiment.
    pub u_history: &'a [f64],
    /// True plant and noise-free state, for the model-based baselines only.
    pub plant: Option<&'a StateSpace>,
    pub state: Option<&'a DVector<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub g_norm_sq: Option<f64>,
    pub lambda: Option<f64>,
    pub qp_status: Option<QpStatus>,
    pub kkt_residual: Option<f64>,
    /// Predicted horizon cost of the optimized plan.
    pub predicted_cost: Option<f64>,
    /// Linearized vs fully iterated prediction discrepancy.
    pub discrepancy: Option<f64>,
    /// The QP failed and the previous input was re-applied.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct ControllerStep {
    pub u: f64,
    pub u_plan: Vec<f64>,
    pub y_pred: Vec<f64>,
    pub diagnostics: StepDiagnostics,
}

pub trait Controller: Send {
    fn name(&self) -> String;

    fn step(&mut self, obs: &Observation<'_>) -> Result<ControllerStep>;

    /// A new length-`L` window `(u, y)` ending at the latest sample. Adaptive
    /// controllers fold it into their data; the rest ignore it.
    fn observe_window(&mut self, _u_win: &[f64], _y_win: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// Quadratic penalty `weight * ||offset + map x||^2` added to the tracking cost.
pub(crate) struct Penalty<'a> {
    pub weight: f64,
    pub offset: &'a DVector<f64>,
    pub map: &'a DMatrix<f64>,
}

/// Tracking QP in the future inputs for the affine prediction
/// `y_hat = offset + map * u_hat`: `q ||y_hat - r||^2 + r ||u_hat||^2 (+ penalty)`.
/// Returns the problem and the constant dropped from its objective.
pub(crate) fn tracking_qp(
    offset: &DVector<f64>,
    map: &DMatrix<f64>,
    reference: &[f64],
    cost: &CostSpec,
    cons: &BoxConstraints,
    penalty: Option<Penalty<'_>>,
) -> Result<(QpProblem, f64)> {
    let n = map.ncols();
    check_len("reference window", map.nrows(), reference.len())?;
    let err0 = offset - DVector::from_column_slice(reference);
    let mut h = (map.transpose() * map) * (2.0 * cost.q) + DMatrix::identity(n, n) * (2.0 * cost.r);
    let mut f = (map.transpose() * &err0) * (2.0 * cost.q);
    let mut constant = cost.q * err0.norm_squared();
    if let Some(p) = penalty {
        if p.weight > 0.0 {
            h += (p.map.transpose() * p.map) * (2.0 * p.weight);
            f += (p.map.transpose() * p.offset) * (2.0 * p.weight);
            constant += p.weight * p.offset.norm_squared();
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    let mut qp = QpProblem::unconstrained(h, f);
    if cons.bounds_input() {
        qp = qp.with_box(vec![cons.u_min; n], vec![cons.u_max; n]);
    }
    if cons.bounds_output() {
        qp = qp.with_output(AffineBounds {
            map: map.clone(),
            offset: offset.clone(),
            lower: vec![cons.y_min; map.nrows()],
            upper: vec![cons.y_max; map.nrows()],
        });
    }
    Ok((qp, constant))
}
