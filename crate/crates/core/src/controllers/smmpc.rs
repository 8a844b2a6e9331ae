use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{tracking_qp, BoxConstraints, Controller, ControllerStep, CostSpec, Observation, Penalty, StepDiagnostics};
use crate::error::{check_len, Error, Result};
use crate::plant::NoiseSpec;
use crate::qp::{qp_solve, QpStatus};
use crate::signal_matrix::SignalMatrix;
use crate::smm::{discrepancy, SmmLinearization, SmmModel, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Online data update of the signal matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adaptation {
    pub gamma: f64,
    /// Keep the matrix at `2L` columns by recompressing after each append.
    pub compress: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmmPcOptions {
    pub cost: CostSpec,
    pub constraints: BoxConstraints,
    pub adaptation: Option<Adaptation>,
    /// Compress the offline matrix to `2L` columns before the first step.
    pub compress: bool,
    /// Also run the full iteration each step and record the discrepancy.
    pub track_discrepancy: bool,
}

impl SmmPcOptions {
    pub fn new(cost: CostSpec) -> Self {
        Self {
            cost,
            constraints: BoxConstraints::none(),
            adaptation: None,
            compress: false,
            track_discrepancy: false,
        }
    }
}

/// Optimized plan of one linearized step.
#[derive(Debug, Clone)]
pub struct SmmPlan {
    pub u_plan: Vec<f64>,
    pub y_pred: Vec<f64>,
    pub g: DVector<f64>,
    pub status: QpStatus,
    pub kkt_residual: f64,
    pub predicted_cost: f64,
}

/// Solve the tracking QP with the linearized model as the predictor,
/// `y_hat = Y_f (P y_ini + Q col(u_ini, u_hat))`, plus `zeta sigma^2 ||g||^2`.
pub fn smmpc_step(
    model: &SmmModel,
    lin: &SmmLinearization,
    u_ini: &[f64],
    y_ini: &[f64],
    reference: &[f64],
    cost: &CostSpec,
    cons: &BoxConstraints,
) -> Result<SmmPlan> {
    let yf = model.signal_matrix().y_future();
    check_len("reference window", yf.nrows(), reference.len())?;
    let (g_offset, g_map) = lin.affine_in_future_input(y_ini, u_ini)?;
    let y_offset = &yf * &g_offset;
    let y_map = &yf * &g_map;
    let penalty = Penalty {
        weight: cost.zeta * model.noise().sigma2,
        offset: &g_offset,
        map: &g_map,
    };
    let (qp, constant) = tracking_qp(&y_offset, &y_map, reference, cost, cons, Some(penalty))?;
    let sol = qp_solve(&qp)?;
    let g = &g_offset + &g_map * &sol.x;
    Ok(SmmPlan {
        y_pred: (&y_offset + &y_map * &sol.x).iter().copied().collect(),
        u_plan: sol.x.iter().copied().collect(),
        predicted_cost: qp.objective(&sol.x) + constant,
        kkt_residual: sol.kkt_residual(),
        status: sol.status,
        g,
    })
}

/// Signal matrix model predictive control with a linearized predictor,
/// warm-started from the previous step's `g`.
pub struct SmmPc {
    model: SmmModel,
    opts: SmmPcOptions,
    g_prev: Option<DVector<f64>>,
}

impl SmmPc {
    pub fn new(sm: SignalMatrix, noise: NoiseSpec, opts: SmmPcOptions) -> Result<Self> {
        opts.cost.validate()?;
        opts.constraints.validate()?;
        if opts.cost.horizon != sm.lp() {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!(
                    "cost horizon {} differs from signal matrix horizon {}",
                    opts.cost.horizon,
                    sm.lp()
                ),
            });
        }
        if let Some(a) = &opts.adaptation {
            if !(a.gamma > 0.0 && a.gamma <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "gamma",
                    reason: format!("forgetting factor must lie in (0, 1], got {}", a.gamma),
                });
            }
        }
        let sm = if opts.compress { sm.compress() } else { sm };
        Ok(Self {
            model: SmmModel::new(sm, noise)?,
            opts,
            g_prev: None,
        })
    }

    pub fn model(&self) -> &SmmModel {
        &self.model
    }

    pub fn warm_start(&self) -> Option<&DVector<f64>> {
        self.g_prev.as_ref()
    }
}

impl Controller for SmmPc {
    fn name(&self) -> String {
        "smm-pc".into()
    }

    fn step(&mut self, obs: &Observation<'_>) -> Result<ControllerStep> {
        let g_prev = match self.g_prev.take() {
            Some(g) => g,
            None => self.model.init_g(obs.u_ini, obs.y_ini, obs.reference)?,
        };
        let lin = match self.model.linearize(&g_prev) {
            Ok(lin) => lin,
            Err(e) => {
                self.g_prev = Some(g_prev);
                return Err(e);
            }
        };
        let plan = smmpc_step(
            &self.model,
            &lin,
            obs.u_ini,
            obs.y_ini,
            obs.reference,
            &self.opts.cost,
            &self.opts.constraints,
        );
        let plan = match plan {
            Ok(p) => p,
            Err(e) => {
                self.g_prev = Some(g_prev);
                return Err(e);
            }
        };
        let mut diagnostics = StepDiagnostics {
            lambda: Some(lin.lambda),
            qp_status: Some(plan.status),
            kkt_residual: Some(plan.kkt_residual),
            predicted_cost: Some(plan.predicted_cost),
            ..Default::default()
        };

        if plan.status != QpStatus::Optimal {
            // Keep the warm start and hold the previous input.
            let held = obs.u_ini.last().copied().unwrap_or(0.0);
            diagnostics.g_norm_sq = Some(g_prev.norm_squared());
            diagnostics.fallback = true;
            self.g_prev = Some(g_prev);
            return Ok(ControllerStep {
                u: held,
                u_plan: vec![held; self.opts.cost.horizon],
                y_pred: plan.y_pred,
                diagnostics,
            });
        }

        diagnostics.g_norm_sq = Some(plan.g.norm_squared());
        if self.opts.track_discrepancy {
            let full = self.model.iterate(
                obs.u_ini,
                obs.y_ini,
                &plan.u_plan,
                &g_prev,
                DEFAULT_TOL,
                DEFAULT_MAX_ITER,
            )?;
            let y_smm: Vec<f64> = (self.model.signal_matrix().y_future() * &full.g)
                .iter()
                .copied()
                .collect();
            diagnostics.discrepancy = discrepancy(&plan.y_pred, &y_smm).ok();
        }
        self.g_prev = Some(plan.g);
        Ok(ControllerStep {
            u: plan.u_plan[0],
            u_plan: plan.u_plan,
            y_pred: plan.y_pred,
            diagnostics,
        })
    }

    fn observe_window(&mut self, u_win: &[f64], y_win: &[f64]) -> Result<()> {
        let Some(a) = self.opts.adaptation else {
            return Ok(());
        };
        let sm = self.model.signal_matrix();
        let next = if a.compress {
            sm.append_online(u_win, y_win, a.gamma)?
        } else {
            sm.append_column(u_win, y_win, a.gamma)?
        };
        self.model = SmmModel::new(next, *self.model.noise())?;
        Ok(())
    }
}
