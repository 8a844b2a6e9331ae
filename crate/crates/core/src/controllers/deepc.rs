use nalgebra::{DMatrix, DVector};

use super::{BoxConstraints, Controller, ControllerStep, CostSpec, Observation, StepDiagnostics};
use crate::error::{check_len, Error, Result};
use crate::linalg::{orthogonal_complement, vstack, OrderedSvd};
use crate::qp::{qp_solve, AffineBounds, QpProblem, QpStatus};
use crate::signal_matrix::SignalMatrix;

/// Regularized DeePC with quadratic penalties,
///
/// ```text
/// minimize  J_ctr + lambda_g ||g||^2 + lambda_y ||Y_p g - y_ini||^2
/// s.t.      U_p g = u_ini,  u_hat = U_f g,  y_hat = Y_f g
/// ```
///
/// solved over `g = U_p^+ u_ini + N z` with `N` spanning `ker U_p`. Everything
/// that does not depend on the window is factored once.
#[derive(Debug, Clone)]
pub struct DeePcProblem {
    cost: CostSpec,
    lambda_g: f64,
    lambda_y: f64,
    up_pinv: DMatrix<f64>,
    null: DMatrix<f64>,
    uf: DMatrix<f64>,
    yp: DMatrix<f64>,
    yf: DMatrix<f64>,
    weight: DMatrix<f64>,
    h: DMatrix<f64>,
}

impl DeePcProblem {
    pub fn new(sm: &SignalMatrix, cost: CostSpec, lambda_g: f64, lambda_y: f64) -> Result<Self> {
        cost.validate()?;
        for (name, v) in [("lambda_g", lambda_g), ("lambda_y", lambda_y)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if cost.horizon != sm.lp() {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!(
                    "cost horizon {} differs from signal matrix horizon {}",
                    cost.horizon,
                    sm.lp()
                ),
            });
        }
        let up = sm.u_past();
        let m = sm.columns();
        let (up_pinv, null) = if up.nrows() == 0 {
            (DMatrix::zeros(m, 0), DMatrix::identity(m, m))
        } else {
            let svd = OrderedSvd::new(&up);
            let rank = svd.rank();
            if rank < up.nrows() {
                return Err(Error::SingularKkt {
                    rank,
                    rows: up.nrows(),
                    condition: svd.condition(),
                });
            }
            (svd.pinv(), orthogonal_complement(&svd.vt.transpose()))
        };
        let (uf, yp, yf) = (sm.u_future(), sm.y_past(), sm.y_future());
        let weight = yf.transpose() * &yf * cost.q
            + uf.transpose() * &uf * cost.r
            + DMatrix::identity(m, m) * lambda_g
            + yp.transpose() * &yp * lambda_y;
        let h = null.transpose() * &weight * &null * 2.0;
        let h = (&h + h.transpose()) * 0.5;
        Ok(Self {
            cost,
            lambda_g,
            lambda_y,
            up_pinv,
            null,
            uf,
            yp,
            yf,
            weight,
            h,
        })
    }

    pub fn lambda_g(&self) -> f64 {
        self.lambda_g
    }

    /// Regularized objective at `g`.
    pub fn objective(&self, g: &DVector<f64>, y_ini: &[f64], reference: &[f64]) -> f64 {
        let ey = &self.yf * g - DVector::from_column_slice(reference);
        let u = &self.uf * g;
        let ep = &self.yp * g - DVector::from_column_slice(y_ini);
        self.cost.q * ey.norm_squared()
            + self.cost.r * u.norm_squared()
            + self.lambda_g * g.norm_squared()
            + self.lambda_y * ep.norm_squared()
    }
}

#[derive(Debug, Clone)]
pub struct DeePcSolution {
    pub g: DVector<f64>,
    pub u_plan: Vec<f64>,
    pub y_pred: Vec<f64>,
    pub status: QpStatus,
    pub kkt_residual: f64,
    pub objective: f64,
}

pub fn deepc_step(
    problem: &DeePcProblem,
    u_ini: &[f64],
    y_ini: &[f64],
    reference: &[f64],
    cons: &BoxConstraints,
) -> Result<DeePcSolution> {
    check_len("u_ini", problem.up_pinv.ncols(), u_ini.len())?;
    check_len("y_ini", problem.yp.nrows(), y_ini.len())?;
    check_len("reference window", problem.yf.nrows(), reference.len())?;
    let g0 = &problem.up_pinv * DVector::from_column_slice(u_ini);
    let b = problem.yf.transpose() * DVector::from_column_slice(reference) * problem.cost.q
        + problem.yp.transpose() * DVector::from_column_slice(y_ini) * problem.lambda_y;
    let f = problem.null.transpose() * (&problem.weight * &g0 - b) * 2.0;
    let mut qp = QpProblem::unconstrained(problem.h.clone(), f);

    let lp = problem.yf.nrows();
    let mut maps = Vec::new();
    let mut offsets = Vec::new();
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    if cons.bounds_input() {
        maps.push(&problem.uf * &problem.null);
        offsets.push(&problem.uf * &g0);
        lower.extend(std::iter::repeat_n(cons.u_min, lp));
        upper.extend(std::iter::repeat_n(cons.u_max, lp));
    }
    if cons.bounds_output() {
        maps.push(&problem.yf * &problem.null);
        offsets.push(&problem.yf * &g0);
        lower.extend(std::iter::repeat_n(cons.y_min, lp));
        upper.extend(std::iter::repeat_n(cons.y_max, lp));
    }
    if !maps.is_empty() {
        let map_refs: Vec<&DMatrix<f64>> = maps.iter().collect();
        let offset = DVector::from_iterator(lower.len(), offsets.iter().flat_map(|o| o.iter().copied()));
        qp = qp.with_output(AffineBounds {
            map: vstack(&map_refs),
            offset,
            lower,
            upper,
        });
    }
    let sol = qp_solve(&qp)?;
    let g = g0 + &problem.null * &sol.x;
    Ok(DeePcSolution {
        u_plan: (&problem.uf * &g).iter().copied().collect(),
        y_pred: (&problem.yf * &g).iter().copied().collect(),
        objective: problem.objective(&g, y_ini, reference),
        status: sol.status,
        kkt_residual: sol.kkt_residual(),
        g,
    })
}

pub struct DeePc {
    problem: DeePcProblem,
    constraints: BoxConstraints,
}

impl DeePc {
    pub fn new(
        sm: &SignalMatrix,
        cost: CostSpec,
        constraints: BoxConstraints,
        lambda_g: f64,
        lambda_y: f64,
    ) -> Result<Self> {
        constraints.validate()?;
        Ok(Self {
            problem: DeePcProblem::new(sm, cost, lambda_g, lambda_y)?,
            constraints,
        })
    }
}

impl Controller for DeePc {
    fn name(&self) -> String {
        format!("deepc(lambda_g={})", self.problem.lambda_g)
    }

    fn step(&mut self, obs: &Observation<'_>) -> Result<ControllerStep> {
        let sol = deepc_step(&self.problem, obs.u_ini, obs.y_ini, obs.reference, &self.constraints)?;
        let mut diagnostics = StepDiagnostics {
            g_norm_sq: Some(sol.g.norm_squared()),
            qp_status: Some(sol.status),
            kkt_residual: Some(sol.kkt_residual),
            predicted_cost: Some(sol.objective),
            ..Default::default()
        };
        if sol.status != QpStatus::Optimal {
            let held = obs.u_ini.last().copied().unwrap_or(0.0);
            diagnostics.fallback = true;
            return Ok(ControllerStep {
                u: held,
                u_plan: vec![held; sol.u_plan.len()],
                y_pred: sol.y_pred,
                diagnostics,
            });
        }
        Ok(ControllerStep {
            u: sol.u_plan[0],
            u_plan: sol.u_plan,
            y_pred: sol.y_pred,
            diagnostics,
        })
    }
}
