//! Maximum-likelihood signal matrix model.
//!
//! For a signal matrix `col(U, Y)` the model estimates the combination vector
//! `g` by the reweighted ridge problem
//!
//! ```text
//! minimize  lambda(g_k) ||g||^2 + ||Y_p g - y_ini||^2   subject to  U g = col(u_ini, u_hat)
//! lambda(g) = L' sigma_p^2 / ||g||^2 + L sigma^2
//! ```
//!
//! and predicts `y_hat = Y_f g`. The equality-constrained problem is solved by
//! the null-space method: `g = U^+ u + N z` with `N` an orthonormal basis of
//! `ker U`, so for a fixed matrix every `lambda` costs one diagonal rescaling
//! of a precomputed SVD of `Y_p N`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{check_len, Error, Result};
use crate::linalg::{orthogonal_complement, vcat, vstack, OrderedSvd};
use crate::plant::NoiseSpec;
use crate::signal_matrix::SignalMatrix;

/// Relative change in `g` below which the fixed-point iteration stops.
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 50;
/// `lambda` never drops below this multiple of `trace(Y_p^T Y_p) / M`.
pub const LAMBDA_FLOOR_SCALE: f64 = 1e-12;

/// `L' sigma_p^2 / ||g||^2 + L sigma^2`, without any floor.
pub fn lambda_update(g_norm_sq: f64, noise: &NoiseSpec, l: usize, lp: usize) -> Result<f64> {
    let data_term = l as f64 * noise.sigma2;
    if noise.sigma2_p == 0.0 {
        return Ok(data_term);
    }
    if !(g_norm_sq > 0.0) {
        return Err(Error::ZeroWarmStart);
    }
    Ok(lp as f64 * noise.sigma2_p / g_norm_sq + data_term)
}

/// Factorized solver for `min lambda ||g||^2 + ||Y_p g - y||^2 s.t. U g = u`.
#[derive(Debug, Clone)]
pub struct SmmSolver {
    u: DMatrix<f64>,
    yp: DMatrix<f64>,
    u_pinv: DMatrix<f64>,
    // Y_p N = W diag(s) V^T, stored as (N V, W, s).
    nv: DMatrix<f64>,
    w: DMatrix<f64>,
    s: DVector<f64>,
    yp_upinv: DMatrix<f64>,
    lambda_floor: f64,
}

impl SmmSolver {
    /// Fails with [`Error::SingularKkt`] when `U` lacks full row rank.
    pub fn new(u: &DMatrix<f64>, yp: &DMatrix<f64>) -> Result<Self> {
        check_len("Y_p columns", u.ncols(), yp.ncols())?;
        let m = u.ncols();
        let rows = u.nrows();
        let (u_pinv, null) = if rows == 0 {
            (DMatrix::zeros(m, 0), DMatrix::identity(m, m))
        } else {
            let svd = OrderedSvd::new(u);
            let rank = svd.rank();
            if rank < rows {
                return Err(Error::SingularKkt {
                    rank,
                    rows,
                    condition: svd.condition(),
                });
            }
            let row_space = svd.vt.transpose();
            (svd.pinv(), orthogonal_complement(&row_space))
        };
        let a = yp * &null;
        let svd_a = OrderedSvd::new(&a);
        let nv = &null * svd_a.vt.transpose();
        let yp_upinv = yp * &u_pinv;
        let lambda_floor = if m == 0 {
            0.0
        } else {
            LAMBDA_FLOOR_SCALE * yp.norm_squared() / m as f64
        };
        Ok(Self {
            u: u.clone(),
            yp: yp.clone(),
            u_pinv,
            nv,
            w: svd_a.u,
            s: svd_a.s,
            yp_upinv,
            lambda_floor,
        })
    }

    pub fn for_matrix(sm: &SignalMatrix) -> Result<Self> {
        Self::new(sm.u(), &sm.y_past())
    }

    pub fn columns(&self) -> usize {
        self.u.ncols()
    }

    pub fn lambda_floor(&self) -> f64 {
        self.lambda_floor
    }

    /// `lambda_update` clamped below at the floor.
    pub fn lambda(&self, g_norm_sq: f64, noise: &NoiseSpec, l: usize, lp: usize) -> Result<f64> {
        Ok(lambda_update(g_norm_sq, noise, l, lp)?.max(self.lambda_floor))
    }

    fn ridge_weights(&self, lambda: f64) -> DVector<f64> {
        self.s.map(|s| if s > 0.0 { s / (s * s + lambda) } else { 0.0 })
    }

    /// Minimizer for a given `lambda > 0`.
    pub fn solve(&self, lambda: f64, y_ini: &DVector<f64>, u_stack: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("y_ini", self.yp.nrows(), y_ini.len())?;
        check_len("u_stack", self.u.nrows(), u_stack.len())?;
        let g_part = &self.u_pinv * u_stack;
        let resid = y_ini - &self.yp * &g_part;
        let coeff = (self.w.transpose() * resid).component_mul(&self.ridge_weights(lambda));
        Ok(g_part + &self.nv * coeff)
    }

    /// Affine solution map `g = P y_ini + Q u_stack` at a fixed `lambda`.
    pub fn solution_map(&self, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = DMatrix::from_diagonal(&self.ridge_weights(lambda));
        let p = &self.nv * d * self.w.transpose();
        let q = &self.u_pinv - &p * &self.yp_upinv;
        (p, q)
    }

    /// Residual of the KKT system
    /// `[lambda I + Y_p^T Y_p, U^T; U, 0] [g; nu] = [Y_p^T y_ini; u_stack]`
    /// at `g`, with the multiplier recovered by least squares.
    pub fn kkt_residual(
        &self,
        lambda: f64,
        g: &DVector<f64>,
        y_ini: &DVector<f64>,
        u_stack: &DVector<f64>,
    ) -> KktResidual {
        let ypt_y = self.yp.transpose() * y_ini;
        let hg = g * lambda + self.yp.transpose() * (&self.yp * g);
        let nu = self.u_pinv.transpose() * (&ypt_y - &hg);
        let stationarity = &hg + self.u.transpose() * &nu - &ypt_y;
        let feasibility = &self.u * g - u_stack;
        KktResidual {
            multiplier: nu,
            residual: (stationarity.norm_squared() + feasibility.norm_squared()).sqrt(),
            rhs_norm: (ypt_y.norm_squared() + u_stack.norm_squared()).sqrt(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KktResidual {
    pub multiplier: DVector<f64>,
    pub residual: f64,
    pub rhs_norm: f64,
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub g: DVector<f64>,
    pub multiplier: DVector<f64>,
    pub residual: f64,
    pub rhs_norm: f64,
}

/// One equality-constrained ridge solve,
/// `argmin lambda ||g||^2 + ||Y_p g - y_ini||^2 s.t. U g = u_stack`.
pub fn kkt_solve(
    lambda: f64,
    u: &DMatrix<f64>,
    yp: &DMatrix<f64>,
    u_stack: &DVector<f64>,
    y_ini: &DVector<f64>,
) -> Result<KktSolution> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: format!("must be positive, got {lambda}"),
        });
    }
    let solver = SmmSolver::new(u, yp)?;
    let g = solver.solve(lambda, y_ini, u_stack)?;
    let res = solver.kkt_residual(lambda, &g, y_ini, u_stack);
    Ok(KktSolution {
        g,
        multiplier: res.multiplier,
        residual: res.residual,
        rhs_norm: res.rhs_norm,
    })
}

/// A signal matrix with its solver and noise model.
#[derive(Debug, Clone)]
pub struct SmmModel {
    sm: SignalMatrix,
    solver: SmmSolver,
    noise: NoiseSpec,
}

impl SmmModel {
    pub fn new(sm: SignalMatrix, noise: NoiseSpec) -> Result<Self> {
        let solver = SmmSolver::for_matrix(&sm)?;
        Ok(Self { sm, solver, noise })
    }

    pub fn signal_matrix(&self) -> &SignalMatrix {
        &self.sm
    }

    pub fn solver(&self) -> &SmmSolver {
        &self.solver
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn lambda(&self, g_norm_sq: f64) -> Result<f64> {
        self.solver
            .lambda(g_norm_sq, &self.noise, self.sm.depth(), self.sm.lp())
    }

    fn stack(&self, u_ini: &[f64], u_hat: &[f64]) -> Result<DVector<f64>> {
        check_len("u_ini", self.sm.l0(), u_ini.len())?;
        check_len("u_hat", self.sm.lp(), u_hat.len())?;
        Ok(vcat(&[u_ini, u_hat]))
    }

    /// Fixed-point iteration from `g0` until the relative change in `g`
    /// drops below `tol`, or `max_iter` solves have been made.
    pub fn iterate(
        &self,
        u_ini: &[f64],
        y_ini: &[f64],
        u_hat: &[f64],
        g0: &DVector<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<Iterated> {
        check_len("y_ini", self.sm.l0(), y_ini.len())?;
        let u_stack = self.stack(u_ini, u_hat)?;
        let y_ini = DVector::from_column_slice(y_ini);
        let mut g = g0.clone();
        let mut prev_lambda = None;
        for k in 0..max_iter {
            let lambda = self.lambda(g.norm_squared())?;
            if prev_lambda == Some(lambda) {
                // Same weight as the previous solve: g is already its fixed point.
                return Ok(Iterated {
                    g,
                    iterations: k,
                    converged: true,
                    lambda,
                });
            }
            let next = self.solver.solve(lambda, &y_ini, &u_stack)?;
            let scale = g.norm();
            let change = (&next - &g).norm();
            let converged = if scale > 0.0 {
                change / scale < tol
            } else {
                change == 0.0
            };
            g = next;
            prev_lambda = Some(lambda);
            if converged {
                return Ok(Iterated {
                    g,
                    iterations: k + 1,
                    converged: true,
                    lambda,
                });
            }
        }
        let lambda = self.lambda(g.norm_squared())?;
        Ok(Iterated {
            g,
            iterations: max_iter,
            converged: false,
            lambda,
        })
    }

    /// One warm-started iterate as an affine map of `(y_ini, col(u_ini, u_hat))`.
    /// Only `||g_prev||` enters, so the warm start may come from a matrix with
    /// a different column count.
    pub fn linearize(&self, g_prev: &DVector<f64>) -> Result<SmmLinearization> {
        let lambda = self.lambda(g_prev.norm_squared())?;
        let (p, q) = self.solver.solution_map(lambda);
        Ok(SmmLinearization {
            p,
            q,
            g_warm: g_prev.clone(),
            lambda,
            l0: self.sm.l0(),
        })
    }

    pub fn predict(&self, g: &DVector<f64>) -> Result<Prediction> {
        predict(&self.sm, g, &self.noise)
    }

    pub fn init_g(&self, u0: &[f64], y0: &[f64], r0: &[f64]) -> Result<DVector<f64>> {
        init_g(&self.sm, u0, y0, r0)
    }
}

/// Outcome of [`SmmModel::iterate`]; `converged == false` flags a run that hit
/// `max_iter`.
#[derive(Debug, Clone)]
pub struct Iterated {
    pub g: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub lambda: f64,
}

/// `g = P y_ini + Q col(u_ini, u_hat)` around the warm start `g_warm`.
#[derive(Debug, Clone)]
pub struct SmmLinearization {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub g_warm: DVector<f64>,
    pub lambda: f64,
    l0: usize,
}

impl SmmLinearization {
    pub fn g(&self, y_ini: &[f64], u_ini: &[f64], u_hat: &[f64]) -> Result<DVector<f64>> {
        check_len("y_ini", self.p.ncols(), y_ini.len())?;
        check_len("u_ini", self.l0, u_ini.len())?;
        check_len("u_stack", self.q.ncols(), u_ini.len() + u_hat.len())?;
        Ok(&self.p * DVector::from_column_slice(y_ini) + &self.q * vcat(&[u_ini, u_hat]))
    }

    /// Split into `g = offset + Q_f u_hat` for a fixed past window.
    pub fn affine_in_future_input(&self, y_ini: &[f64], u_ini: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_len("y_ini", self.p.ncols(), y_ini.len())?;
        check_len("u_ini", self.l0, u_ini.len())?;
        let lp = self.q.ncols() - self.l0;
        let offset = &self.p * DVector::from_column_slice(y_ini)
            + self.q.columns(0, self.l0) * DVector::from_column_slice(u_ini);
        Ok((offset, self.q.columns(self.l0, lp).into_owned()))
    }
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub y_hat: DVector<f64>,
    /// Per-sample prediction variance `sigma^2 ||g||^2`.
    pub variance: f64,
}

pub fn predict(sm: &SignalMatrix, g: &DVector<f64>, noise: &NoiseSpec) -> Result<Prediction> {
    check_len("g", sm.columns(), g.len())?;
    Ok(Prediction {
        y_hat: sm.y_future() * g,
        variance: noise.sigma2 * g.norm_squared(),
    })
}

/// `L x L` covariance of `col(Y_p g - y_ini, Y_f g)` given `g`:
/// `sigma^2 sum_k g_k g_{k+|i-j|}`, plus `sigma_p^2` on the first `l0`
/// diagonal entries.
pub fn covariance(g: &DVector<f64>, noise: &NoiseSpec, l0: usize, l: usize) -> DMatrix<f64> {
    let m = g.len();
    let lag: Vec<f64> = (0..l)
        .map(|d| {
            if d >= m {
                0.0
            } else {
                (0..m - d).map(|k| g[k] * g[k + d]).sum::<f64>()
            }
        })
        .collect();
    DMatrix::from_fn(l, l, |i, j| {
        let base = noise.sigma2 * lag[i.abs_diff(j)];
        if i == j && i < l0 {
            base + noise.sigma2_p
        } else {
            base
        }
    })
}

/// Negative log-likelihood (up to constants) of the exact model,
/// `logdet(Sigma) + e^T Sigma^{-1} e` with `e = col(Y_p g - y_ini, 0)`.
/// `None` when `Sigma` is not positive definite.
pub fn neg_log_likelihood(
    sm: &SignalMatrix,
    g: &DVector<f64>,
    noise: &NoiseSpec,
    y_ini: &[f64],
) -> Result<Option<f64>> {
    check_len("g", sm.columns(), g.len())?;
    check_len("y_ini", sm.l0(), y_ini.len())?;
    let sigma = covariance(g, noise, sm.l0(), sm.depth());
    let Some(chol) = Cholesky::new(sigma) else {
        return Ok(None);
    };
    let mut e = DVector::zeros(sm.depth());
    let ep = sm.y_past() * g - DVector::from_column_slice(y_ini);
    e.rows_mut(0, sm.l0()).copy_from(&ep);
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(Some(logdet + e.dot(&chol.solve(&e))))
}

/// `pinv(col(U_p, Y_p, Y_f)) col(u0, y0, r0)`, truncating singular values
/// below `max(dim) * eps * s_1`.
pub fn init_g(sm: &SignalMatrix, u0: &[f64], y0: &[f64], r0: &[f64]) -> Result<DVector<f64>> {
    check_len("u0", sm.l0(), u0.len())?;
    check_len("y0", sm.l0(), y0.len())?;
    check_len("r0", sm.lp(), r0.len())?;
    let stacked = vstack(&[&sm.u_past(), &sm.y_past(), &sm.y_future()]);
    Ok(OrderedSvd::new(&stacked).pinv() * vcat(&[u0, y0, r0]))
}

/// `||y_lin - y_smm|| / ||y_smm||`.
pub fn discrepancy(y_lin: &[f64], y_smm: &[f64]) -> Result<f64> {
    check_len("discrepancy", y_smm.len(), y_lin.len())?;
    let den = y_smm.iter().map(|v| v * v).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let num = y_lin
        .iter()
        .zip(y_smm)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / den)
}
