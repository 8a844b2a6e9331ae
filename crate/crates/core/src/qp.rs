//! Dense convex QP with box and two-sided affine bounds,
//!
//! ```text
//! minimize   1/2 x^T H x + f^T x
//! subject to lower <= x <= upper,   out_lower <= offset + C x <= out_upper
//! ```
//!
//! The unconstrained problem is solved in closed form. With bounds, the dual
//! active-set method of Goldfarb and Idnani is used: it starts from the
//! unconstrained minimizer, adds the most violated constraint and restores
//! dual feasibility by dropping constraints. It needs no feasible start and
//! detects infeasibility. The projection operators are recomputed densely each
//! step; the problems here have at most a few dozen variables.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineBounds {
    pub map: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub output: Option<AffineBounds>,
}

impl QpProblem {
    pub fn unconstrained(h: DMatrix<f64>, f: DVector<f64>) -> Self {
        let n = f.len();
        Self {
            h,
            f,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            output: None,
        }
    }

    pub fn with_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_output(mut self, bounds: AffineBounds) -> Self {
        self.output = Some(bounds);
        self
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.f.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        check_len("QP Hessian rows", n, self.h.nrows())?;
        check_len("QP Hessian columns", n, self.h.ncols())?;
        check_len("QP lower bounds", n, self.lower.len())?;
        check_len("QP upper bounds", n, self.upper.len())?;
        for i in 0..n {
            if self.lower[i] > self.upper[i] {
                return Err(Error::InfeasibleBounds {
                    index: i,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        if let Some(out) = &self.output {
            let k = out.map.nrows();
            check_len("output map columns", n, out.map.ncols())?;
            check_len("output offset", k, out.offset.len())?;
            check_len("output lower bounds", k, out.lower.len())?;
            check_len("output upper bounds", k, out.upper.len())?;
            for i in 0..k {
                if out.lower[i] > out.upper[i] {
                    return Err(Error::InfeasibleBounds {
                        index: n + i,
                        lower: out.lower[i],
                        upper: out.upper[i],
                    });
                }
            }
        }
        Ok(())
    }

    /// One-sided rows `n^T x >= b` for every finite bound.
    fn inequality_rows(&self) -> Vec<(DVector<f64>, f64)> {
        let n = self.dim();
        let mut rows = Vec::new();
        for i in 0..n {
            if self.lower[i].is_finite() {
                rows.push((unit(n, i, 1.0), self.lower[i]));
            }
            if self.upper[i].is_finite() {
                rows.push((unit(n, i, -1.0), -self.upper[i]));
            }
        }
        if let Some(out) = &self.output {
            for k in 0..out.map.nrows() {
                let c = out.map.row(k).transpose();
                if out.lower[k].is_finite() {
                    rows.push((c.clone(), out.lower[k] - out.offset[k]));
                }
                if out.upper[k].is_finite() {
                    rows.push((-c, out.offset[k] - out.upper[k]));
                }
            }
        }
        rows
    }
}

fn unit(n: usize, i: usize, sign: f64) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = sign;
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    /// Diagonal shift added to make `H` factorizable (zero when `H` was PD).
    pub jitter: f64,
    /// Indices (into the one-sided constraint rows) of the active set.
    pub active: Vec<usize>,
    pub multipliers: Vec<f64>,
    /// `||H x + f - sum mu_i n_i||`.
    pub stationarity: f64,
    /// Largest bound violation.
    pub violation: f64,
    /// Largest `|mu_i * slack_i|` over the active set.
    pub complementarity: f64,
}

impl QpSolution {
    pub fn kkt_residual(&self) -> f64 {
        self.stationarity.max(self.violation).max(self.complementarity)
    }
}

fn factor(h: &DMatrix<f64>) -> (Cholesky<f64, Dyn>, f64) {
    if let Some(c) = Cholesky::new(h.clone()) {
        return (c, 0.0);
    }
    let n = h.nrows();
    let scale = h.diagonal().amax().max(1.0);
    let mut jitter = 1e-12 * scale;
    loop {
        let shifted = h + DMatrix::identity(n, n) * jitter;
        if let Some(c) = Cholesky::new(shifted) {
            return (c, jitter);
        }
        jitter *= 10.0;
    }
}

/// Solve with the closed form when unconstrained, else by the dual active-set method.
pub fn qp_solve(qp: &QpProblem) -> Result<QpSolution> {
    qp.validate()?;
    let rows = qp.inequality_rows();
    if rows.is_empty() {
        let (chol, jitter) = factor(&qp.h);
        let x = -chol.solve(&qp.f);
        return Ok(finish(qp, &rows, x, QpStatus::Optimal, 0, jitter, vec![], vec![]));
    }
    Ok(dual_active_set(qp, &rows))
}

/// The active-set path even when no bound is finite.
pub fn qp_solve_active_set(qp: &QpProblem) -> Result<QpSolution> {
    qp.validate()?;
    let rows = qp.inequality_rows();
    Ok(dual_active_set(qp, &rows))
}

fn dual_active_set(qp: &QpProblem, rows: &[(DVector<f64>, f64)]) -> QpSolution {
    let (chol, jitter) = factor(&qp.h);
    let hinv = chol.inverse();
    let mut x = -&hinv * &qp.f;
    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let max_iter = 10 * (qp.dim() + rows.len()) + 50;
    let slack = |x: &DVector<f64>, j: usize| rows[j].0.dot(x) - rows[j].1;
    let tol = |x: &DVector<f64>, j: usize| 1e-11 * (1.0 + rows[j].1.abs() + rows[j].0.dot(x).abs());

    let mut iterations = 0;
    loop {
        // Most violated constraint outside the active set.
        let violated = (0..rows.len())
            .filter(|j| !active.contains(j))
            .map(|j| (j, slack(&x, j)))
            .filter(|&(j, s)| s < -tol(&x, j))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let Some((p, _)) = violated else {
            return finish(qp, rows, x, QpStatus::Optimal, iterations, jitter, active, mult);
        };
        let np = &rows[p].0;
        let mut mult_plus = mult.clone();
        mult_plus.push(0.0);

        loop {
            iterations += 1;
            if iterations > max_iter {
                mult_plus.pop();
                return finish(qp, rows, x, QpStatus::MaxIter, iterations, jitter, active, mult_plus);
            }
            let q = active.len();
            let hinv_np = &hinv * np;
            let (z, r) = if q == 0 {
                (hinv_np, DVector::zeros(0))
            } else {
                let nmat = DMatrix::from_fn(qp.dim(), q, |i, c| rows[active[c]].0[i]);
                let hinv_n = &hinv * &nmat;
                let k = nmat.transpose() * &hinv_n;
                let rhs = nmat.transpose() * &hinv_np;
                let r = match Cholesky::new(k.clone()) {
                    Some(c) => c.solve(&rhs),
                    None => k.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(q)),
                };
                (hinv_np - hinv_n * &r, r)
            };

            // Partial step: the largest dual step keeping active multipliers >= 0.
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for j in 0..q {
                if r[j] > 1e-14 {
                    let t = mult_plus[j] / r[j];
                    if t < t1 {
                        t1 = t;
                        drop = Some(j);
                    }
                }
            }
            // Full step: the primal step making constraint p active.
            let curvature = z.dot(np);
            let reference = np.dot(&(&hinv * np));
            let t2 = if curvature > 1e-12 * reference.max(f64::MIN_POSITIVE) {
                -slack(&x, p) / curvature
            } else {
                f64::INFINITY
            };

            if t1.is_infinite() && t2.is_infinite() {
                mult_plus.pop();
                return finish(qp, rows, x, QpStatus::Infeasible, iterations, jitter, active, mult_plus);
            }
            let t = t1.min(t2);
            for j in 0..q {
                mult_plus[j] -= t * r[j];
            }
            mult_plus[q] += t;
            if t2.is_finite() {
                x += &z * t;
            }
            if t2 <= t1 {
                active.push(p);
                mult = mult_plus;
                break;
            }
            let k = drop.expect("partial step has a blocking constraint");
            active.remove(k);
            mult_plus.remove(k);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    qp: &QpProblem,
    rows: &[(DVector<f64>, f64)],
    x: DVector<f64>,
    status: QpStatus,
    iterations: usize,
    jitter: f64,
    active: Vec<usize>,
    multipliers: Vec<f64>,
) -> QpSolution {
    let mut grad = &qp.h * &x + &qp.f;
    let mut complementarity: f64 = 0.0;
    for (&j, &mu) in active.iter().zip(&multipliers) {
        grad -= &rows[j].0 * mu;
        complementarity = complementarity.max((mu * (rows[j].0.dot(&x) - rows[j].1)).abs());
    }
    let violation = rows.iter().map(|(n, b)| (b - n.dot(&x)).max(0.0)).fold(0.0, f64::max);
    QpSolution {
        x,
        status,
        iterations,
        jitter,
        active,
        multipliers,
        stationarity: grad.norm(),
        violation,
        complementarity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Role};

    fn randn(r: &mut crate::rng::StreamRng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng::standard_normal(r)).collect()
    }

    /// Accelerated projected gradient on the box, run to a tight tolerance.
    fn projected_gradient(qp: &QpProblem) -> DVector<f64> {
        let n = qp.dim();
        let lmax = nalgebra::SymmetricEigen::new(qp.h.clone()).eigenvalues.max();
        let step = 1.0 / lmax;
        let project = |v: &DVector<f64>| DVector::from_fn(n, |i, _| v[i].clamp(qp.lower[i], qp.upper[i]));
        let mut x = project(&DVector::zeros(n));
        let mut y = x.clone();
        let mut t: f64 = 1.0;
        for _ in 0..200_000 {
            let grad = &qp.h * &y + &qp.f;
            let next = project(&(&y - grad * step));
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &next + (&next - &x) * ((t - 1.0) / t_next);
            let moved = (&next - &x).norm();
            x = next;
            t = t_next;
            if moved < 1e-15 {
                break;
            }
        }
        x
    }

    #[test]
    fn unconstrained_closed_form() {
        let qp = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -2.0]));
        let sol = qp_solve(&qp).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x - DVector::from_vec(vec![1.0, 2.0])).norm() < 1e-15);
    }

    #[test]
    fn separable_projection() {
        let qp = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -2.0]))
            .with_box(vec![f64::NEG_INFINITY; 2], vec![0.5, 0.5]);
        let sol = qp_solve(&qp).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((&sol.x - DVector::from_vec(vec![0.5, 0.5])).norm() < 1e-14);
        assert!(sol.kkt_residual() < 1e-8);
        assert!(sol.multipliers.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn matches_projected_gradient_on_random_boxes() {
        let mut r = rng::stream(2024, 0, Role::Auxiliary);
        for case in 0..50 {
            let n = 1 + case % 6;
            let b = DMatrix::from_vec(n, n, randn(&mut r, n * n));
            let h = b.transpose() * &b + DMatrix::identity(n, n) * 0.1;
            let f = DVector::from_vec(randn(&mut r, n)) * 3.0;
            let lower: Vec<f64> = randn(&mut r, n).iter().map(|v| -0.5 - v.abs()).collect();
            let upper: Vec<f64> = randn(&mut r, n).iter().map(|v| 0.5 + v.abs()).collect();
            let qp = QpProblem::unconstrained(h, f).with_box(lower, upper);
            let sol = qp_solve(&qp).unwrap();
            let oracle = projected_gradient(&qp);
            assert_eq!(sol.status, QpStatus::Optimal);
            assert!((&sol.x - &oracle).amax() < 1e-6, "case {case}: {} vs {}", sol.x, oracle);
            assert!(
                sol.kkt_residual() < 1e-8,
                "case {case}: residual {}",
                sol.kkt_residual()
            );
        }
    }

    #[test]
    fn closed_form_and_active_set_agree_without_bounds() {
        let mut r = rng::stream(5, 0, Role::Auxiliary);
        let b = DMatrix::from_vec(10, 10, randn(&mut r, 100));
        let h = b.transpose() * &b + DMatrix::identity(10, 10);
        let qp = QpProblem::unconstrained(h, DVector::from_vec(randn(&mut r, 10)));
        let a = qp_solve(&qp).unwrap();
        let b = qp_solve_active_set(&qp).unwrap();
        assert!((a.x - b.x).amax() < 1e-10);
    }

    #[test]
    fn output_bounds_certified_by_kkt() {
        let mut r = rng::stream(6, 0, Role::Auxiliary);
        for _ in 0..20 {
            let n = 4;
            let b = DMatrix::from_vec(n, n, randn(&mut r, n * n));
            let h = b.transpose() * &b + DMatrix::identity(n, n) * 0.5;
            let f = DVector::from_vec(randn(&mut r, n)) * 4.0;
            let map = DMatrix::from_vec(3, n, randn(&mut r, 3 * n));
            let out = AffineBounds {
                map,
                offset: DVector::from_vec(randn(&mut r, 3)) * 0.1,
                lower: vec![-0.4; 3],
                upper: vec![0.4; 3],
            };
            let qp = QpProblem::unconstrained(h, f)
                .with_box(vec![-1.0; n], vec![1.0; n])
                .with_output(out);
            let sol = qp_solve(&qp).unwrap();
            assert_eq!(sol.status, QpStatus::Optimal);
            assert!(sol.kkt_residual() < 1e-8, "residual {}", sol.kkt_residual());
            assert!(sol.multipliers.iter().all(|&m| m >= -1e-12));
        }
    }

    #[test]
    fn infeasible_constraints_reported() {
        let qp = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_box(vec![0.0, 0.0], vec![1.0, 1.0])
            .with_output(AffineBounds {
                map: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                offset: DVector::zeros(1),
                lower: vec![3.0],
                upper: vec![f64::INFINITY],
            });
        assert_eq!(qp_solve(&qp).unwrap().status, QpStatus::Infeasible);
    }

    #[test]
    fn inconsistent_bounds_rejected() {
        let qp = QpProblem::unconstrained(DMatrix::identity(1, 1), DVector::zeros(1)).with_box(vec![1.0], vec![0.0]);
        assert!(matches!(qp_solve(&qp), Err(Error::InfeasibleBounds { index: 0, .. })));
    }

    #[test]
    fn psd_hessian_gets_jitter() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let qp =
            QpProblem::unconstrained(h, DVector::from_vec(vec![-1.0, 1.0])).with_box(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let sol = qp_solve(&qp).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!(sol.jitter > 0.0);
        assert!((sol.x[0] - 1.0).abs() < 1e-9 && (sol.x[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn equal_bounds_pin_variable() {
        let qp = QpProblem::unconstrained(DMatrix::identity(2, 2), DVector::from_vec(vec![-1.0, -1.0]))
            .with_box(vec![0.3, f64::NEG_INFINITY], vec![0.3, f64::INFINITY]);
        let sol = qp_solve(&qp).unwrap();
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.x[0] - 0.3).abs() < 1e-14 && (sol.x[1] - 1.0).abs() < 1e-14);
    }
}
