//! SISO discrete-time plants: transfer functions, their controllable
//! canonical realization, noisy simulation and offline data collection.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rng::{self, Role};

/// `num(z) / den(z)` with coefficients in descending powers of `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl TransferFunction {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Self {
        Self { num, den }
    }

    /// The fourth-order lightly damped benchmark plant
    /// `0.1159 (z^3 + 0.5 z) / (z^4 - 2.2 z^3 + 2.42 z^2 - 1.87 z + 0.7225)`.
    pub fn benchmark() -> Self {
        Self {
            num: vec![0.1159, 0.0, 0.1159 * 0.5, 0.0],
            den: vec![1.0, -2.2, 2.42, -1.87, 0.7225],
        }
    }

    pub fn order(&self) -> usize {
        self.den.len().saturating_sub(1)
    }

    fn validate(&self) -> Result<()> {
        if self.den.len() < 2 {
            return Err(Error::InvalidTransferFunction(
                "denominator must have degree at least one".into(),
            ));
        }
        if self.den[0] != 1.0 {
            return Err(Error::InvalidTransferFunction(format!(
                "denominator must be monic, leading coefficient is {}",
                self.den[0]
            )));
        }
        if self.num.len() > self.den.len() {
            return Err(Error::InvalidTransferFunction(format!(
                "improper: numerator degree {} exceeds denominator degree {}",
                self.num.len() - 1,
                self.den.len() - 1
            )));
        }
        if self.num.iter().chain(&self.den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidTransferFunction("non-finite coefficient".into()));
        }
        Ok(())
    }
}

/// `x+ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn output(&self, x: &DVector<f64>, u: f64) -> f64 {
        self.c.dot(x) + self.d * u
    }

    pub fn advance(&self, x: &DVector<f64>, u: f64) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// Impulse response `h_0 = D`, `h_k = C A^{k-1} B`.
    pub fn markov_params(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d);
        let mut ak_b = self.b.clone();
        for _ in 1..count {
            out.push(self.c.dot(&ak_b));
            ak_b = &self.a * ak_b;
        }
        out
    }

    /// Observability matrix rows `C A^k`, `k = 0..rows`.
    pub fn observability(&self, rows: usize) -> DMatrix<f64> {
        let n = self.order();
        let mut out = DMatrix::zeros(rows, n);
        let mut row = self.c.transpose();
        for k in 0..rows {
            out.row_mut(k).copy_from(&row);
            row *= &self.a;
        }
        out
    }
}

/// Controllable canonical realization of a proper, monic transfer function.
pub fn tf_to_ss(tf: &TransferFunction) -> Result<StateSpace> {
    tf.validate()?;
    let n = tf.order();
    // Pad the numerator to n + 1 coefficients (descending powers z^n .. z^0).
    let mut num = vec![0.0; n + 1 - tf.num.len()];
    num.extend_from_slice(&tf.num);
    let d = num[0];
    // Strip the direct feedthrough: num - d * den has degree < n.
    let b_coef: Vec<f64> = (1..=n).map(|i| num[i] - d * tf.den[i]).collect();

    let mut a = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -tf.den[n - j];
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let c = DVector::from_iterator(n, (0..n).map(|j| b_coef[n - 1 - j]));
    Ok(StateSpace { a, b, c, d })
}

/// Output noise variances: `sigma2` for the offline data, `sigma2_p` for
/// online measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma2: f64,
    pub sigma2_p: f64,
}

impl NoiseSpec {
    pub fn new(sigma2: f64, sigma2_p: f64) -> Result<Self> {
        for (name, v) in [("sigma2", sigma2), ("sigma2_p", sigma2_p)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("variance must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(Self { sigma2, sigma2_p })
    }

    pub fn noise_free() -> Self {
        Self {
            sigma2: 0.0,
            sigma2_p: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub y: Vec<f64>,
    pub y0: Vec<f64>,
    pub x_final: DVector<f64>,
}

/// Simulate from `x0`, adding i.i.d. `N(0, sigma2)` output noise from `rng`.
///
/// One normal sample is drawn per step even when `sigma2 == 0`, so the noise
/// stream stays aligned across noise levels.
pub fn simulate<R: Rng + ?Sized>(
    ss: &StateSpace,
    u: &[f64],
    x0: &DVector<f64>,
    sigma2: f64,
    rng: &mut R,
) -> Result<SimOutput> {
    check_len("simulate initial state", ss.order(), x0.len())?;
    if u.is_empty() {
        return Err(Error::DataTooShort {
            needed: 1,
            available: 0,
        });
    }
    let sigma = sigma2.sqrt();
    let mut x = x0.clone();
    let mut y = Vec::with_capacity(u.len());
    let mut y0 = Vec::with_capacity(u.len());
    for &ut in u {
        let clean = ss.output(&x, ut);
        y0.push(clean);
        y.push(clean + sigma * rng::standard_normal(rng));
        x = ss.advance(&x, ut);
    }
    Ok(SimOutput { y, y0, x_final: x })
}

/// One offline input-output experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub y0: Vec<f64>,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Plant state after the last sample, for continuing into closed loop.
    pub x_final: DVector<f64>,
}

impl DataRecord {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Collect `n` samples under unit i.i.d. Gaussian excitation from a zero
/// initial state. Input and noise come from the `DataInput` / `DataNoise`
/// streams of `(seed, run_index)`.
pub fn generate_data(ss: &StateSpace, n: usize, noise: NoiseSpec, seed: u64, run_index: u64) -> Result<DataRecord> {
    if n == 0 {
        return Err(Error::DataTooShort {
            needed: 1,
            available: 0,
        });
    }
    let mut input_rng = rng::stream(seed, run_index, Role::DataInput);
    let mut noise_rng = rng::stream(seed, run_index, Role::DataNoise);
    let u: Vec<f64> = (0..n).map(|_| rng::standard_normal(&mut input_rng)).collect();
    let x0 = DVector::zeros(ss.order());
    let sim = simulate(ss, &u, &x0, noise.sigma2, &mut noise_rng)?;
    Ok(DataRecord {
        u,
        y: sim.y,
        y0: sim.y0,
        noise,
        seed,
        x_final: sim.x_final,
    })
}

/// Slow drift of one denominator coefficient: its magnitude follows
/// `theta(t) = theta0 / (1 + t / tau)` while its sign is kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub index: usize,
    pub theta0: f64,
    pub tau: f64,
}

impl DriftSpec {
    /// The benchmark drift of the `z^1` coefficient, `1.87 / (1 + t / 1500)`.
    pub fn benchmark() -> Self {
        Self {
            index: 3,
            theta0: 1.87,
            tau: 1500.0,
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.theta0 / (1.0 + t / self.tau)
    }

    pub fn validate(&self, tf: &TransferFunction) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("must be positive, got {}", self.tau),
            });
        }
        if self.index == 0 || self.index >= tf.den.len() {
            return Err(Error::InvalidParameter {
                name: "index",
                reason: format!(
                    "must address a non-leading denominator coefficient (1..{}), got {}",
                    tf.den.len() - 1,
                    self.index
                ),
            });
        }
        Ok(())
    }
}

/// The plant at time `t` under `drift`.
pub fn drift_tf(tf: &TransferFunction, drift: &DriftSpec, t: f64) -> Result<TransferFunction> {
    drift.validate(tf)?;
    let mut out = tf.clone();
    let sign = if tf.den[drift.index] < 0.0 { -1.0 } else { 1.0 };
    out.den[drift.index] = sign * drift.theta(t);
    Ok(out)
}

pub fn drift_plant(tf: &TransferFunction, drift: &DriftSpec, t: f64) -> Result<StateSpace> {
    tf_to_ss(&drift_tf(tf, drift, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Impulse response by polynomial long division of num/den in z^{-1}.
    fn long_division(tf: &TransferFunction, count: usize) -> Vec<f64> {
        let n = tf.den.len() - 1;
        let mut num = vec![0.0; n + 1 - tf.num.len()];
        num.extend_from_slice(&tf.num);
        let mut rem: Vec<f64> = num.clone();
        rem.resize(n + 1 + count, 0.0);
        let mut h = Vec::with_capacity(count);
        for k in 0..count {
            let q = rem[k] / tf.den[0];
            h.push(q);
            for (j, &dj) in tf.den.iter().enumerate() {
                rem[k + j] -= q * dj;
            }
        }
        h
    }

    #[test]
    fn benchmark_realization_last_row() {
        let ss = tf_to_ss(&TransferFunction::benchmark()).unwrap();
        assert_eq!(ss.order(), 4);
        let last: Vec<f64> = ss.a.row(3).iter().copied().collect();
        assert_eq!(last, vec![-0.7225, 1.87, -2.42, 2.2]);
        assert_eq!(ss.d, 0.0);
    }

    #[test]
    fn pure_delay_realization() {
        let ss = tf_to_ss(&TransferFunction::new(vec![1.0], vec![1.0, 0.0])).unwrap();
        assert_eq!(ss.a, DMatrix::from_element(1, 1, 0.0));
        assert_eq!(ss.b[0], 1.0);
        assert_eq!(ss.c[0], 1.0);
        assert_eq!(ss.d, 0.0);
    }

    #[test]
    fn benchmark_markov_parameters() {
        let h = tf_to_ss(&TransferFunction::benchmark()).unwrap().markov_params(3);
        let oracle = long_division(&TransferFunction::benchmark(), 3);
        assert!(close(oracle[1], 0.1159, 1e-12));
        assert!(close(oracle[2], 0.25498, 1e-12));
        for (a, b) in h.iter().zip(&oracle) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn rejects_non_monic_and_improper() {
        assert!(tf_to_ss(&TransferFunction::new(vec![1.0], vec![2.0, 1.0])).is_err());
        assert!(tf_to_ss(&TransferFunction::new(vec![1.0, 0.0, 0.0], vec![1.0, 0.5])).is_err());
    }

    #[test]
    fn biproper_has_feedthrough() {
        // (z + 2) / (z + 0.5) = 1 + 1.5 / (z + 0.5)
        let tf = TransferFunction::new(vec![1.0, 2.0], vec![1.0, 0.5]);
        let ss = tf_to_ss(&tf).unwrap();
        let h = ss.markov_params(5);
        let oracle = long_division(&tf, 5);
        for (a, b) in h.iter().zip(&oracle) {
            assert!(close(*a, *b, 1e-12), "{h:?} vs {oracle:?}");
        }
    }

    #[test]
    fn impulse_response_matches_markov() {
        let ss = tf_to_ss(&TransferFunction::benchmark()).unwrap();
        let mut u = vec![0.0; 12];
        u[0] = 1.0;
        let mut r = rng::stream(1, 0, Role::Auxiliary);
        let sim = simulate(&ss, &u, &DVector::zeros(4), 0.0, &mut r).unwrap();
        assert_eq!(sim.y, sim.y0);
        for (a, b) in sim.y0.iter().zip(ss.markov_params(12)) {
            assert!(close(*a, b, 1e-14));
        }
    }

    #[test]
    fn simulate_rejects_bad_state() {
        let ss = tf_to_ss(&TransferFunction::benchmark()).unwrap();
        let mut r = rng::stream(1, 0, Role::Auxiliary);
        assert!(simulate(&ss, &[1.0], &DVector::zeros(3), 0.0, &mut r).is_err());
        assert!(simulate(&ss, &[], &DVector::zeros(4), 0.0, &mut r).is_err());
    }

    #[test]
    fn data_generation_is_deterministic() {
        let ss = tf_to_ss(&TransferFunction::benchmark()).unwrap();
        let noise = NoiseSpec::new(0.1, 0.1).unwrap();
        let a = generate_data(&ss, 50, noise, 11, 3).unwrap();
        let b = generate_data(&ss, 50, noise, 11, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.u.len(), a.y.len()), (50, 50));
        let c = generate_data(&ss, 100, NoiseSpec::new(1.0, 1.0).unwrap(), 11, 3).unwrap();
        assert_eq!(c.len(), 100);
    }

    #[test]
    fn noise_variance_in_chi_square_band() {
        // 95% two-sided chi-square band for a 50-sample variance estimate at 0.1
        // is roughly [0.066, 0.143]; [0.05, 0.17] must hold for >= 95% of seeds.
        let ss = tf_to_ss(&TransferFunction::benchmark()).unwrap();
        let noise = NoiseSpec::new(0.1, 0.0).unwrap();
        let inside = (0..200)
            .filter(|&s| {
                let d = generate_data(&ss, 50, noise, 99, s).unwrap();
                let w: Vec<f64> = d.y.iter().zip(&d.y0).map(|(y, y0)| y - y0).collect();
                let v = w.iter().map(|x| x * x).sum::<f64>() / 50.0;
                (0.05..=0.17).contains(&v)
            })
            .count();
        assert!(inside >= 190, "only {inside}/200 inside the band");
    }

    #[test]
    fn drift_schedule() {
        let tf = TransferFunction::benchmark();
        let drift = DriftSpec::benchmark();
        assert_eq!(drift_tf(&tf, &drift, 0.0).unwrap(), tf);
        assert!(close(drift.theta(1500.0), 0.935, 1e-15));
        assert!(close(drift_tf(&tf, &drift, 1500.0).unwrap().den[3], -0.935, 1e-15));
        let frozen = DriftSpec {
            tau: f64::INFINITY,
            ..drift
        };
        assert_eq!(drift_plant(&tf, &frozen, 1e6).unwrap(), tf_to_ss(&tf).unwrap());
        assert!(drift_tf(&tf, &DriftSpec { index: 0, ..drift }, 0.0).is_err());
        assert!(drift_tf(&tf, &DriftSpec { tau: 0.0, ..drift }, 0.0).is_err());
    }
}
