//! Small dense helpers on top of nalgebra: ordered SVD, pseudo-inverse,
//! numerical rank and orthonormal null-space bases.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Thin SVD `a = u * diag(s) * vt` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct OrderedSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub vt: DMatrix<f64>,
}

impl OrderedSvd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let k = m.min(n);
        if k == 0 {
            return Self {
                u: DMatrix::zeros(m, 0),
                s: DVector::zeros(0),
                vt: DMatrix::zeros(0, n),
            };
        }
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let vt = svd.v_t.expect("right singular vectors requested");
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let s = DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i]));
        let u = DMatrix::from_fn(m, k, |r, c| u[(r, order[c])]);
        let vt = DMatrix::from_fn(k, n, |r, c| vt[(order[r], c)]);
        Self { u, s, vt }
    }

    /// Singular values below `max(m, n) * eps * s_1` count as zero.
    pub fn default_tolerance(&self) -> f64 {
        let dim = self.u.nrows().max(self.vt.ncols()) as f64;
        dim * f64::EPSILON * self.s.get(0).copied().unwrap_or(0.0)
    }

    pub fn rank_with(&self, tol: f64) -> usize {
        self.s.iter().filter(|&&s| s > tol).count()
    }

    pub fn rank(&self) -> usize {
        self.rank_with(self.default_tolerance())
    }

    /// Ratio of largest to smallest singular value (infinite for an exact zero).
    pub fn condition(&self) -> f64 {
        match (self.s.get(0), self.s.iter().next_back()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        }
    }

    /// Moore-Penrose pseudo-inverse with the default truncation.
    pub fn pinv(&self) -> DMatrix<f64> {
        let tol = self.default_tolerance();
        let (m, n) = (self.u.nrows(), self.vt.ncols());
        let mut out = DMatrix::zeros(n, m);
        for (i, &s) in self.s.iter().enumerate() {
            if s > tol {
                let v = self.vt.row(i).transpose();
                let u = self.u.column(i);
                out += (v * u.transpose()) / s;
            }
        }
        out
    }
}

pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    OrderedSvd::new(a).pinv()
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    OrderedSvd::new(a).rank()
}

/// Orthonormal basis (as columns) of the orthogonal complement of the span
/// of the orthonormal columns `q` in R^n.
pub fn orthogonal_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let r = q.ncols();
    if r == 0 {
        return DMatrix::identity(n, n);
    }
    if r >= n {
        return DMatrix::zeros(n, 0);
    }
    // The projector onto the complement has eigenvalues in {0, 1}; the unit
    // eigenvalue is well separated, so its eigenvectors are accurate.
    let proj = DMatrix::identity(n, n) - q * q.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut cols: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.5)
        .map(|(i, &v)| (v, i))
        .collect();
    cols.sort_by_key(|&(_, i)| i);
    DMatrix::from_fn(n, cols.len(), |row, c| eig.eigenvectors[(row, cols[c].1)])
}

/// Stack matrices with equal column counts vertically.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn vcat(parts: &[&[f64]]) -> DVector<f64> {
    DVector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().copied()),
    )
}
