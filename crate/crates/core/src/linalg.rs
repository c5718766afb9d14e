//! Small dense SVD by one-sided Jacobi rotations.
//!
//! nalgebra's bidiagonal SVD loses accuracy on rank-deficient inputs with
//! repeated singular values (orthogonal projectors are the typical case), so
//! every decomposition in this crate goes through here instead. Matrices are
//! tiny, and Jacobi gives singular vectors to full working accuracy.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 80;

/// A = U diag(s) Vᵀ with s sorted in decreasing order. U is m×n with zero
/// columns where s vanishes; V is a full n×n orthogonal matrix.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let mut w = a.clone();
        let mut v = DMatrix::<f64>::identity(n, n);
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = w.column(p).norm_squared();
                    let beta = w.column(q).norm_squared();
                    let gamma = w.column(p).dot(&w.column(q));
                    if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
        let mut u = DMatrix::zeros(m, n);
        let mut vs = DMatrix::zeros(n, n);
        let mut s = DVector::zeros(n);
        for (j, &i) in order.iter().enumerate() {
            s[j] = norms[i];
            vs.set_column(j, &v.column(i));
            if norms[i] > 0.0 {
                u.set_column(j, &(w.column(i) / norms[i]));
            }
        }
        Self { u, s, v: vs }
    }

    pub fn max_singular(&self) -> f64 {
        if self.s.is_empty() {
            0.0
        } else {
            self.s[0]
        }
    }

    /// Number of singular values above `cut`.
    pub fn rank(&self, cut: f64) -> usize {
        self.s.iter().filter(|&&v| v > cut).count()
    }

    /// Columns of V whose singular value is at most `cut`.
    pub fn null_space(&self, cut: f64) -> DMatrix<f64> {
        let r = self.rank(cut);
        self.v.columns(r, self.v.ncols() - r).into_owned()
    }

    /// Columns of U whose singular value exceeds `cut`.
    pub fn range(&self, cut: f64) -> DMatrix<f64> {
        self.u.columns(0, self.rank(cut)).into_owned()
    }

    /// Moore–Penrose inverse with singular values at or below `cut` dropped.
    pub fn pseudo_inverse(&self, cut: f64) -> DMatrix<f64> {
        let r = self.rank(cut);
        let mut out = DMatrix::zeros(self.v.nrows(), self.u.nrows());
        for j in 0..r {
            out += self.v.column(j) * self.u.column(j).transpose() / self.s[j];
        }
        out
    }
}

fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &DMatrix<f64>) {
        let d = Svd::new(a);
        let rec = &d.u * DMatrix::from_diagonal(&d.s) * d.v.transpose();
        assert!((rec - a).norm() <= 1e-13 * a.norm().max(1.0));
        assert!((d.v.transpose() * &d.v - DMatrix::identity(a.ncols(), a.ncols())).norm() < 1e-13);
        assert!(d.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn projectors_and_rank_deficient_products() {
        for k in 0..50 {
            let th = 0.0628 * k as f64;
            let f = DMatrix::from_column_slice(2, 1, &[th.cos(), th.sin()]);
            let p = DMatrix::identity(2, 2) - &f * f.transpose();
            check(&p);
            let d = Svd::new(&p);
            assert!((d.s[0] - 1.0).abs() < 1e-14 && d.s[1] < 1e-14);
            let nul = d.null_space(1e-8);
            assert!((nul.column(0).dot(&f.column(0)).abs() - 1.0).abs() < 1e-14);
        }
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -0.5, 0.3, 0.2, 0.1, 3.0, -1.0]);
        let b = DMatrix::from_row_slice(2, 3, &[0.4, -1.0, 2.0, 1.0, 0.5, 0.0]);
        check(&(&a * &b));
        check(&(&a * &b).transpose());
        check(&DMatrix::zeros(3, 2));
    }

    #[test]
    fn pseudo_inverse_solves_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let pinv = Svd::new(&a).pseudo_inverse(1e-12);
        let want = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.5, 0.0]);
        assert!((pinv - want).norm() < 1e-15);
    }
}
