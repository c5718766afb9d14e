//! Linear subspaces of ℝ^n, Grassmannian sampling, the gap metric and the
//! Crofton normalizing constants.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::TOL;
use crate::error::{domain, Result};
use crate::linalg::Svd;
use crate::rng::RngStream;

/// An l-plane through the origin of ℝ^n, stored by an orthonormal frame
/// (columns of an n×l matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: usize,
    frame: DMatrix<f64>,
}

fn fix_signs(q: &mut DMatrix<f64>) {
    for mut col in q.column_iter_mut() {
        if let Some(v) = col.iter().find(|v| v.abs() > TOL.linalg).copied() {
            if v < 0.0 {
                col.neg_mut();
            }
        }
    }
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Self {
            ambient: n,
            frame: DMatrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            ambient: n,
            frame: DMatrix::identity(n, n),
        }
    }

    /// The coordinate plane spanned by `e_i`, `i ∈ axes`.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        let mut f = DMatrix::zeros(n, axes.len());
        for (j, &i) in axes.iter().enumerate() {
            if i >= n {
                return domain(format!("axis {i} out of range for ℝ^{n}"));
            }
            f[(i, j)] = 1.0;
        }
        Self::span(n, &f)
    }

    /// Orthonormalized span of the columns of `m`. Rank-deficient input is
    /// reduced to its numerical column space.
    pub fn span(n: usize, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != n {
            return domain(format!("vectors of length {} in ℝ^{n}", m.nrows()));
        }
        if m.ncols() == 0 {
            return Ok(Self::zero(n));
        }
        let svd = Svd::new(m);
        let f = svd.range(TOL.rank * svd.max_singular().max(1.0));
        if f.ncols() == 0 {
            return Ok(Self::zero(n));
        }
        // sign convention for reproducibility
        let mut q = f.qr().q();
        fix_signs(&mut q);
        Ok(Self {
            ambient: n,
            frame: q,
        })
    }

    /// Span of a list of vectors.
    pub fn span_vectors(n: usize, vs: &[DVector<f64>]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, vs.len());
        for (j, v) in vs.iter().enumerate() {
            if v.len() != n {
                return domain("vector length does not match ambient dimension");
            }
            m.set_column(j, v);
        }
        Self::span(n, &m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Orthogonal projector matrix F Fᵀ.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }

    fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.ambient {
            return domain(format!(
                "vector of length {} in ℝ^{}",
                x.len(),
                self.ambient
            ));
        }
        Ok(())
    }

    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        Ok(self.lift(&self.coords_unchecked(x)))
    }

    /// Coordinates of the projection of `x` in the frame basis.
    pub fn coords(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(x)?;
        Ok(self.coords_unchecked(x))
    }

    pub(crate) fn coords_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        self.frame.tr_mul(x)
    }

    /// Point of ℝ^n with frame coordinates `c`.
    pub fn lift(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.frame * c
    }

    /// Orthogonal complement.
    pub fn complement(&self) -> Self {
        let n = self.ambient;
        let l = self.dim();
        if l == 0 {
            return Self::full(n);
        }
        if l == n {
            return Self::zero(n);
        }
        let null = Svd::new(&self.frame.transpose()).null_space(TOL.rank);
        Self::span(n, &null).expect("dimensions match")
    }

    /// True when every frame vector of `self` lies in `other`.
    pub fn is_contained_in(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && gap(self, other).map(|g| g < 1e-8).unwrap_or(false)
    }
}

/// A random l-plane of ℝ^n drawn from the rotation-invariant probability
/// measure on the Grassmannian.
pub fn haar_sample(n: usize, l: usize, rng: &RngStream) -> Result<Subspace> {
    haar_sample_with(n, l, &mut rng.rng())
}

/// Same as [`haar_sample`] but drawing from an existing generator.
pub fn haar_sample_with<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Result<Subspace> {
    if l > n {
        return domain(format!("cannot sample a {l}-plane in ℝ^{n}"));
    }
    if l == 0 {
        return Ok(Subspace::zero(n));
    }
    if l == n {
        return Ok(Subspace::full(n));
    }
    let g = DMatrix::from_fn(n, l, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut q = g.qr().q();
    fix_signs(&mut q);
    Ok(Subspace {
        ambient: n,
        frame: q,
    })
}

/// δ(M, N) = sup over unit x ∈ M of ‖x − P_N x‖. Not symmetric.
pub fn gap(m: &Subspace, nn: &Subspace) -> Result<f64> {
    if m.ambient != nn.ambient {
        return domain("gap between subspaces of different ambient spaces");
    }
    if m.dim() == 0 {
        return Ok(0.0);
    }
    let fm = &m.frame;
    let r = fm - &nn.frame * nn.frame.tr_mul(fm);
    let s = Svd::new(&r).max_singular();
    Ok(s.clamp(0.0, 1.0))
}

/// ln Γ(m/2) for a positive integer m, computed from exact factorial sums.
fn ln_gamma_half(m: usize) -> f64 {
    assert!(m > 0);
    if m % 2 == 0 {
        // Γ(j) = (j−1)!
        let j = m / 2;
        (1..j).map(|i| (i as f64).ln()).sum()
    } else {
        // Γ(j + 1/2) = √π · Π_{i=1}^{j} (i − 1/2)
        let j = (m - 1) / 2;
        0.5 * std::f64::consts::PI.ln() + (1..=j).map(|i| (i as f64 - 0.5).ln()).sum::<f64>()
    }
}

/// c(n,k) = Γ((n+1)/2)Γ(1/2) / (Γ((n−k+1)/2)Γ((k+1)/2)).
pub fn crofton_constant(n: usize, k: usize) -> Result<f64> {
    if k > n {
        return domain(format!("crofton constant c({n},{k}) needs k ≤ n"));
    }
    if k == 0 || k == n {
        return Ok(1.0);
    }
    let ln = ln_gamma_half(n + 1) + ln_gamma_half(1) - ln_gamma_half(n - k + 1) - ln_gamma_half(k + 1);
    Ok(ln.exp())
}

/// Volume μ_d of the unit d-ball.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}
