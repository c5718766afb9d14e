//! Fiber histograms and the Grassmannian estimator of Λ_k.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::slice::Slicer;
use crate::error::{Error, Result};
use crate::measure::Estimate;
use crate::rng::RngStream;
use crate::sample;
use crate::set::DefinableSet;
use crate::subspace::{crofton_constant, haar_sample_with, unit_ball_volume, Subspace};

/// Monte Carlo budget: Grassmannian planes and fiber samples per plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub planes: usize,
    pub fibers: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            planes: 1000,
            fibers: 1000,
        }
    }
}

/// Estimated measures m_j of the sets {x ∈ P ∩ B : χ(fiber) = j}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberHistogram {
    pub l: usize,
    pub measures: BTreeMap<i64, f64>,
    pub samples: usize,
    pub bad: usize,
    /// μ_l r^l, the measure of the sampled disc.
    pub disc_measure: f64,
}

impl FiberHistogram {
    /// Σ_j j·m_j.
    pub fn weighted_sum(&self) -> f64 {
        self.measures.iter().map(|(&j, &m)| j as f64 * m).sum()
    }
}

/// Fiber Euler characteristics at `n_x` uniform points of P ∩ B(center, r),
/// resampling degenerate slices.
fn plane_counts<R: Rng + ?Sized>(
    slicer: &Slicer,
    r: f64,
    center: &DVector<f64>,
    n_x: usize,
    rng: &mut R,
) -> Result<(BTreeMap<i64, usize>, usize)> {
    let p = slicer.plane();
    let l = p.dim();
    let c0 = p.coords_unchecked(center);
    let mut counts = BTreeMap::new();
    let mut bad = 0usize;
    let mut good = 0usize;
    let limit = n_x / 10;
    while good < n_x {
        let u = sample::ball(l, 1.0, rng);
        let x = p.lift(&(&c0 + u * r));
        match slicer.euler(&x) {
            Ok(chi) => {
                *counts.entry(chi).or_insert(0) += 1;
                good += 1;
            }
            Err(Error::DegenerateSlice(_)) => {
                bad += 1;
                if bad > limit.max(1) {
                    return Err(Error::HistogramUnreliable { bad, good });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok((counts, bad))
}

pub fn fiber_histogram(
    set: &DefinableSet,
    p: &Subspace,
    r: f64,
    center: &DVector<f64>,
    n_x: usize,
    rng: &RngStream,
) -> Result<FiberHistogram> {
    if n_x == 0 {
        return Err(Error::Domain("fiber histogram needs at least one sample".into()));
    }
    let slicer = Slicer::new(set, p, r, center)?;
    let (counts, bad) = plane_counts(&slicer, r, center, n_x, &mut rng.rng())?;
    let disc = unit_ball_volume(p.dim()) * r.powi(p.dim() as i32);
    Ok(FiberHistogram {
        l: p.dim(),
        measures: counts
            .into_iter()
            .map(|(j, c)| (j, disc * c as f64 / n_x as f64))
            .collect(),
        samples: n_x,
        bad,
        disc_measure: disc,
    })
}

/// χ(A ∩ B(center, r)), nudging the radius off degenerate values.
pub fn ball_euler(set: &DefinableSet, r: f64, center: &DVector<f64>) -> Result<i64> {
    let zero = Subspace::zero(set.ambient_dim());
    let origin = DVector::zeros(set.ambient_dim());
    let mut last = None;
    for i in 0..4 {
        let rr = r * (1.0 + 1e-7 * i as f64);
        match Slicer::new(set, &zero, rr, center)?.euler(&origin) {
            Ok(v) => return Ok(v),
            Err(e @ Error::DegenerateSlice(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Λ_k(A ∩ B(center, r)) = c(n,k) ∫ Σ_j j·H^k(K_{k,j}^P) dP, by Monte Carlo over
/// Haar-distributed planes and uniform fiber base points.
pub fn lipschitz_killing(
    set: &DefinableSet,
    k: usize,
    r: f64,
    center: &DVector<f64>,
    budget: Budget,
    rng: &RngStream,
) -> Result<Estimate> {
    let n = set.ambient_dim();
    if k > n {
        return Err(Error::Domain(format!("Λ_{k} undefined in ℝ^{n}")));
    }
    if center.len() != n {
        return Err(Error::Domain("center dimension mismatch".into()));
    }
    if r <= 0.0 {
        return Err(Error::Domain("radius must be positive".into()));
    }
    let scale = unit_ball_volume(k) * r.powi(k as i32);
    if k == 0 {
        return Ok(Estimate::exact(ball_euler(set, r, center)? as f64));
    }
    if budget.planes == 0 || budget.fibers == 0 {
        return Err(Error::Domain("empty Monte Carlo budget".into()));
    }
    if k == n {
        // the only plane is ℝ^n, so the whole budget goes to base points
        let samples = budget.planes * budget.fibers;
        let full = Subspace::full(n);
        let slicer = Slicer::new(set, &full, r, center)?;
        let (counts, _) = plane_counts(&slicer, r, center, samples, &mut rng.rng())?;
        let (m, se) = moments(&counts, samples);
        return Ok(Estimate {
            value: scale * m,
            stderr: scale * se,
        });
    }
    let c = crofton_constant(n, k)?;
    let per_plane: Vec<Result<f64>> = (0..budget.planes)
        .into_par_iter()
        .map(|i| {
            let mut g = rng.child(i as u64).rng();
            let p = haar_sample_with(n, k, &mut g)?;
            let slicer = Slicer::new(set, &p, r, center)?;
            let (counts, _) = plane_counts(&slicer, r, center, budget.fibers, &mut g)?;
            Ok(moments(&counts, budget.fibers).0)
        })
        .collect();
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    for v in per_plane {
        let v = v?;
        sum += v;
        sum2 += v * v;
    }
    let np = budget.planes as f64;
    let mean = sum / np;
    let var = ((sum2 / np - mean * mean) * np / (np - 1.0).max(1.0)).max(0.0);
    Ok(Estimate {
        value: c * scale * mean,
        stderr: c * scale * (var / np).sqrt(),
    })
}

fn moments(counts: &BTreeMap<i64, usize>, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let m: f64 = counts.iter().map(|(&j, &c)| j as f64 * c as f64).sum::<f64>() / nf;
    let m2: f64 = counts.iter().map(|(&j, &c)| (j * j) as f64 * c as f64).sum::<f64>() / nf;
    let var = ((m2 - m * m) * nf / (nf - 1.0).max(1.0)).max(0.0);
    (m, (var / nf).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit::{Condition, ImplicitSet, Sign};
    use crate::poly::Polynomial;
    use std::f64::consts::PI;

    fn disc(radius: f64) -> DefinableSet {
        let p = Polynomial::from_pairs(2, &[(radius * radius, &[0, 0]), (-1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        ImplicitSet::from_conditions(2, vec![Condition::new(p, Sign::Ge)], 2).unwrap().into()
    }

    fn circle(radius: f64) -> DefinableSet {
        let p = Polynomial::from_pairs(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-radius * radius, &[0, 0])]).unwrap();
        ImplicitSet::from_conditions(2, vec![Condition::new(p, Sign::Eq)], 1).unwrap().into()
    }

    #[test]
    fn histograms() {
        let o = DVector::zeros(2);
        let line = Subspace::coordinate(2, &[0]).unwrap();
        let h = fiber_histogram(&disc(1.0), &line, 1.0, &o, 2000, &RngStream::new(1, 0)).unwrap();
        assert!((h.measures[&1] - 2.0).abs() < 1e-12);
        assert_eq!(h.measures.len(), 1);
        let h = fiber_histogram(&circle(0.5), &line, 1.0, &o, 4000, &RngStream::new(2, 0)).unwrap();
        assert!((h.measures[&2] - 1.0).abs() < 0.06, "{h:?}");
        assert!(h.measures.values().sum::<f64>() <= h.disc_measure + 1e-9);
        let empty: DefinableSet = ImplicitSet::from_conditions(
            2,
            vec![Condition::new(Polynomial::from_pairs(2, &[(-1.0, &[0, 0])]).unwrap(), Sign::Ge)],
            2,
        )
        .unwrap()
        .into();
        let h = fiber_histogram(&empty, &line, 1.0, &o, 100, &RngStream::new(3, 0)).unwrap();
        assert_eq!(h.weighted_sum(), 0.0);
    }

    #[test]
    fn disc_curvatures() {
        let o = DVector::zeros(2);
        let s = RngStream::new(11, 0);
        let b = Budget { planes: 400, fibers: 400 };
        assert_eq!(lipschitz_killing(&disc(1.0), 0, 2.0, &o, b, &s).unwrap().value, 1.0);
        let l1 = lipschitz_killing(&disc(1.0), 1, 2.0, &o, b, &s).unwrap();
        assert!((l1.value - PI).abs() < 0.02 * PI, "{l1:?}");
        let wide = Budget { planes: 1, fibers: 40_000 };
        let l2 = lipschitz_killing(&disc(1.0), 2, 2.0, &o, wide, &s).unwrap();
        assert!((l2.value - PI).abs() < 0.05 * PI, "{l2:?}");
        assert!(lipschitz_killing(&disc(1.0), 3, 2.0, &o, b, &s).is_err());
    }

    #[test]
    fn determinism() {
        let o = DVector::zeros(2);
        let s = RngStream::new(5, 9);
        let b = Budget { planes: 50, fibers: 50 };
        let a = lipschitz_killing(&circle(0.7), 1, 1.0, &o, b, &s).unwrap();
        let c = lipschitz_killing(&circle(0.7), 1, 1.0, &o, b, &s).unwrap();
        assert_eq!(a.value.to_bits(), c.value.to_bits());
        assert_eq!(a.stderr.to_bits(), c.stderr.to_bits());
    }
}
