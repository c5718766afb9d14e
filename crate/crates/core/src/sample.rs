//! Uniform samplers on balls, spheres and simplices.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub fn unit_sphere<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 1e-300 {
            return g / norm;
        }
    }
}

/// Uniform point in the closed ball B(0, r) ⊂ ℝ^n.
pub fn ball<R: Rng + ?Sized>(n: usize, r: f64, rng: &mut R) -> DVector<f64> {
    if n == 0 {
        return DVector::zeros(0);
    }
    let u: f64 = rng.random();
    unit_sphere(n, rng) * (r * u.powf(1.0 / n as f64))
}

/// Uniform barycentric coordinates on the standard d-simplex.
pub fn simplex_weights<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..=d).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
