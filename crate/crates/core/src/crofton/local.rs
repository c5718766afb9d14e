//! Local curvatures Λ_k^loc, densities Θ_d and their agreement.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::extrapolate::{fit_limit, FitMethod};
use super::lk::{lipschitz_killing, Budget};
use crate::error::{Error, Result};
use crate::measure::{psi, MeasureParams};
use crate::rng::RngStream;
use crate::set::DefinableSet;
use crate::subspace::unit_ball_volume;

/// Membership slack for base points of local computations.
const BASE_POINT_TOL: f64 = 1e-7;

/// Stream offset separating density sampling from the Grassmannian path.
const DENSITY_STREAM: u64 = 0x00de_5171;

/// Strictly decreasing radii, at least four.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RadiusSchedule(Vec<f64>);

impl TryFrom<Vec<f64>> for RadiusSchedule {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        RadiusSchedule::new(v)
    }
}

impl From<RadiusSchedule> for Vec<f64> {
    fn from(s: RadiusSchedule) -> Self {
        s.0
    }
}

impl RadiusSchedule {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 4 {
            return Err(Error::Domain("a radius schedule needs at least four radii".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Domain("radii must be positive".into()));
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain("radii must be strictly decreasing".into()));
        }
        Ok(Self(radii))
    }

    /// `count` radii r0, r0/2, r0/4, …
    pub fn dyadic(r0: f64, count: usize) -> Result<Self> {
        Self::new((0..count).map(|i| r0 / 2f64.powi(i as i32)).collect())
    }

    pub fn radii(&self) -> &[f64] {
        &self.0
    }
}

/// Normalized values over a radius schedule and their extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub k: usize,
    pub center: Vec<f64>,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub limit: f64,
    pub limit_stderr: f64,
    pub exponent: Option<f64>,
    pub method: FitMethod,
    pub residual: f64,
}

impl CurvatureProfile {
    fn assemble(k: usize, center: &DVector<f64>, radii: &[f64], values: Vec<f64>, stderrs: Vec<f64>) -> Result<Self> {
        let fit = fit_limit(radii, &values, &stderrs)?;
        Ok(Self {
            k,
            center: center.iter().copied().collect(),
            radii: radii.to_vec(),
            values,
            stderrs,
            limit: fit.limit,
            limit_stderr: fit.stderr,
            exponent: fit.exponent,
            method: fit.method,
            residual: fit.residual,
        })
    }
}

fn check_base(set: &DefinableSet, x: &DVector<f64>) -> Result<()> {
    if x.len() != set.ambient_dim() {
        return Err(Error::Domain("base point dimension mismatch".into()));
    }
    if !set.contains(x.as_slice(), BASE_POINT_TOL) {
        return Err(Error::Domain("base point is not in the set".into()));
    }
    Ok(())
}

/// Λ_k^loc(A, x) from Λ_k(A ∩ B(x, r))/(μ_k r^k) over the schedule. Every
/// radius reuses the same random stream, so the profile varies smoothly.
pub fn local_curvature(
    set: &DefinableSet,
    x: &DVector<f64>,
    k: usize,
    schedule: &RadiusSchedule,
    budget: Budget,
    rng: &RngStream,
) -> Result<CurvatureProfile> {
    check_base(set, x)?;
    let mut values = Vec::new();
    let mut stderrs = Vec::new();
    for &r in schedule.radii() {
        let e = lipschitz_killing(set, k, r, x, budget, rng)?;
        let norm = unit_ball_volume(k) * r.powi(k as i32);
        values.push(e.value / norm);
        stderrs.push(e.stderr / norm);
    }
    CurvatureProfile::assemble(k, x, schedule.radii(), values, stderrs)
}

/// Θ_d(A, x) from ψ(A, r)/(μ_d r^d) over the schedule.
pub fn density(
    set: &DefinableSet,
    x: &DVector<f64>,
    d: usize,
    schedule: &RadiusSchedule,
    est: &MeasureParams,
) -> Result<CurvatureProfile> {
    check_base(set, x)?;
    if d != set.declared_dim() {
        return Err(Error::Domain(format!(
            "density of order {d} requested for a {}-dimensional set",
            set.declared_dim()
        )));
    }
    let est = MeasureParams {
        rng: est.rng.child(DENSITY_STREAM),
        ..*est
    };
    let mut values = Vec::new();
    let mut stderrs = Vec::new();
    for &r in schedule.radii() {
        let e = psi(set, r, x.as_slice(), &est)?;
        let norm = unit_ball_volume(d) * r.powi(d as i32);
        values.push(e.value / norm);
        stderrs.push(e.stderr / norm);
    }
    CurvatureProfile::assemble(d, x, schedule.radii(), values, stderrs)
}

/// Agreement of Λ_d^loc and Θ_d at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub curvature: CurvatureProfile,
    pub density: CurvatureProfile,
    pub difference: f64,
    pub pooled_stderr: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Absolute slack added to twice the pooled standard error.
pub const CONSISTENCY_SLACK: f64 = 0.02;

pub fn crofton_consistency(
    set: &DefinableSet,
    x: &DVector<f64>,
    d: usize,
    schedule: &RadiusSchedule,
    budget: Budget,
    est: &MeasureParams,
) -> Result<ConsistencyReport> {
    let curvature = local_curvature(set, x, d, schedule, budget, &est.rng)?;
    let dens = density(set, x, d, schedule, est)?;
    let difference = (curvature.limit - dens.limit).abs();
    let pooled = (curvature.limit_stderr.powi(2) + dens.limit_stderr.powi(2)).sqrt();
    let tolerance = 2.0 * pooled + CONSISTENCY_SLACK;
    Ok(ConsistencyReport {
        curvature,
        density: dens,
        difference,
        pooled_stderr: pooled,
        tolerance,
        passed: difference < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl::PlComplex;

    #[test]
    fn schedules() {
        assert!(RadiusSchedule::new(vec![0.4, 0.2, 0.1]).is_err());
        assert!(RadiusSchedule::new(vec![0.4, 0.2, 0.2, 0.1]).is_err());
        assert_eq!(RadiusSchedule::dyadic(0.4, 4).unwrap().radii(), &[0.4, 0.2, 0.1, 0.05]);
    }

    #[test]
    fn half_line_endpoint() {
        let set: DefinableSet = PlComplex::new_closed(2, vec![vec![0.0, 0.0], vec![2.0, 0.0]], &[vec![0, 1]]).unwrap().into();
        let x = DVector::zeros(2);
        let sched = RadiusSchedule::dyadic(0.4, 4).unwrap();
        let b = Budget { planes: 300, fibers: 300 };
        let rng = RngStream::new(2, 0);
        let c = local_curvature(&set, &x, 1, &sched, b, &rng).unwrap();
        assert!((c.limit - 0.5).abs() < 0.03, "{c:?}");
        let z = local_curvature(&set, &x, 0, &sched, b, &rng).unwrap();
        assert_eq!(z.limit, 1.0);
        let v = local_curvature(&set, &x, 2, &sched, b, &rng).unwrap();
        assert_eq!(v.limit, 0.0);
        let est = MeasureParams::new(1000, rng);
        let rep = crofton_consistency(&set, &x, 1, &sched, b, &est).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.density.limit, 0.5);
    }
}
