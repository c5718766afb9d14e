//! Strata, stratified sets, nearest-point projections and the frontier audit.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::config::TOL;
use crate::error::{domain, Error, Result};
use crate::linalg::Svd;
use crate::implicit::{kernel, Clause, ImplicitSet};
use crate::pl::PlComplex;
use crate::rng::RngStream;
use crate::sample;
use crate::set::DefinableSet;
use crate::subspace::Subspace;

/// Limits for the nearest-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// Points farther than this from a stratum are rejected.
    pub tubular_radius: f64,
    pub max_iter: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            tubular_radius: 10.0,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Carrier {
    Implicit(ImplicitSet),
    /// Union of the relative interiors of the listed simplices.
    Pl {
        complex: Arc<PlComplex>,
        simplices: Vec<usize>,
        closure: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Stratum {
    pub label: String,
    pub dim: usize,
    pub carrier: Carrier,
    pub projection: ProjectionConfig,
}

/// Newton projection onto the equalities of `clause` with minimum-norm steps.
pub(crate) fn newton_project(clause: &Clause, x: &DVector<f64>, max_iter: usize) -> Option<DVector<f64>> {
    let eqs: Vec<_> = clause.equalities().collect();
    if eqs.is_empty() {
        return Some(x.clone());
    }
    let grads: Vec<Vec<_>> = eqs.iter().map(|p| p.gradient()).collect();
    let n = x.len();
    let mut z = x.clone();
    for _ in 0..max_iter {
        let mut done = true;
        let f = DVector::from_iterator(
            eqs.len(),
            eqs.iter().map(|p| {
                let (v, s) = p.eval_with_scale(z.as_slice());
                if v.abs() > 1e-14 * (1.0 + s) {
                    done = false;
                }
                v
            }),
        );
        if done {
            return Some(z);
        }
        let j = DMatrix::from_fn(eqs.len(), n, |i, k| grads[i][k].eval(z.as_slice()));
        let svd = Svd::new(&j);
        let smax = svd.max_singular();
        if smax <= 1e-300 {
            return None;
        }
        let step = svd.pseudo_inverse(TOL.rank * smax) * &f;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        z -= &step;
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            let ok = eqs.iter().all(|p| {
                let (v, s) = p.eval_with_scale(z.as_slice());
                v.abs() <= TOL.membership * (1.0 + s)
            });
            return ok.then_some(z);
        }
    }
    let ok = eqs.iter().all(|p| {
        let (v, s) = p.eval_with_scale(z.as_slice());
        v.abs() <= TOL.membership * (1.0 + s)
    });
    ok.then_some(z)
}

/// Locally nearest point of the equality locus of `clause`, from `seed`.
pub(crate) fn descend(clause: &Clause, n: usize, x: &DVector<f64>, seed: &DVector<f64>, max_iter: usize) -> Option<DVector<f64>> {
    let mut z = newton_project(clause, seed, max_iter)?;
    let eqs: Vec<_> = clause.equalities().collect();
    if eqs.is_empty() {
        return Some(z);
    }
    let grads: Vec<Vec<_>> = eqs.iter().map(|p| p.gradient()).collect();
    for _ in 0..max_iter {
        let j = DMatrix::from_fn(eqs.len(), n, |i, k| grads[i][k].eval(z.as_slice()));
        let t = kernel(&j, n).ok()?;
        let d = x - &z;
        let step = t.project(&d).ok()?;
        if step.norm() <= 1e-13 * (1.0 + d.norm()) {
            break;
        }
        let cur = d.norm();
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            if let Some(c) = newton_project(clause, &(&z + &step * alpha), max_iter) {
                if (x - &c).norm() < cur {
                    z = c;
                    moved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Some(z)
}

/// Lexicographic preference for larger coordinates among near-equal minima.
fn prefer(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    for (u, v) in a.iter().zip(b.iter()) {
        if (u - v).abs() > 1e-9 {
            return u > v;
        }
    }
    false
}

impl Stratum {
    pub fn implicit(label: impl Into<String>, set: ImplicitSet) -> Self {
        Self {
            label: label.into(),
            dim: set.declared_dim,
            carrier: Carrier::Implicit(set),
            projection: ProjectionConfig::default(),
        }
    }

    pub fn pl(label: impl Into<String>, complex: Arc<PlComplex>, simplices: Vec<usize>) -> Result<Self> {
        if simplices.is_empty() {
            return Err(Error::Invalid("PL stratum without simplices".into()));
        }
        if let Some(&bad) = simplices.iter().find(|&&i| i >= complex.len()) {
            return Err(Error::Invalid(format!("simplex id {bad} out of range")));
        }
        let dim = simplices.iter().map(|&i| complex.simplex_dim(i)).max().unwrap();
        let closure: BTreeSet<usize> = simplices.iter().flat_map(|&i| complex.faces_of(i)).collect();
        Ok(Self {
            label: label.into(),
            dim,
            carrier: Carrier::Pl {
                complex,
                simplices,
                closure: closure.into_iter().collect(),
            },
            projection: ProjectionConfig::default(),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.carrier {
            Carrier::Implicit(s) => s.ambient_dim,
            Carrier::Pl { complex, .. } => complex.ambient_dim(),
        }
    }

    /// PL simplex of the stratum whose relative interior holds `x`.
    fn pl_simplex(&self, x: &DVector<f64>) -> Option<usize> {
        match &self.carrier {
            Carrier::Pl { complex, simplices, .. } => complex
                .locate(x, TOL.barycentric)
                .filter(|i| simplices.contains(i)),
            Carrier::Implicit(_) => None,
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        if x.len() != self.ambient_dim() {
            return false;
        }
        match &self.carrier {
            Carrier::Implicit(s) => s.contains(x.as_slice(), TOL.membership),
            Carrier::Pl { .. } => self.pl_simplex(x).is_some(),
        }
    }

    pub fn tangent_space(&self, x: &DVector<f64>) -> Result<Subspace> {
        match &self.carrier {
            Carrier::Implicit(s) => {
                if !s.contains(x.as_slice(), TOL.membership) {
                    return domain(format!("point not on stratum {}", self.label));
                }
                s.tangent_space(x.as_slice())
            }
            Carrier::Pl { complex, simplices, .. } => {
                let i = self
                    .pl_simplex(x)
                    .ok_or_else(|| Error::Domain(format!("point not on stratum {}", self.label)))?;
                if complex.simplex_dim(i) == self.dim {
                    return Ok(complex.direction(i));
                }
                complex
                    .cofaces(i)
                    .into_iter()
                    .find(|j| simplices.contains(j) && complex.simplex_dim(*j) == self.dim)
                    .map(|j| complex.direction(j))
                    .ok_or_else(|| Error::Singular(format!("no top simplex of {} at point", self.label)))
            }
        }
    }

    /// Nearest point of the closure of the stratum, by exact simplex distance
    /// (PL) or multi-start projected descent (implicit).
    pub fn nearest(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return domain("dimension mismatch");
        }
        let found = match &self.carrier {
            Carrier::Pl { complex, closure, .. } => {
                let (d, foot, _) = complex.distance_among(x, closure.iter().copied());
                (d, foot)
            }
            Carrier::Implicit(s) => self.nearest_implicit(s, x)?,
        };
        if found.0 > self.projection.tubular_radius {
            return Err(Error::Projection(format!(
                "point at distance {} from {} exceeds the tubular radius {}",
                found.0, self.label, self.projection.tubular_radius
            )));
        }
        Ok(found.1)
    }

    fn nearest_implicit(&self, s: &ImplicitSet, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        if s.contains(x.as_slice(), TOL.membership) {
            let on = s
                .active_clause(x.as_slice(), TOL.membership)
                .map(|c| c.equalities().all(|p| {
                    let (v, sc) = p.eval_with_scale(x.as_slice());
                    v.abs() <= 1e-12 * (1.0 + sc)
                }))
                .unwrap_or(false);
            if on {
                return Ok((0.0, x.clone()));
            }
        }
        let n = x.len();
        let max_iter = self.projection.max_iter;
        let mut best: Option<(f64, DVector<f64>)> = None;
        for clause in &s.clauses {
            let Some(z0) = newton_project(clause, x, max_iter) else {
                continue;
            };
            let d0 = (x - &z0).norm().max(1e-6);
            let mut seeds = vec![x.clone(), z0];
            for f in [0.5, 1.5] {
                for i in 0..n {
                    for sg in [1.0, -1.0] {
                        let mut y = x.clone();
                        y[i] += sg * f * d0;
                        seeds.push(y);
                    }
                }
            }
            for seed in &seeds {
                let Some(z) = descend(clause, n, x, seed, max_iter) else {
                    continue;
                };
                if !s.contains(z.as_slice(), TOL.membership) {
                    continue;
                }
                let d = (x - &z).norm();
                best = match best {
                    None => Some((d, z)),
                    Some((bd, bz)) => {
                        if d < bd - 1e-9 * (1.0 + bd) || ((d - bd).abs() <= 1e-9 * (1.0 + bd) && prefer(&z, &bz)) {
                            Some((d, z))
                        } else {
                            Some((bd, bz))
                        }
                    }
                };
            }
        }
        best.ok_or_else(|| Error::Projection(format!("no convergent descent onto {}", self.label)))
    }

    /// A point of the stratum near `x` (not necessarily the nearest), used by
    /// samplers; `None` when the projection leaves the stratum.
    pub fn project_near(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        match &self.carrier {
            Carrier::Implicit(s) => s
                .clauses
                .iter()
                .filter_map(|c| newton_project(c, x, self.projection.max_iter))
                .filter(|z| s.contains(z.as_slice(), TOL.membership))
                .min_by(|a, b| (x - a).norm().total_cmp(&(x - b).norm())),
            Carrier::Pl { complex, simplices, .. } => {
                let tops = simplices.iter().copied().filter(|&i| complex.simplex_dim(i) == self.dim);
                let mut best: Option<(f64, DVector<f64>)> = None;
                for i in tops {
                    let (d, foot, _) = complex.distance_among(x, complex.faces_of(i));
                    if best.as_ref().map(|b| d < b.0).unwrap_or(true) {
                        best = Some((d, foot));
                    }
                }
                best.map(|b| b.1).filter(|z| self.contains(z))
            }
        }
    }

    /// Up to `n` points of the stratum with ‖p − center‖ ∈ [rmin, rmax].
    pub fn sample_near<R: Rng + ?Sized>(
        &self,
        center: &DVector<f64>,
        rmin: f64,
        rmax: f64,
        n: usize,
        max_tries: usize,
        rng: &mut R,
    ) -> Vec<DVector<f64>> {
        let dim = self.ambient_dim();
        let mut out = Vec::with_capacity(n);
        if self.dim == 0 {
            if let Some(z) = self.project_near(center) {
                let r = (&z - center).norm();
                if r >= rmin && r <= rmax {
                    out.push(z);
                }
            }
            return out;
        }
        for _ in 0..max_tries {
            if out.len() >= n {
                break;
            }
            let y = center + sample::ball(dim, rmax, rng);
            if let Some(z) = self.project_near(&y) {
                let r = (&z - center).norm();
                if r >= rmin && r <= rmax {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// A set together with a partition into strata and a frontier relation.
#[derive(Debug, Clone)]
pub struct StratifiedSet {
    pub set: DefinableSet,
    pub strata: Vec<Stratum>,
    /// `(above, below)`: the stratum `below` lies in the closure of `above`.
    pub frontier: Vec<(usize, usize)>,
    /// Radius of the region around the origin that probes explore.
    pub probe_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierPair {
    pub above: String,
    pub below: String,
    pub probes: usize,
    /// Smallest probing radius at which every probe was approached.
    pub approached_down_to: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontierReport {
    pub pairs: Vec<FrontierPair>,
    /// Pairs `(above, below)` that touch but are not declared.
    pub undeclared: Vec<(String, String)>,
    /// Pairs whose sampled points belong to both strata.
    pub overlaps: Vec<(String, String)>,
    pub ok: bool,
}

const APPROACH_RADII: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

impl StratifiedSet {
    pub fn ambient_dim(&self) -> usize {
        self.set.ambient_dim()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.label == label)
    }

    pub fn stratum(&self, label: &str) -> Result<&Stratum> {
        self.strata
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::Invalid(format!("unknown stratum {label}")))
    }

    /// Index of the stratum containing `x`, preferring lower dimensions.
    pub fn locate(&self, x: &DVector<f64>) -> Option<usize> {
        let mut order: Vec<usize> = (0..self.strata.len()).collect();
        order.sort_by_key(|&i| self.strata[i].dim);
        order.into_iter().find(|&i| self.strata[i].contains(x))
    }

    fn sample_stratum(&self, i: usize, n: usize, rng: &mut impl Rng) -> Vec<DVector<f64>> {
        let origin = DVector::zeros(self.ambient_dim());
        self.strata[i].sample_near(&origin, 0.0, self.probe_radius, n, 200 * n.max(1), rng)
    }

    fn approaches(&self, above: usize, p: &DVector<f64>, rng: &mut impl Rng) -> Option<f64> {
        let mut reached = None;
        for &rho in &APPROACH_RADII {
            let hit = self.strata[above].sample_near(p, 0.0, rho, 1, 400, rng);
            if hit.is_empty() {
                break;
            }
            reached = Some(rho);
        }
        reached
    }

    /// Samples each stratum and audits the declared frontier relation.
    pub fn check_frontier(&self, probes: usize, rng: &RngStream) -> FrontierReport {
        let m = self.strata.len();
        let samples: Vec<Vec<DVector<f64>>> = (0..m)
            .map(|i| self.sample_stratum(i, probes.max(1), &mut rng.child(i as u64).rng()))
            .collect();
        let finest = *APPROACH_RADII.last().unwrap();
        let mut pairs = Vec::new();
        let mut undeclared = Vec::new();
        let mut overlaps = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                let mut r = rng.child((1000 + a * m + b) as u64).rng();
                let declared = self.frontier.contains(&(a, b));
                if samples[b].iter().any(|p| self.strata[a].contains(p)) {
                    overlaps.push((self.strata[a].label.clone(), self.strata[b].label.clone()));
                }
                if declared {
                    let mut worst: Option<f64> = Some(finest);
                    for p in &samples[b] {
                        let got = self.approaches(a, p, &mut r);
                        worst = match (worst, got) {
                            (Some(w), Some(g)) => Some(w.max(g)),
                            _ => None,
                        };
                    }
                    let passed = !samples[b].is_empty() && worst == Some(finest);
                    pairs.push(FrontierPair {
                        above: self.strata[a].label.clone(),
                        below: self.strata[b].label.clone(),
                        probes: samples[b].len(),
                        approached_down_to: if samples[b].is_empty() { None } else { worst },
                        passed,
                    });
                } else if self.strata[a].dim > self.strata[b].dim
                    && samples[b]
                        .iter()
                        .any(|p| self.approaches(a, p, &mut r) == Some(finest))
                {
                    undeclared.push((self.strata[a].label.clone(), self.strata[b].label.clone()));
                }
            }
        }
        let ok = pairs.iter().all(|p| p.passed) && undeclared.is_empty() && overlaps.is_empty();
        FrontierReport {
            pairs,
            undeclared,
            overlaps,
            ok,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit::{Condition, Sign};
    use crate::poly::Polynomial;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn eq(n: usize, pairs: &[(f64, &[u32])]) -> Condition {
        Condition::new(Polynomial::from_pairs(n, pairs).unwrap(), Sign::Eq)
    }

    #[test]
    fn nearest_examples() {
        let zaxis = ImplicitSet::from_conditions(3, vec![eq(3, &[(1.0, &[1, 0, 0])]), eq(3, &[(1.0, &[0, 1, 0])])], 1).unwrap();
        let s = Stratum::implicit("z", zaxis);
        assert!((s.nearest(&v(&[3.0, 4.0, 5.0])).unwrap() - v(&[0.0, 0.0, 5.0])).norm() < 1e-8);

        let circle = ImplicitSet::from_conditions(2, vec![eq(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])])], 1).unwrap();
        let s = Stratum::implicit("c", circle);
        assert!((s.nearest(&v(&[2.0, 0.0])).unwrap() - v(&[1.0, 0.0])).norm() < 1e-8);

        let parabola = ImplicitSet::from_conditions(2, vec![eq(2, &[(1.0, &[0, 1]), (-1.0, &[2, 0])])], 1).unwrap();
        let s = Stratum::implicit("p", parabola);
        let z = s.nearest(&v(&[0.0, 1.0])).unwrap();
        assert!((z - v(&[std::f64::consts::FRAC_1_SQRT_2, 0.5])).norm() < 1e-8);
    }

    #[test]
    fn tubular_radius_enforced() {
        let circle = ImplicitSet::from_conditions(2, vec![eq(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])])], 1).unwrap();
        let mut s = Stratum::implicit("c", circle);
        s.projection.tubular_radius = 0.5;
        assert!(matches!(s.nearest(&v(&[3.0, 0.0])), Err(Error::Projection(_))));
    }

    fn disc_pair(second_center: Option<f64>) -> StratifiedSet {
        let shift = second_center.unwrap_or(0.0);
        // open disc centred at (shift, 0) and the unit circle at the origin
        let open = ImplicitSet::from_conditions(
            2,
            vec![Condition::new(
                Polynomial::from_pairs(
                    2,
                    &[(1.0, &[0, 0]), (-1.0, &[2, 0]), (2.0 * shift, &[1, 0]), (-shift * shift, &[0, 0]), (-1.0, &[0, 2])],
                )
                .unwrap(),
                Sign::Gt,
            )],
            2,
        )
        .unwrap();
        let circle = ImplicitSet::from_conditions(2, vec![eq(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])])], 1).unwrap();
        StratifiedSet {
            set: DefinableSet::Implicit(circle.clone()),
            strata: vec![Stratum::implicit("open", open), Stratum::implicit("circle", circle)],
            frontier: vec![(0, 1)],
            probe_radius: 1.5,
        }
    }

    #[test]
    fn frontier_pass_and_violation() {
        let ok = disc_pair(None).check_frontier(6, &RngStream::new(3, 0));
        assert!(ok.ok, "{ok:?}");
        let bad = disc_pair(Some(5.0)).check_frontier(6, &RngStream::new(3, 0));
        assert!(!bad.ok);
        assert!(!bad.pairs[0].passed);
    }
}
