//! Hausdorff measure of a set inside a ball (ψ) and volumes of tubular
//! neighbourhoods.

use std::collections::HashMap;

use nalgebra::{DVector, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{Error, Result};
use crate::implicit::{Clause, ImplicitSet, Sign};
use crate::pl::PlComplex;
use crate::poly::{Polynomial, RootSet};
use crate::rng::RngStream;
use crate::sample;
use crate::set::DefinableSet;
use crate::strata::descend;
use crate::subspace::unit_ball_volume;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    /// Monte Carlo sample count.
    pub samples: usize,
    /// Quadrature panels for one-dimensional charts.
    pub panels: usize,
    pub rng: RngStream,
}

impl MeasureParams {
    pub fn new(samples: usize, rng: RngStream) -> Self {
        Self {
            samples,
            panels: 256,
            rng,
        }
    }
}

/// A value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

fn mean_and_stderr(sum: f64, sum2: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let m = sum / nf;
    let var = (sum2 / nf - m * m).max(0.0);
    (m, (var / (nf - 1.0).max(1.0)).sqrt())
}

/// H^l(A ∩ B(center, r)) with l the declared dimension of A.
pub fn psi(set: &DefinableSet, r: f64, center: &[f64], est: &MeasureParams) -> Result<Estimate> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!("radius {r} must be positive")));
    }
    if center.len() != set.ambient_dim() {
        return Err(Error::Domain("center dimension mismatch".into()));
    }
    let c = DVector::from_column_slice(center);
    match set {
        DefinableSet::Pl(cx) => pl_psi(cx, r, &c, est),
        DefinableSet::Implicit(s) => implicit_psi(s, r, &c, est),
    }
}

fn pl_psi(cx: &PlComplex, r: f64, c: &DVector<f64>, est: &MeasureParams) -> Result<Estimate> {
    let l = cx.top_dim();
    let mut total = 0.0;
    let mut var = 0.0;
    for i in 0..cx.len() {
        if cx.simplex_dim(i) != l {
            continue;
        }
        let g = cx.geom(i);
        if (&g.center - c).norm() > g.radius + r {
            continue;
        }
        let s = &cx.simplices()[i];
        let vs: Vec<&DVector<f64>> = s.iter().map(|&j| &cx.vertices()[j]).collect();
        match l {
            0 => {
                if (vs[0] - c).norm() <= r {
                    total += 1.0;
                }
            }
            1 => total += segment_in_ball(vs[0], vs[1], c, r),
            2 => total += triangle_in_ball(vs[0], vs[1], vs[2], c, r),
            _ => {
                // Monte Carlo on the simplex
                let mut rng = est.rng.child(i as u64).rng();
                let n = est.samples.max(2);
                let mut hits = 0usize;
                for _ in 0..n {
                    let w = sample::simplex_weights(l, &mut rng);
                    let p = vs.iter().zip(&w).fold(DVector::zeros(c.len()), |a, (v, &wi)| a + *v * wi);
                    if (p - c).norm() <= r {
                        hits += 1;
                    }
                }
                let vol = cx.volume(i);
                let f = hits as f64 / n as f64;
                total += vol * f;
                var += vol * vol * f * (1.0 - f) / n as f64;
            }
        }
    }
    Ok(Estimate {
        value: total,
        stderr: var.sqrt(),
    })
}

/// Length of the segment [a, b] inside the closed ball B(c, r).
pub fn segment_in_ball(a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, r: f64) -> f64 {
    let d = b - a;
    let f = a - c;
    let aa = d.norm_squared();
    let bb = 2.0 * f.dot(&d);
    let cc = f.norm_squared() - r * r;
    let disc = bb * bb - 4.0 * aa * cc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let s0 = ((-bb - sq) / (2.0 * aa)).max(0.0);
    let s1 = ((-bb + sq) / (2.0 * aa)).min(1.0);
    (s1 - s0).max(0.0) * aa.sqrt()
}

fn cross(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Signed area of the disc of radius `rho` at the origin intersected with
/// the triangle (0, p, q).
fn wedge_in_disc(p: Vector2<f64>, q: Vector2<f64>, rho: f64) -> f64 {
    let d = q - p;
    let aa = d.norm_squared();
    let mut pts = vec![p];
    if aa > 0.0 {
        let bb = 2.0 * p.dot(&d);
        let cc = p.norm_squared() - rho * rho;
        let disc = bb * bb - 4.0 * aa * cc;
        if disc > 0.0 {
            let sq = disc.sqrt();
            for s in [(-bb - sq) / (2.0 * aa), (-bb + sq) / (2.0 * aa)] {
                if s > 0.0 && s < 1.0 {
                    pts.push(p + d * s);
                }
            }
        }
    }
    pts.push(q);
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (u, v) = (w[0], w[1]);
        let m = (u + v) * 0.5;
        if m.norm() <= rho {
            area += 0.5 * cross(&u, &v);
        } else {
            area += 0.5 * rho * rho * cross(&u, &v).atan2(u.dot(&v));
        }
    }
    area
}

/// Area of the triangle (a, b, c) inside the closed ball B(center, r).
pub fn triangle_in_ball(a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, center: &DVector<f64>, r: f64) -> f64 {
    // orthonormal frame of the triangle's plane
    let e1 = b - a;
    let u = e1.normalize();
    let e2 = c - a;
    let w = &e2 - &u * u.dot(&e2);
    let v = w.normalize();
    let rel = center - a;
    let foot = &u * u.dot(&rel) + &v * v.dot(&rel);
    let h2 = (rel - &foot).norm_squared();
    if h2 >= r * r {
        return 0.0;
    }
    let rho = (r * r - h2).sqrt();
    let o = Vector2::new(u.dot(&foot), v.dot(&foot));
    let to2 = |p: &DVector<f64>| {
        let q = p - a;
        Vector2::new(u.dot(&q), v.dot(&q)) - o
    };
    let (pa, pb, pc) = (to2(a), to2(b), to2(c));
    (wedge_in_disc(pa, pb, rho) + wedge_in_disc(pb, pc, rho) + wedge_in_disc(pc, pa, rho)).abs()
}

fn single_equality(clause: &Clause) -> Result<&Polynomial> {
    let mut eqs = clause.equalities();
    let p = eqs
        .next()
        .ok_or_else(|| Error::Unsupported("clause without an equality in a lower-dimensional set".into()))?;
    if eqs.next().is_some() {
        return Err(Error::Unsupported("measure of implicit sets of codimension above one".into()));
    }
    Ok(p)
}

/// Points of a hypersurface on the line `base + s·e_axis`, |s − base_axis|
/// within the chord of B(c, r); returns `None` for degenerate lines.
fn chart_roots(p: &Polynomial, base: &[f64], axis: usize, lo: f64, hi: f64) -> Option<Vec<Vec<f64>>> {
    let mut x0 = base.to_vec();
    x0[axis] = 0.0;
    let mut u = vec![0.0; base.len()];
    u[axis] = 1.0;
    match p.restrict_line(&x0, &u).roots_in(lo, hi) {
        RootSet::Degenerate => None,
        RootSet::Roots(rs) => Some(
            rs.into_iter()
                .map(|s| {
                    let mut q = x0.clone();
                    q[axis] = s;
                    q
                })
                .collect(),
        ),
    }
}

/// Co-area weight |∇p|/|∂_axis p| when `axis` dominates the gradient.
fn chart_weight(grad: &[Polynomial], q: &[f64], axis: usize) -> f64 {
    let g: Vec<f64> = grad.iter().map(|d| d.eval(q)).collect();
    let ga = g[axis].abs();
    if g.iter().enumerate().any(|(j, v)| j != axis && (v.abs() > ga || (v.abs() == ga && j < axis))) {
        return 0.0;
    }
    if ga == 0.0 {
        return 0.0;
    }
    g.iter().map(|v| v * v).sum::<f64>().sqrt() / ga
}

/// Sum of dominant-chart weights over the set's points on one axis line.
fn line_contribution(
    s: &ImplicitSet,
    charts: &[(usize, &Polynomial, Vec<Polynomial>)],
    base: &[f64],
    axis: usize,
    c: &DVector<f64>,
    r: f64,
) -> Option<f64> {
    let mut off2 = 0.0;
    for (j, &b) in base.iter().enumerate() {
        if j != axis {
            off2 += (b - c[j]) * (b - c[j]);
        }
    }
    if off2 >= r * r {
        return Some(0.0);
    }
    let half = (r * r - off2).sqrt();
    let (lo, hi) = (c[axis] - half, c[axis] + half);
    let mut acc = 0.0;
    for (ci, p, grad) in charts {
        for q in chart_roots(p, base, axis, lo, hi)? {
            if !s.clauses[*ci].holds(&q, TOL.membership) {
                continue;
            }
            if s.clauses[..*ci].iter().any(|k| k.holds(&q, TOL.membership)) {
                continue;
            }
            acc += chart_weight(grad, &q, axis);
        }
    }
    Some(acc)
}

// 5-point Gauss–Legendre on [−1, 1]
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn implicit_psi(s: &ImplicitSet, r: f64, c: &DVector<f64>, est: &MeasureParams) -> Result<Estimate> {
    let n = s.ambient_dim;
    let l = s.declared_dim;
    let mut rng = est.rng.rng();
    if l == n {
        let m = est.samples.max(2);
        let mut hits = 0usize;
        for _ in 0..m {
            let x = c + sample::ball(n, r, &mut rng);
            if s.contains(x.as_slice(), TOL.membership) {
                hits += 1;
            }
        }
        let vol = unit_ball_volume(n) * r.powi(n as i32);
        let f = hits as f64 / m as f64;
        return Ok(Estimate {
            value: vol * f,
            stderr: vol * (f * (1.0 - f) / m as f64).sqrt(),
        });
    }
    if l + 1 != n {
        return Err(Error::Unsupported(format!(
            "{l}-dimensional measure of an implicit set in ℝ^{n}"
        )));
    }
    let charts: Vec<(usize, &Polynomial, Vec<Polynomial>)> = s
        .clauses
        .iter()
        .enumerate()
        .map(|(i, cl)| single_equality(cl).map(|p| (i, p, p.gradient())))
        .collect::<Result<_>>()?;
    if n == 2 {
        let quad = |panels: usize| -> (f64, usize) {
            let mut total = 0.0;
            let mut bad = 0;
            for axis in 0..2 {
                let other = 1 - axis;
                let (a, b) = (c[other] - r, c[other] + r);
                let h = (b - a) / panels as f64;
                for k in 0..panels {
                    let mid = a + h * (k as f64 + 0.5);
                    for (xg, wg) in GL_X.iter().zip(GL_W) {
                        let mut base = vec![0.0; 2];
                        base[other] = mid + 0.5 * h * xg;
                        match line_contribution(s, &charts, &base, axis, c, r) {
                            Some(v) => total += 0.5 * h * wg * v,
                            None => bad += 1,
                        }
                    }
                }
            }
            (total, bad)
        };
        let p = est.panels.max(8);
        let (coarse, _) = quad(p);
        let (fine, bad) = quad(2 * p);
        if bad * 10 > 2 * 2 * p * 5 {
            return Err(Error::Estimation(format!(
                "{bad} degenerate chart lines while measuring a curve"
            )));
        }
        return Ok(Estimate {
            value: fine,
            stderr: (fine - coarse).abs() + 1e-12 * fine.abs(),
        });
    }
    // Monte Carlo over the (n−1)-discs orthogonal to each axis
    let per_axis = (est.samples / n).max(2);
    let disc = unit_ball_volume(n - 1) * r.powi(n as i32 - 1);
    let mut value = 0.0;
    let mut var = 0.0;
    let mut bad = 0usize;
    for axis in 0..n {
        let (mut sum, mut sum2, mut cnt) = (0.0, 0.0, 0usize);
        for _ in 0..per_axis {
            let d = sample::ball(n - 1, r, &mut rng);
            let mut base = vec![0.0; n];
            let mut k = 0;
            for j in 0..n {
                if j != axis {
                    base[j] = c[j] + d[k];
                    k += 1;
                }
            }
            match line_contribution(s, &charts, &base, axis, c, r) {
                Some(v) => {
                    sum += v;
                    sum2 += v * v;
                    cnt += 1;
                }
                None => bad += 1,
            }
        }
        if cnt < 2 {
            return Err(Error::Estimation("no usable chart lines".into()));
        }
        let (m, se) = mean_and_stderr(sum, sum2, cnt);
        value += disc * m;
        var += (disc * se).powi(2);
    }
    if bad * 10 > per_axis * n {
        return Err(Error::Estimation(format!("{bad} degenerate chart lines")));
    }
    Ok(Estimate {
        value,
        stderr: var.sqrt(),
    })
}

/// Distance from points to an implicit hypersurface via a dense point cloud
/// from chart lines, refined by local descent near the threshold.
struct CloudDistance<'a> {
    set: &'a ImplicitSet,
    cell: f64,
    grid: HashMap<Vec<i64>, Vec<DVector<f64>>>,
    spacing: f64,
}

impl<'a> CloudDistance<'a> {
    fn build(s: &'a ImplicitSet, r: f64, eps: f64) -> Result<Self> {
        let n = s.ambient_dim;
        let charts: Vec<(usize, &Polynomial, Vec<Polynomial>)> = s
            .clauses
            .iter()
            .enumerate()
            .map(|(i, cl)| single_equality(cl).map(|p| (i, p, p.gradient())))
            .collect::<Result<_>>()?;
        let reach = r + eps;
        let spacing = (eps / 4.0).min(reach / 50.0);
        let m = (2.0 * reach / spacing).ceil() as i64;
        let cell = eps.max(spacing);
        let mut grid: HashMap<Vec<i64>, Vec<DVector<f64>>> = HashMap::new();
        let nlines = (m + 1).pow(n as u32 - 1) as usize;
        if nlines * n > 4_000_000 {
            return Err(Error::Estimation("tube resolution too fine for the distance oracle".into()));
        }
        for axis in 0..n {
            for idx in 0..nlines {
                let mut base = vec![0.0; n];
                let mut rem = idx as i64;
                for j in 0..n {
                    if j == axis {
                        continue;
                    }
                    base[j] = -reach + spacing * (rem % (m + 1)) as f64;
                    rem /= m + 1;
                }
                for (ci, p, _) in &charts {
                    let Some(pts) = chart_roots(p, &base, axis, -reach, reach) else {
                        continue;
                    };
                    for q in pts {
                        if !s.clauses[*ci].holds(&q, TOL.membership) {
                            continue;
                        }
                        let key: Vec<i64> = q.iter().map(|v| (v / cell).floor() as i64).collect();
                        grid.entry(key).or_default().push(DVector::from_vec(q));
                    }
                }
            }
        }
        Ok(Self {
            set: s,
            cell,
            grid,
            spacing,
        })
    }

    fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Whether d(x, A) ≤ eps.
    fn within(&self, x: &DVector<f64>, eps: f64) -> bool {
        let n = x.len();
        let key: Vec<i64> = x.iter().map(|v| (v / self.cell).floor() as i64).collect();
        let span = (eps / self.cell).ceil() as i64 + 1;
        let mut best = f64::INFINITY;
        let mut best_pt: Option<&DVector<f64>> = None;
        let width = (2 * span + 1) as usize;
        let total = width.pow(n as u32);
        for code in 0..total {
            let mut k = key.clone();
            let mut rem = code;
            for kj in k.iter_mut() {
                *kj += (rem % width) as i64 - span;
                rem /= width;
            }
            if let Some(pts) = self.grid.get(&k) {
                for p in pts {
                    let d = (x - p).norm();
                    if d < best {
                        best = d;
                        best_pt = Some(p);
                    }
                }
            }
        }
        if best <= eps {
            return true;
        }
        if best > eps + self.spacing {
            return false;
        }
        let seed = best_pt.expect("finite best").clone();
        for clause in &self.set.clauses {
            if let Some(z) = descend(clause, n, x, &seed, 100) {
                if self.set.contains(z.as_slice(), TOL.membership) && (x - z).norm() <= eps {
                    return true;
                }
            }
        }
        false
    }
}

/// H^n(N(A, ε) ∩ B(0, r)) by sampling a bounding box of the tube.
pub fn tube_measure(set: &DefinableSet, eps: f64, r: f64, est: &MeasureParams) -> Result<Estimate> {
    if eps <= 0.0 || r <= 0.0 {
        return Err(Error::Domain("tube needs positive eps and r".into()));
    }
    let n = set.ambient_dim();
    if set.declared_dim() >= n {
        return Err(Error::Domain("tube of a full-dimensional set".into()));
    }
    let mut rng = est.rng.rng();
    let (lo, hi, test): (Vec<f64>, Vec<f64>, Box<dyn Fn(&DVector<f64>) -> bool + '_>) = match set {
        DefinableSet::Pl(cx) => {
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for v in cx.vertices() {
                for j in 0..n {
                    lo[j] = lo[j].min(v[j]);
                    hi[j] = hi[j].max(v[j]);
                }
            }
            (lo, hi, Box::new(move |x: &DVector<f64>| cx.distance(x).0 <= eps))
        }
        DefinableSet::Implicit(s) => {
            let cloud = CloudDistance::build(s, r, eps)?;
            if cloud.is_empty() {
                return Ok(Estimate::exact(0.0));
            }
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for p in cloud.grid.values().flatten() {
                for j in 0..n {
                    lo[j] = lo[j].min(p[j] - cloud.spacing);
                    hi[j] = hi[j].max(p[j] + cloud.spacing);
                }
            }
            (lo, hi, Box::new(move |x: &DVector<f64>| cloud.within(x, eps)))
        }
    };
    let lo: Vec<f64> = lo.iter().map(|v| (v - eps).max(-r)).collect();
    let hi: Vec<f64> = hi.iter().map(|v| (v + eps).min(r)).collect();
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Ok(Estimate::exact(0.0));
    }
    let box_vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let m = est.samples.max(2);
    let mut hits = 0usize;
    for _ in 0..m {
        let x = DVector::from_fn(n, |j, _| rng.random_range(lo[j]..hi[j]));
        if x.norm() <= r && test(&x) {
            hits += 1;
        }
    }
    let f = hits as f64 / m as f64;
    Ok(Estimate {
        value: box_vol * f,
        stderr: box_vol * (f * (1.0 - f) / m as f64).sqrt(),
    })
}

/// True when every condition of every clause is an equality or inequality
/// that keeps the set closed.
pub fn is_closed_description(s: &ImplicitSet) -> bool {
    s.clauses.iter().all(|c| c.0.iter().all(|k| k.sign != Sign::Gt))
}
