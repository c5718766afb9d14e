//! Inward stratified vector field on PL stratified sets and the radial
//! deformation retract it generates.

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample;
use crate::strata::{Carrier, StratifiedSet};
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub eps: f64,
    /// Collar width in units of the mesh size.
    pub collar_cells: f64,
    /// Required strict bound on ‖ξ‖.
    pub speed_bound: f64,
    pub max_halvings: u32,
    /// Field evaluations per top simplex when auditing the speed bound.
    pub audit_points: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            eps: 0.05,
            collar_cells: 2.0,
            speed_bound: 2.0,
            max_halvings: 10,
            audit_points: 64,
        }
    }
}

/// ξ = −w/⟨∂ρ, w⟩, where w blends P_x(∂ρ) with the field of the nearest lower
/// stratum over a collar of width min(collar_cells·mesh, eps·‖π(x)‖).
#[derive(Debug, Clone)]
pub struct StratifiedField {
    ss: StratifiedSet,
    pub r0: f64,
    pub eps: f64,
    pub collar_cells: f64,
    pub speed_bound: f64,
    mesh: f64,
    origin: usize,
    lower: Vec<Vec<usize>>,
    /// Largest ‖ξ‖ seen while auditing.
    pub max_speed: f64,
}

fn pl_mesh(ss: &StratifiedSet) -> Result<f64> {
    let mut mesh: f64 = 0.0;
    for s in &ss.strata {
        match &s.carrier {
            Carrier::Pl { complex, .. } => mesh = mesh.max(complex.mesh()),
            Carrier::Implicit(_) => return Err(Error::Unsupported("retraction flow needs PL strata".into())),
        }
    }
    Ok(mesh)
}

/// C¹ step from 0 at t ≤ 0 to 1 at t ≥ 1.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

impl StratifiedField {
    pub fn stratified_set(&self) -> &StratifiedSet {
        &self.ss
    }

    fn tangent(&self, s: usize, x: &DVector<f64>) -> Result<Subspace> {
        let st = &self.ss.strata[s];
        match st.tangent_space(x) {
            Ok(t) => Ok(t),
            Err(_) => {
                let p = st.project_near(x).ok_or_else(|| Error::Domain(format!("point off stratum {}", st.label)))?;
                st.tangent_space(&p)
            }
        }
    }

    fn collar(&self, p: &DVector<f64>) -> f64 {
        (self.collar_cells * self.mesh).min(self.eps * p.norm())
    }

    /// Blended field before normalization, for a point of stratum `s`.
    pub fn w(&self, s: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let rho = x.norm();
        if rho == 0.0 {
            return Ok(DVector::zeros(x.len()));
        }
        let t = self.tangent(s, x)?;
        let base = t.project(&(x / rho))?;
        let mut near: Option<(f64, DVector<f64>)> = None;
        for &l in &self.lower[s] {
            let p = self.ss.strata[l].nearest(x)?;
            let d = (x - &p).norm();
            if near.as_ref().map(|b| d < b.0).unwrap_or(true) {
                near = Some((d, p));
            }
        }
        let Some((d, p)) = near else { return Ok(base) };
        let c = self.collar(&p);
        if c <= 0.0 || d >= c {
            return Ok(base);
        }
        let Some(sl) = self.ss.locate(&p) else { return Ok(base) };
        if sl == self.origin {
            return Ok(base);
        }
        let g = smoothstep(2.0 * d / c - 1.0);
        let lw = self.w(sl, &p)?;
        t.project(&(base * g + lw * (1.0 - g)))
    }

    /// ξ at a point of stratum `s`.
    pub fn xi_on(&self, s: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let rho = x.norm();
        if rho == 0.0 {
            return Err(Error::Domain("field is undefined at the origin".into()));
        }
        let w = self.w(s, x)?;
        let dot = w.dot(&(x / rho));
        if dot <= 1e-12 {
            return Err(Error::Precondition(format!(
                "field not transverse to the sphere at {:?}",
                x.as_slice()
            )));
        }
        Ok(-w / dot)
    }

    /// ξ at `x`, locating its stratum first.
    pub fn xi(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self
            .ss
            .locate(x)
            .ok_or_else(|| Error::Domain("point is not in the stratified set".into()))?;
        self.xi_on(s, x)
    }

    fn audit_points<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(usize, DVector<f64>)> {
        let mut out = Vec::new();
        for (si, st) in self.ss.strata.iter().enumerate() {
            if si == self.origin {
                continue;
            }
            let Carrier::Pl { complex, simplices, .. } = &st.carrier else { continue };
            for &i in simplices.iter().filter(|&&i| complex.simplex_dim(i) == st.dim) {
                let vs = &complex.simplices()[i];
                for k in 0..n {
                    let mut wts = sample::simplex_weights(st.dim, rng);
                    if k % 2 == 1 && st.dim > 0 {
                        // hug a facet to exercise the collar
                        let j = rng.random_range(0..wts.len());
                        let scale = rng.random::<f64>() * 1e-2;
                        let extra = wts[j] * (1.0 - scale);
                        wts[j] *= scale;
                        let m = wts.len() as f64 - 1.0;
                        for (q, wq) in wts.iter_mut().enumerate() {
                            if q != j {
                                *wq += extra / m;
                            }
                        }
                    }
                    let x = vs
                        .iter()
                        .zip(&wts)
                        .fold(DVector::zeros(complex.ambient_dim()), |acc, (&v, &wv)| acc + &complex.vertices()[v] * wv);
                    let r = x.norm();
                    if r > 1e-9 && r <= self.r0 && st.contains(&x) {
                        out.push((si, x));
                    }
                }
            }
        }
        out
    }

    /// Largest ‖ξ(x) − ξ(p)‖ over points p of lower strata and x within
    /// distance h of p on a stratum above.
    pub fn skeleton_jump(&self, h: f64, n: usize, rng: &RngStream) -> Result<f64> {
        let mut g = rng.rng();
        let origin = DVector::zeros(self.ss.ambient_dim());
        let mut worst: f64 = 0.0;
        for (above, lows) in self.lower.iter().enumerate() {
            for &below in lows {
                let ps = self.ss.strata[below].sample_near(&origin, 0.25 * self.r0, 0.75 * self.r0, n, 50 * n, &mut g);
                for p in ps {
                    let xp = self.xi_on(below, &p)?;
                    for _ in 0..8 {
                        let q = &p + sample::ball(p.len(), h, &mut g);
                        let Some(x) = self.ss.strata[above].project_near(&q) else { continue };
                        if (&x - &p).norm() > h || !self.ss.strata[above].contains(&x) {
                            continue;
                        }
                        worst = worst.max((self.xi_on(above, &x)? - &xp).norm());
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// ρ restricted to a simplex is critical exactly where the foot of the
/// origin on its affine hull lies in the simplex; any such point at radius
/// in (0, r0] breaks transversality.
fn check_transverse(ss: &StratifiedSet, origin: usize, r0: f64) -> Result<()> {
    let zero = DVector::zeros(ss.ambient_dim());
    for (si, st) in ss.strata.iter().enumerate() {
        if si == origin {
            continue;
        }
        let Carrier::Pl { complex, simplices, .. } = &st.carrier else { continue };
        for &i in simplices {
            let (lam, dist) = complex.barycentric(i, &zero);
            if dist > 1e-12 && dist <= r0 && lam.iter().all(|&l| l >= -1e-12) {
                return Err(Error::Precondition(format!(
                    "sphere of radius {dist:.6} is not transverse to {}",
                    st.label
                )));
            }
        }
    }
    Ok(())
}

/// Builds ξ on a PL stratified set whose origin is a point stratum, halving
/// eps until the speed bound holds at every audit point.
pub fn build_field(ss: &StratifiedSet, r0: f64, cfg: &FieldConfig, rng: &RngStream) -> Result<StratifiedField> {
    if !(r0 > 0.0) || !(cfg.eps > 0.0) || !(cfg.speed_bound > 1.0) {
        return Err(Error::Domain("need r0 > 0, eps > 0 and speed bound > 1".into()));
    }
    let mesh = pl_mesh(ss)?;
    let zero = DVector::zeros(ss.ambient_dim());
    let origin = ss
        .strata
        .iter()
        .position(|s| s.dim == 0 && s.contains(&zero))
        .ok_or_else(|| Error::Precondition("origin is not a point stratum".into()))?;
    let lower: Vec<Vec<usize>> = (0..ss.strata.len())
        .map(|a| {
            let mut v: Vec<usize> = if ss.frontier.is_empty() {
                (0..ss.strata.len()).filter(|&b| ss.strata[b].dim < ss.strata[a].dim).collect()
            } else {
                ss.frontier.iter().filter(|&&(x, _)| x == a).map(|&(_, b)| b).collect()
            };
            v.retain(|&b| b != origin && ss.strata[b].dim < ss.strata[a].dim);
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut field = StratifiedField {
        ss: ss.clone(),
        r0,
        eps: cfg.eps,
        collar_cells: cfg.collar_cells,
        speed_bound: cfg.speed_bound,
        mesh,
        origin,
        lower,
        max_speed: 0.0,
    };
    check_transverse(ss, origin, r0)?;
    let pts = field.audit_points(cfg.audit_points, &mut rng.rng());
    for _ in 0..=cfg.max_halvings {
        let mut top: f64 = 0.0;
        for (s, x) in &pts {
            top = top.max(field.xi_on(*s, x)?.norm());
        }
        field.max_speed = top;
        if top < cfg.speed_bound {
            return Ok(field);
        }
        field.eps *= 0.5;
    }
    Err(Error::EpsTooLarge(field.eps * 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    /// Flow times; the last equals ‖x‖ − r, or 0 for a constant trajectory.
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<String>,
    pub rho: Vec<f64>,
    pub max_speed: f64,
}

impl FlowTrajectory {
    pub fn total_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// CSV with columns s, x0.., stratum, rho.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.points.first().map(|p| p.len()).unwrap_or(0);
        let coords: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        writeln!(out, "s,{},stratum,rho", coords.join(","))?;
        for i in 0..self.times.len() {
            let p: Vec<String> = self.points[i].iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{},{},{}", self.times[i], p.join(","), self.labels[i], self.rho[i])?;
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau; ξ is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const ATOL: f64 = 1e-11;

struct Stepper<'a> {
    field: &'a StratifiedField,
    s: usize,
    max_speed: f64,
}

impl Stepper<'_> {
    fn rhs(&mut self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let v = self.field.xi_on(self.s, x)?;
        self.max_speed = self.max_speed.max(v.norm());
        Ok(v)
    }

    /// One attempted step; returns the 5th-order state and the error estimate.
    fn attempt(&mut self, x: &DVector<f64>, h: f64) -> Result<(DVector<f64>, f64)> {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        for i in 0..7 {
            let mut y = x.clone();
            for (j, kj) in k.iter().enumerate() {
                y += kj * (h * A[i][j]);
            }
            k.push(self.rhs(&y)?);
        }
        let mut y5 = x.clone();
        let mut e = DVector::zeros(x.len());
        for i in 0..7 {
            y5 += &k[i] * (h * B5[i]);
            e += &k[i] * (h * (B5[i] - B4[i]));
        }
        Ok((y5, e.norm()))
    }
}

/// Integrates ξ from x for time ‖x‖ − r, reporting `steps` equally spaced
/// samples. Points with ‖x‖ ≤ r stay put.
pub fn flow_retract(field: &StratifiedField, r: f64, r_prime: f64, x: &[f64], steps: usize) -> Result<FlowTrajectory> {
    if !(r > 0.0 && r < r_prime && r_prime <= field.r0 + 1e-12) {
        return Err(Error::Domain(format!("need 0 < r < r' <= r0, got r = {r}, r' = {r_prime}")));
    }
    let x0 = DVector::from_column_slice(x);
    let rho0 = x0.norm();
    if rho0 > r_prime * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("start point has radius {rho0} > r' = {r_prime}")));
    }
    let s = field
        .ss
        .locate(&x0)
        .ok_or_else(|| Error::Domain("start point is not in the stratified set".into()))?;
    let label = field.ss.strata[s].label.clone();
    let steps = steps.max(1);
    if rho0 <= r {
        return Ok(FlowTrajectory {
            times: vec![0.0; steps + 1],
            points: vec![x.to_vec(); steps + 1],
            labels: vec![label; steps + 1],
            rho: vec![rho0; steps + 1],
            max_speed: 0.0,
        });
    }
    let total = rho0 - r;
    let mut st = Stepper { field, s, max_speed: 0.0 };
    let stratum = &field.ss.strata[s];
    let mut traj = FlowTrajectory {
        times: vec![0.0],
        points: vec![x.to_vec()],
        labels: vec![label],
        rho: vec![rho0],
        max_speed: 0.0,
    };
    let mut cur = x0;
    let mut t = 0.0;
    let mut h = total / steps as f64;
    for i in 1..=steps {
        let target = total * i as f64 / steps as f64;
        while target - t > 1e-15 * total {
            let hh = h.min(target - t);
            let (y, err) = st.attempt(&cur, hh)?;
            if err <= ATOL || hh <= 1e-13 * total {
                if err > ATOL * 1e3 {
                    return Err(Error::Integration {
                        reason: "step rejection cascade".into(),
                        s: t,
                        last_state: cur.iter().copied().collect(),
                    });
                }
                t += hh;
                cur = if stratum.contains(&y) { y } else { stratum.project_near(&y).unwrap_or(y) };
                let grow = if err == 0.0 { 4.0 } else { (0.9 * (ATOL / err).powf(0.2)).clamp(0.2, 4.0) };
                h = (hh * grow).max(h.min(hh));
            } else {
                h = hh * (0.9 * (ATOL / err).powf(0.2)).clamp(0.1, 0.9);
            }
        }
        let l = field
            .ss
            .locate(&cur)
            .map(|j| field.ss.strata[j].label.clone())
            .unwrap_or_else(|| "?".into());
        traj.times.push(target);
        traj.rho.push(cur.norm());
        traj.points.push(cur.iter().copied().collect());
        traj.labels.push(l);
    }
    traj.max_speed = st.max_speed;
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Max of ‖F(x,t) − x‖/(2t|r′ − r|) over samples with t > 0.
    pub max_ratio: f64,
    /// Max of |ρ(Φ(x,s)) − (ρ(x) − s)|.
    pub max_rate_error: f64,
    /// Fraction of samples whose stratum equals the start stratum.
    pub label_agreement: f64,
    pub max_speed: f64,
    pub violations: Vec<String>,
}

/// Audits ‖F(x,t) − x‖ ≤ 2t|r′ − r| with F(x,t) = Φ(x, t(‖x‖ − r)).
pub fn verify_bounds(trajectories: &[FlowTrajectory], r: f64, r_prime: f64) -> BoundsReport {
    const SLACK: f64 = 1e-9;
    let span = (r_prime - r).abs();
    let mut rep = BoundsReport {
        max_ratio: 0.0,
        max_rate_error: 0.0,
        label_agreement: 1.0,
        max_speed: 0.0,
        violations: Vec::new(),
    };
    let (mut agree, mut count) = (0usize, 0usize);
    for (ti, tr) in trajectories.iter().enumerate() {
        rep.max_speed = rep.max_speed.max(tr.max_speed);
        let total = tr.total_time();
        let x0 = DVector::from_column_slice(&tr.points[0]);
        for i in 0..tr.times.len() {
            count += 1;
            if tr.labels[i] == tr.labels[0] {
                agree += 1;
            } else {
                rep.violations.push(format!("trajectory {ti} left {} at s = {}", tr.labels[0], tr.times[i]));
            }
            rep.max_rate_error = rep.max_rate_error.max((tr.rho[i] - (tr.rho[0] - tr.times[i])).abs());
            if total <= 0.0 || tr.times[i] <= 0.0 {
                continue;
            }
            let frac = tr.times[i] / total;
            let moved = (DVector::from_column_slice(&tr.points[i]) - &x0).norm();
            let bound = 2.0 * frac * span;
            rep.max_ratio = rep.max_ratio.max(moved / bound);
            if moved > bound + SLACK {
                rep.violations.push(format!("trajectory {ti}: moved {moved} > {bound} at t = {frac}"));
            }
        }
    }
    if count > 0 {
        rep.label_agreement = agree as f64 / count as f64;
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl::PlComplex;
    use crate::set::DefinableSet;
    use crate::strata::Stratum;
    use std::sync::Arc;

    fn rays(dirs: &[[f64; 2]]) -> StratifiedSet {
        let mut verts = vec![vec![0.0, 0.0]];
        verts.extend(dirs.iter().map(|d| d.to_vec()));
        let tops: Vec<Vec<usize>> = (1..=dirs.len()).map(|i| vec![0, i]).collect();
        let c = Arc::new(PlComplex::new_closed(2, verts, &tops).unwrap());
        let mut strata = vec![Stratum::pl("o", c.clone(), vec![c.find(&[0]).unwrap()]).unwrap()];
        for i in 1..=dirs.len() {
            strata.push(Stratum::pl(format!("ray{i}"), c.clone(), vec![c.find(&[0, i]).unwrap()]).unwrap());
        }
        let frontier = (1..=dirs.len()).map(|i| (i, 0)).collect();
        StratifiedSet { set: DefinableSet::Pl(c), strata, frontier, probe_radius: 0.9 }
    }

    #[test]
    fn ray_field_is_radial() {
        let ss = rays(&[[1.0, 0.0]]);
        let f = build_field(&ss, 0.9, &FieldConfig::default(), &RngStream::new(1, 0)).unwrap();
        let x = DVector::from_column_slice(&[0.4, 0.0]);
        let xi = f.xi(&x).unwrap();
        assert!((xi - DVector::from_column_slice(&[-1.0, 0.0])).norm() < 1e-12);
        let tr = flow_retract(&f, 0.2, 0.8, &[0.8, 0.0], 10).unwrap();
        assert!((tr.rho.last().unwrap() - 0.2).abs() < 1e-9);
        assert!((tr.total_time() - 0.6).abs() < 1e-15);
        let rep = verify_bounds(&[tr], 0.2, 0.8);
        assert!(rep.violations.is_empty());
        assert!(rep.max_ratio <= 0.5 + 1e-9, "{}", rep.max_ratio);
    }

    #[test]
    fn cone_of_two_rays() {
        let ss = rays(&[[1.0, 0.0], [0.6, 0.8]]);
        let f = build_field(&ss, 0.9, &FieldConfig::default(), &RngStream::new(1, 0)).unwrap();
        for p in [[0.5, 0.0], [0.3, 0.4]] {
            let x = DVector::from_column_slice(&p);
            let xi = f.xi(&x).unwrap();
            assert!((xi.dot(&(&x / x.norm())) + 1.0).abs() < 1e-12);
        }
        let tr = flow_retract(&f, 0.1, 0.5, &[0.3, 0.4], 5).unwrap();
        assert!(tr.labels.iter().all(|l| l == "ray2"));
    }

    #[test]
    fn inside_ball_is_constant_and_bad_inputs() {
        let ss = rays(&[[1.0, 0.0]]);
        let f = build_field(&ss, 0.9, &FieldConfig::default(), &RngStream::new(1, 0)).unwrap();
        let tr = flow_retract(&f, 0.5, 0.8, &[0.3, 0.0], 4).unwrap();
        assert!(tr.points.iter().all(|p| p == &vec![0.3, 0.0]));
        assert_eq!(verify_bounds(&[tr], 0.5, 0.8).max_ratio, 0.0);
        assert!(flow_retract(&f, 0.5, 0.4, &[0.3, 0.0], 4).is_err());
        assert!(flow_retract(&f, 0.1, 0.4, &[0.6, 0.0], 4).is_err());
        let mut bad = ss.clone();
        bad.strata.remove(0);
        bad.frontier.clear();
        assert!(matches!(build_field(&bad, 0.9, &FieldConfig::default(), &RngStream::new(1, 0)), Err(Error::Precondition(_))));
    }
}
