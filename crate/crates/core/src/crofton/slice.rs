//! Euler characteristics of slices A ∩ π_P⁻¹(x) ∩ B(center, r).
//!
//! PL sets are sliced exactly: the slice is the disjoint union of the pieces
//! relint(τ) ∩ F ∩ B, each a relatively open convex polytope cut by a closed
//! ball, whose compactly supported Euler characteristics add up to χ of the
//! compact slice. Implicit sets are sliced along lines by root isolation, and
//! on flats of dimension two or more by a cubical approximation that is
//! cross-checked at two resolutions.

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::config::TOL;
use crate::error::{Error, Result};
use crate::implicit::{Clause, ImplicitSet, Sign};
use crate::linalg::Svd;
use crate::pl::PlComplex;
use crate::poly::{Polynomial, RootSet};
use crate::set::DefinableSet;
use crate::subspace::Subspace;

/// One slice request: the flat through `x` orthogonal to `p`, clipped by the
/// closed ball B(center, r).
#[derive(Debug, Clone)]
pub struct SlicePlan {
    pub p: Subspace,
    pub x: DVector<f64>,
    pub r: f64,
    pub center: DVector<f64>,
}

/// χ of the slice described by `plan`.
pub fn slice_euler(set: &DefinableSet, plan: &SlicePlan) -> Result<i64> {
    let px = plan.p.project(&plan.x)?;
    if (&px - &plan.x).norm() > 1e-8 * (1.0 + plan.x.norm()) {
        return Err(Error::Domain("slice base point is not on the plane".into()));
    }
    Slicer::new(set, &plan.p, plan.r, &plan.center)?.euler(&plan.x)
}

const LAMBDA_TOL: f64 = 1e-12;
const VOXEL_2D: usize = 41;
const VOXEL_3D: usize = 25;

/// Per-plane precomputation, reused for many base points.
pub struct Slicer<'a> {
    set: &'a DefinableSet,
    p: Subspace,
    comp: Subspace,
    r: f64,
    center: DVector<f64>,
    pl: Vec<PlPiece>,
    polys: Vec<&'a Polynomial>,
}

struct PlPiece {
    simplex: usize,
    /// vertex matrix n×(d+1)
    verts: DMatrix<f64>,
    pinv: DMatrix<f64>,
    m: DMatrix<f64>,
    /// null-space coordinates of the barycentric solution set
    null: DMatrix<f64>,
    /// for two-dimensional pieces: orthonormal basis W of V·N and G = N·R⁻¹
    w: Option<DMatrix<f64>>,
    g: Option<DMatrix<f64>>,
}

fn degenerate(msg: &str) -> Error {
    Error::DegenerateSlice(msg.into())
}

impl<'a> Slicer<'a> {
    pub fn new(set: &'a DefinableSet, p: &Subspace, r: f64, center: &DVector<f64>) -> Result<Self> {
        let n = set.ambient_dim();
        if p.ambient_dim() != n || center.len() != n {
            return Err(Error::Domain("slice plane or center in the wrong ambient space".into()));
        }
        if r <= 0.0 {
            return Err(Error::Domain("slice radius must be positive".into()));
        }
        let comp = p.complement();
        let mut pl = Vec::new();
        let mut polys = Vec::new();
        match set {
            DefinableSet::Pl(cx) => pl = Self::pl_pieces(cx, p)?,
            DefinableSet::Implicit(s) => polys = s.polynomials().collect(),
        }
        Ok(Self {
            set,
            p: p.clone(),
            comp,
            r,
            center: center.clone(),
            pl,
            polys,
        })
    }

    fn pl_pieces(cx: &PlComplex, p: &Subspace) -> Result<Vec<PlPiece>> {
        let l = p.dim();
        let n = cx.ambient_dim();
        let f = p.frame();
        let mut out = Vec::new();
        for i in 0..cx.len() {
            let d = cx.simplex_dim(i);
            if d < l {
                continue;
            }
            let s = &cx.simplices()[i];
            let verts = DMatrix::from_fn(n, d + 1, |a, b| cx.vertices()[s[b]][a]);
            let mut m = DMatrix::zeros(l + 1, d + 1);
            m.view_mut((0, 0), (l, d + 1)).copy_from(&f.tr_mul(&verts));
            m.row_mut(l).fill(1.0);
            let svd = Svd::new(&m);
            let cut = TOL.rank * svd.max_singular().max(1.0);
            let pinv = svd.pseudo_inverse(cut);
            let null = svd.null_space(cut);
            let nullity = null.ncols();
            let (w, g) = if nullity == 2 {
                let b = &verts * &null;
                let qr = b.qr();
                let rr = qr.r();
                let rinv = rr
                    .try_inverse()
                    .ok_or_else(|| degenerate("flat meets a simplex in a degenerate polygon"))?;
                (Some(qr.q()), Some(&null * rinv))
            } else {
                (None, None)
            };
            out.push(PlPiece {
                simplex: i,
                verts,
                pinv,
                m,
                null,
                w,
                g,
            });
        }
        Ok(out)
    }

    pub fn plane(&self) -> &Subspace {
        &self.p
    }

    /// χ of the slice through the point `x` of the plane.
    pub fn euler(&self, x: &DVector<f64>) -> Result<i64> {
        match self.set {
            DefinableSet::Pl(cx) => self.pl_euler(cx, x),
            DefinableSet::Implicit(s) => match self.comp.dim() {
                0 => Ok((s.contains(x.as_slice(), TOL.membership) && (x - &self.center).norm() <= self.r) as i64),
                1 => self.line_euler(s, x),
                _ => self.voxel_euler_checked(s, x),
            },
        }
    }

    fn pl_euler(&self, cx: &PlComplex, x: &DVector<f64>) -> Result<i64> {
        let l = self.p.dim();
        let xc = self.p.coords_unchecked(x);
        let mut b = DVector::zeros(l + 1);
        b.rows_mut(0, l).copy_from(&xc);
        b[l] = 1.0;
        let mut chi = 0;
        for piece in &self.pl {
            let g = cx.geom(piece.simplex);
            if (&g.center - &self.center).norm() > g.radius + self.r {
                continue;
            }
            let gc = self.p.coords_unchecked(&g.center);
            if (gc - &xc).norm() > g.radius + 1e-12 {
                continue;
            }
            chi += self.piece_euler(piece, &b)?;
        }
        Ok(chi)
    }

    fn piece_euler(&self, piece: &PlPiece, b: &DVector<f64>) -> Result<i64> {
        let lam0 = &piece.pinv * b;
        let res = (&piece.m * &lam0 - b).norm();
        if res > 1e-9 * (1.0 + b.norm()) {
            return Ok(0);
        }
        let p0 = &piece.verts * &lam0;
        let rel = &p0 - &self.center;
        let r2 = self.r * self.r;
        match piece.null.ncols() {
            0 => {
                if lam0.iter().any(|&v| v.abs() <= LAMBDA_TOL) {
                    return Err(degenerate("flat passes through a simplex boundary"));
                }
                if lam0.iter().any(|&v| v < 0.0) {
                    return Ok(0);
                }
                let d2 = rel.norm_squared();
                if (d2 - r2).abs() <= 1e-12 * r2 {
                    return Err(degenerate("slice point on the sphere"));
                }
                Ok((d2 <= r2) as i64)
            }
            1 => {
                let nv = piece.null.column(0);
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for (a, c) in lam0.iter().zip(nv.iter()) {
                    if c.abs() <= 1e-14 {
                        if *a <= LAMBDA_TOL {
                            if a.abs() <= LAMBDA_TOL {
                                return Err(degenerate("flat runs along a simplex face"));
                            }
                            return Ok(0);
                        }
                        continue;
                    }
                    let t = -a / c;
                    if *c > 0.0 {
                        lo = lo.max(t);
                    } else {
                        hi = hi.min(t);
                    }
                }
                if lo >= hi {
                    return Ok(0);
                }
                let w = &piece.verts * nv;
                let qa = w.norm_squared();
                let qb = 2.0 * w.dot(&rel);
                let qc = rel.norm_squared() - r2;
                let disc = qb * qb - 4.0 * qa * qc;
                let scale = qb * qb + (4.0 * qa * qc).abs();
                if disc.abs() <= 1e-12 * scale {
                    return Err(degenerate("flat tangent to the sphere"));
                }
                if disc < 0.0 {
                    return Ok(0);
                }
                let sq = disc.sqrt();
                let (c1, c2) = ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa));
                let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()).max(c1.abs()).max(c2.abs()));
                if (lo - c1).abs() <= tol || (hi - c2).abs() <= tol || (lo - c2).abs() <= tol || (hi - c1).abs() <= tol {
                    return Err(degenerate("sphere meets a simplex face on the flat"));
                }
                let left = lo.max(c1);
                let right = hi.min(c2);
                if left > right {
                    return Ok(0);
                }
                let left_closed = c1 > lo;
                let right_closed = c2 < hi;
                Ok(match (left_closed, right_closed) {
                    (true, true) => 1,
                    (false, false) => -1,
                    _ => 0,
                })
            }
            2 => self.polygon_euler(piece, &lam0, &p0),
            e => Err(Error::Unsupported(format!("{e}-dimensional PL slice pieces"))),
        }
    }

    /// χ_c of an open polygon intersected with a closed disc: 1 if they meet,
    /// minus the number of open circle arcs inside the polygon.
    fn polygon_euler(&self, piece: &PlPiece, lam0: &DVector<f64>, p0: &DVector<f64>) -> Result<i64> {
        let w = piece.w.as_ref().expect("2-piece");
        let g = piece.g.as_ref().expect("2-piece");
        let rel = &self.center - p0;
        let sc = w.tr_mul(&rel);
        let rho2 = self.r * self.r - (rel.norm_squared() - sc.norm_squared());
        if rho2 <= 0.0 {
            return Ok(0);
        }
        let rho = rho2.sqrt();
        let sc = [sc[0], sc[1]];
        // constraints a_i + g_i · s > 0
        let mut cons: Vec<(f64, [f64; 2])> = Vec::new();
        for i in 0..lam0.len() {
            let gi = [g[(i, 0)], g[(i, 1)]];
            let gn = (gi[0] * gi[0] + gi[1] * gi[1]).sqrt();
            if gn <= 1e-14 {
                if lam0[i] <= LAMBDA_TOL {
                    if lam0[i].abs() <= LAMBDA_TOL {
                        return Err(degenerate("flat contains a simplex face"));
                    }
                    return Ok(0);
                }
                continue;
            }
            cons.push((lam0[i], gi));
        }
        let val = |c: &(f64, [f64; 2]), s: [f64; 2]| c.0 + c.1[0] * s[0] + c.1[1] * s[1];
        let feasible = |s: [f64; 2], tol: f64| cons.iter().all(|c| val(c, s) >= -tol);
        // distance from the disc centre to the closed polygon
        let dist = if feasible(sc, 0.0) {
            0.0
        } else {
            let mut best = f64::INFINITY;
            for (i, ci) in cons.iter().enumerate() {
                let gn2 = ci.1[0] * ci.1[0] + ci.1[1] * ci.1[1];
                let t = val(ci, sc) / gn2;
                let foot = [sc[0] - t * ci.1[0], sc[1] - t * ci.1[1]];
                if cons.iter().enumerate().all(|(j, cj)| j == i || val(cj, foot) >= -1e-12) {
                    best = best.min(((foot[0] - sc[0]).powi(2) + (foot[1] - sc[1]).powi(2)).sqrt());
                }
                for cj in cons.iter().skip(i + 1) {
                    let det = ci.1[0] * cj.1[1] - ci.1[1] * cj.1[0];
                    if det.abs() <= 1e-14 {
                        continue;
                    }
                    let v = [
                        (-ci.0 * cj.1[1] + cj.0 * ci.1[1]) / det,
                        (-cj.0 * ci.1[0] + ci.0 * cj.1[0]) / det,
                    ];
                    if feasible(v, 1e-12) {
                        best = best.min(((v[0] - sc[0]).powi(2) + (v[1] - sc[1]).powi(2)).sqrt());
                    }
                }
            }
            best
        };
        if (dist - rho).abs() <= 1e-12 * (1.0 + rho) {
            return Err(degenerate("sphere touches a slice polygon"));
        }
        if dist >= rho {
            return Ok(0);
        }
        // arcs of the circle inside the open polygon
        let mut breaks: Vec<f64> = Vec::new();
        for c in &cons {
            let gn = (c.1[0] * c.1[0] + c.1[1] * c.1[1]).sqrt();
            let kappa = -val(c, sc) / (rho * gn);
            if (kappa.abs() - 1.0).abs() <= 1e-12 {
                return Err(degenerate("circle tangent to a polygon edge"));
            }
            if kappa.abs() > 1.0 {
                continue;
            }
            let phi = c.1[1].atan2(c.1[0]);
            let a = kappa.acos();
            for t in [phi + a, phi - a] {
                breaks.push(t.rem_euclid(2.0 * PI));
            }
        }
        if breaks.is_empty() {
            return Ok(1);
        }
        breaks.sort_by(f64::total_cmp);
        let k = breaks.len();
        for i in 0..k {
            let next = if i + 1 < k { breaks[i + 1] } else { breaks[0] + 2.0 * PI };
            if next - breaks[i] <= 1e-12 {
                return Err(degenerate("circle through a polygon vertex"));
            }
        }
        let inside: Vec<bool> = (0..k)
            .map(|i| {
                let next = if i + 1 < k { breaks[i + 1] } else { breaks[0] + 2.0 * PI };
                let t = 0.5 * (breaks[i] + next);
                let s = [sc[0] + rho * t.cos(), sc[1] + rho * t.sin()];
                cons.iter().all(|c| val(c, s) > 0.0)
            })
            .collect();
        if inside.iter().all(|&v| v) {
            return Ok(1);
        }
        let arcs = (0..k).filter(|&i| inside[i] && !inside[(i + k - 1) % k]).count() as i64;
        Ok(1 - arcs)
    }

    fn line_euler(&self, s: &ImplicitSet, x: &DVector<f64>) -> Result<i64> {
        let q = self.comp.frame().column(0).into_owned();
        let rel = &self.center - x;
        let mid = q.dot(&rel);
        let h2 = self.r * self.r - (rel.norm_squared() - mid * mid);
        if h2 <= 0.0 {
            return Ok(0);
        }
        let h = h2.sqrt();
        let (s0, s1) = (mid - h, mid + h);
        let mut knots = vec![s0, s1];
        for p in &self.polys {
            match p.restrict_line(x.as_slice(), q.as_slice()).roots_in(s0, s1) {
                RootSet::Degenerate => return Err(degenerate("multiple or boundary root on a slicing line")),
                RootSet::Roots(rs) => knots.extend(rs),
            }
        }
        knots.sort_by(f64::total_cmp);
        // merge roots that coincide with the chord ends or with each other
        let mut merged: Vec<f64> = Vec::with_capacity(knots.len());
        for &t in &knots {
            match merged.last_mut() {
                Some(prev) if t - *prev <= 1e-12 * (1.0 + t.abs()) => {
                    if t == s1 {
                        *prev = s1;
                    }
                }
                _ => merged.push(t),
            }
        }
        let knots = merged;
        let at = |t: f64| -> Vec<f64> { (x + &q * t).iter().copied().collect() };
        let member = |t: f64| s.contains(&at(t), TOL.membership);
        let mut chi = 0i64;
        for (i, &t) in knots.iter().enumerate() {
            if member(t) {
                chi += 1;
            }
            if i + 1 < knots.len() && member(0.5 * (t + knots[i + 1])) {
                chi -= 1;
            }
        }
        Ok(chi)
    }

    fn voxel_euler_checked(&self, s: &ImplicitSet, x: &DVector<f64>) -> Result<i64> {
        let m = self.comp.dim();
        let base = if m == 2 { VOXEL_2D } else { VOXEL_3D };
        let a = self.voxel_euler(s, x, base)?;
        let b = self.voxel_euler(s, x, (base * 3 / 2) | 1)?;
        if a != b {
            return Err(degenerate("cubical Euler characteristic unstable under refinement"));
        }
        Ok(a)
    }

    /// χ of the union of closed grid cells meeting the slice, in flat
    /// coordinates with the disc centre at a cell centre.
    pub(crate) fn voxel_euler(&self, s: &ImplicitSet, x: &DVector<f64>, grid: usize) -> Result<i64> {
        let m = self.comp.dim();
        if m > 3 {
            return Err(Error::Unsupported("implicit slices of dimension above three".into()));
        }
        let qf = self.comp.frame();
        let rel = &self.center - x;
        let sc = qf.tr_mul(&rel);
        let rho2 = self.r * self.r - (rel.norm_squared() - sc.norm_squared());
        if rho2 <= 0.0 {
            return Ok(0);
        }
        let rho = rho2.sqrt();
        let g = grid | 1;
        let h = 2.0 * rho / g as f64;
        let origin: Vec<f64> = (0..m).map(|j| sc[j] - rho).collect();
        let to_ambient = |u: &[f64]| -> Vec<f64> {
            let mut p = x.clone();
            for j in 0..m {
                p += qf.column(j) * u[j];
            }
            p.iter().copied().collect()
        };
        // polynomial values on grid vertices
        let nv = g + 1;
        let nverts = nv.pow(m as u32);
        let idx_of = |code: usize| -> Vec<usize> {
            let mut c = code;
            (0..m)
                .map(|_| {
                    let v = c % nv;
                    c /= nv;
                    v
                })
                .collect()
        };
        let vals: Vec<Vec<(f64, f64)>> = s
            .clauses
            .iter()
            .flat_map(|cl| cl.0.iter())
            .map(|cond| {
                (0..nverts)
                    .map(|code| {
                        let ix = idx_of(code);
                        let u: Vec<f64> = (0..m).map(|j| origin[j] + h * ix[j] as f64).collect();
                        cond.poly.eval_with_scale(&to_ambient(&u))
                    })
                    .collect()
            })
            .collect();
        let derivs: Vec<Derivs> = s.clauses.iter().flat_map(|cl| cl.0.iter()).map(|c| Derivs::new(&c.poly)).collect();
        let ncells = g.pow(m as u32);
        let mut marked: HashSet<Vec<i64>> = HashSet::new();
        for code in 0..ncells {
            let mut c = code;
            let ix: Vec<usize> = (0..m)
                .map(|_| {
                    let v = c % g;
                    c /= g;
                    v
                })
                .collect();
            let lo: Vec<f64> = (0..m).map(|j| origin[j] + h * ix[j] as f64).collect();
            let center: Vec<f64> = lo.iter().map(|v| v + 0.5 * h).collect();
            // closest point of the cell to the disc centre
            let close2: f64 = (0..m)
                .map(|j| {
                    let t = sc[j].clamp(lo[j], lo[j] + h);
                    (t - sc[j]).powi(2)
                })
                .sum();
            let center2: f64 = (0..m).map(|j| (center[j] - sc[j]).powi(2)).sum();
            let corners: Vec<usize> = (0..(1usize << m))
                .map(|bits| {
                    let mut code = 0;
                    let mut mul = 1;
                    for j in 0..m {
                        code += (ix[j] + ((bits >> j) & 1)) * mul;
                        mul *= nv;
                    }
                    code
                })
                .collect();
            let pc = to_ambient(&center);
            let mut k0 = 0;
            let mut hit = false;
            for cl in &s.clauses {
                let ok = clause_hits_cell(cl, k0, &vals, &derivs, &corners, &pc, qf, h, close2 <= rho2, center2 <= rho2);
                k0 += cl.0.len();
                if ok {
                    hit = true;
                    break;
                }
            }
            if hit {
                marked.insert(ix.iter().map(|&v| v as i64).collect());
            }
        }
        // faces of the union, in doubled coordinates
        let mut faces: HashSet<Vec<i64>> = HashSet::new();
        let three = 3usize.pow(m as u32);
        for cell in &marked {
            for code in 0..three {
                let mut c = code;
                let f: Vec<i64> = cell
                    .iter()
                    .map(|&v| {
                        let d = (c % 3) as i64;
                        c /= 3;
                        2 * v + d
                    })
                    .collect();
                faces.insert(f);
            }
        }
        Ok(faces
            .iter()
            .map(|f| if f.iter().filter(|&&v| v % 2 == 1).count() % 2 == 0 { 1 } else { -1 })
            .sum())
    }
}

/// Subdivision levels for cells with no sign change at their corners.
const REFINE_DEPTH: usize = 4;

struct Derivs {
    grad: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl Derivs {
    fn new(p: &Polynomial) -> Self {
        let grad = p.gradient();
        let hess = grad.iter().map(|g| g.gradient()).collect();
        Derivs { grad, hess }
    }

    /// Searches the flat cube of side `h` centred at `pc` for a sign change
    /// or a near-zero value of `poly`. Subcubes are discarded when the
    /// second-order Taylor bound keeps them away from zero.
    fn zero_in_cube(&self, poly: &Polynomial, pc: &[f64], qf: &DMatrix<f64>, h: f64, depth: usize) -> bool {
        let m = qf.ncols();
        let shift = |base: &[f64], offs: &[f64]| -> Vec<f64> {
            let mut p = base.to_vec();
            for (j, o) in offs.iter().enumerate() {
                for (i, pi) in p.iter_mut().enumerate() {
                    *pi += qf[(i, j)] * o;
                }
            }
            p
        };
        let (cv, cs) = poly.eval_with_scale(pc);
        let tol = TOL.membership * (1.0 + cs);
        if cv.abs() <= tol {
            return true;
        }
        let half = 0.5 * h;
        for bits in 0..(1usize << m) {
            let o: Vec<f64> = (0..m).map(|j| if (bits >> j) & 1 == 1 { half } else { -half }).collect();
            let (v, vs) = poly.eval_with_scale(&shift(pc, &o));
            if v * cv <= 0.0 || v.abs() <= TOL.membership * (1.0 + vs) {
                return true;
            }
        }
        let n = pc.len();
        let g = DVector::from_iterator(n, self.grad.iter().map(|p| p.eval(pc)));
        let hm = DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval(pc));
        let hflat = qf.transpose() * hm * qf;
        let rad = half * (m as f64).sqrt();
        if cv.abs() > qf.tr_mul(&g).norm() * rad + 0.5 * hflat.norm() * rad * rad + tol {
            return false;
        }
        if depth == 0 {
            return false;
        }
        let q = 0.5 * half;
        (0..(1usize << m)).any(|child| {
            let o: Vec<f64> = (0..m).map(|j| if (child >> j) & 1 == 1 { q } else { -q }).collect();
            self.zero_in_cube(poly, &shift(pc, &o), qf, half, depth - 1)
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn clause_hits_cell(
    cl: &Clause,
    k0: usize,
    vals: &[Vec<(f64, f64)>],
    derivs: &[Derivs],
    corners: &[usize],
    pc: &[f64],
    qf: &DMatrix<f64>,
    h: f64,
    meets_disc: bool,
    center_in_disc: bool,
) -> bool {
    let has_eq = cl.0.iter().any(|c| c.sign == Sign::Eq);
    if !has_eq {
        return center_in_disc && cl.holds(pc, TOL.membership);
    }
    if !meets_disc {
        return false;
    }
    for (j, cond) in cl.0.iter().enumerate() {
        let v = &vals[k0 + j];
        let (pcv, pcs) = cond.poly.eval_with_scale(pc);
        match cond.sign {
            Sign::Eq => {
                let pos = corners.iter().any(|&c| v[c].0 > TOL.membership * (1.0 + v[c].1));
                let neg = corners.iter().any(|&c| v[c].0 < -TOL.membership * (1.0 + v[c].1));
                let crossing = (pos && neg) || !(pos || neg);
                if !crossing && pcv.abs() > TOL.membership * (1.0 + pcs) && !derivs[k0 + j].zero_in_cube(&cond.poly, pc, qf, h, REFINE_DEPTH) {
                    return false;
                }
            }
            Sign::Ge | Sign::Gt => {
                let any = corners.iter().any(|&c| v[c].0 >= -TOL.membership * (1.0 + v[c].1))
                    || pcv >= -TOL.membership * (1.0 + pcs);
                if !any {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit::Condition;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn disc() -> DefinableSet {
        let p = Polynomial::from_pairs(2, &[(1.0, &[0, 0]), (-1.0, &[2, 0]), (-1.0, &[0, 2])]).unwrap();
        ImplicitSet::from_conditions(2, vec![Condition::new(p, Sign::Ge)], 2).unwrap().into()
    }

    fn circle() -> DefinableSet {
        let p = Polynomial::from_pairs(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])]).unwrap();
        ImplicitSet::from_conditions(2, vec![Condition::new(p, Sign::Eq)], 1).unwrap().into()
    }

    fn square() -> DefinableSet {
        PlComplex::new_closed(
            2,
            vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0]],
            &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]],
        )
        .unwrap()
        .into()
    }

    fn plan(p: Subspace, x: &[f64], r: f64) -> SlicePlan {
        let n = x.len();
        SlicePlan {
            p,
            x: v(x),
            r,
            center: DVector::zeros(n),
        }
    }

    #[test]
    fn examples() {
        let xaxis = Subspace::coordinate(2, &[0]).unwrap();
        assert_eq!(slice_euler(&disc(), &plan(xaxis.clone(), &[0.3, 0.0], 2.0)).unwrap(), 1);
        assert_eq!(slice_euler(&circle(), &plan(xaxis.clone(), &[0.3, 0.0], 2.0)).unwrap(), 2);
        assert_eq!(slice_euler(&square(), &plan(xaxis.clone(), &[0.0, 0.0], 3.0)).unwrap(), 2);
        assert!(slice_euler(&square(), &plan(xaxis, &[0.0, 1.0], 3.0)).is_err());
    }

    #[test]
    fn pl_global_euler() {
        let z = Subspace::zero(2);
        // whole square boundary: a circle
        assert_eq!(slice_euler(&square(), &plan(z.clone(), &[0.0, 0.0], 3.0)).unwrap(), 0);
        // ball around a corner cuts an arc
        let pl = SlicePlan {
            p: z.clone(),
            x: v(&[0.0, 0.0]),
            r: 0.5,
            center: v(&[1.0, 1.0]),
        };
        assert_eq!(slice_euler(&square(), &pl).unwrap(), 1);
        // ball inside the hole
        assert_eq!(slice_euler(&square(), &plan(z.clone(), &[0.0, 0.0], 0.5)).unwrap(), 0);
        // a filled triangle cut by various balls
        let tri: DefinableSet = PlComplex::new_closed(2, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], &[vec![0, 1, 2]])
            .unwrap()
            .into();
        for (c, r) in [([0.0, 0.0], 0.3), ([0.3, 0.3], 0.05), ([0.3, 0.3], 5.0), ([1.2, 1.3], 1.1)] {
            let pl = SlicePlan {
                p: z.clone(),
                x: v(&[0.0, 0.0]),
                r,
                center: v(&c),
            };
            assert_eq!(slice_euler(&tri, &pl).unwrap(), 1, "{c:?} {r}");
        }
        let far = SlicePlan {
            p: z,
            x: v(&[0.0, 0.0]),
            r: 0.1,
            center: v(&[2.0, 2.0]),
        };
        assert_eq!(slice_euler(&tri, &far).unwrap(), 0);
    }

    #[test]
    fn annulus_slice_of_triangles() {
        // two triangles forming a square with the ball centred at a corner
        // region of radius > side: the slice is contractible
        let sq: DefinableSet = PlComplex::new_closed(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            &[vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap()
        .into();
        let z = Subspace::zero(2);
        for r in [0.3, 0.9, 1.2, 2.0] {
            let pl = SlicePlan {
                p: z.clone(),
                x: v(&[0.0, 0.0]),
                r,
                center: v(&[0.013, 0.007]),
            };
            assert_eq!(slice_euler(&sq, &pl).unwrap(), 1, "r = {r}");
        }
    }

    #[test]
    fn implicit_voxel_global() {
        let z = Subspace::zero(2);
        assert_eq!(slice_euler(&disc(), &plan(z.clone(), &[0.0, 0.0], 0.5)).unwrap(), 1);
        assert_eq!(slice_euler(&circle(), &plan(z.clone(), &[0.0, 0.0], 2.0)).unwrap(), 0);
        let arc = SlicePlan {
            p: z,
            x: v(&[0.0, 0.0]),
            r: 0.3,
            center: v(&[1.0, 0.0]),
        };
        assert_eq!(slice_euler(&circle(), &arc).unwrap(), 1);
    }

    #[test]
    fn cusp_ball_is_an_arc() {
        // y² = x³: the branches are tangent at the origin and f is tiny on the negative x-axis
        let p = Polynomial::from_pairs(2, &[(1.0, &[0, 2]), (-1.0, &[3, 0])]).unwrap();
        let cusp: DefinableSet = ImplicitSet::from_conditions(2, vec![Condition::new(p, Sign::Eq)], 1).unwrap().into();
        for r in [0.1, 0.025, 0.0125] {
            assert_eq!(slice_euler(&cusp, &plan(Subspace::zero(2), &[0.0, 0.0], r)).unwrap(), 1, "r = {r}");
        }
    }

    #[test]
    fn plane_point_check() {
        let xaxis = Subspace::coordinate(2, &[0]).unwrap();
        assert!(matches!(
            slice_euler(&disc(), &plan(xaxis, &[0.3, 0.2], 2.0)),
            Err(Error::Domain(_))
        ));
    }
}
