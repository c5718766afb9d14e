//! Experiments on corpus entries: local curvature, sweeps along strata,
//! regularity checks and retraction audits.

use lkcurv::crofton::{crofton_consistency, density, lipschitz_killing, local_curvature, ConsistencyReport, CurvatureProfile};
use lkcurv::measure::{psi, tube_measure, Estimate, MeasureParams};
use lkcurv::set::DefinableSet;
use lkcurv::regularity::{check_pair, RegularityReport, Verdict};
use lkcurv::retract::{build_field, flow_retract, verify_bounds, BoundsReport, FlowTrajectory};
use lkcurv::{Error, Result};
use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::LabConfig;
use crate::corpus::{Annotation, CorpusEntry, ExpectedVerdicts};

pub fn run_curvature(entry: &CorpusEntry, point: &[f64], k: usize, cfg: &LabConfig) -> Result<CurvatureProfile> {
    local_curvature(&entry.set, &DVector::from_column_slice(point), k, &cfg.schedule()?, cfg.budget(), &cfg.rng())
}

pub fn run_density(entry: &CorpusEntry, point: &[f64], cfg: &LabConfig) -> Result<CurvatureProfile> {
    density(&entry.set, &DVector::from_column_slice(point), entry.declared_dim(), &cfg.schedule()?, &cfg.measure())
}

pub fn run_consistency(entry: &CorpusEntry, point: &[f64], cfg: &LabConfig) -> Result<ConsistencyReport> {
    crofton_consistency(
        &entry.set,
        &DVector::from_column_slice(point),
        entry.declared_dim(),
        &cfg.schedule()?,
        cfg.budget(),
        &cfg.measure(),
    )
}

pub fn run_global(entry: &CorpusEntry, center: &[f64], radius: f64, k: usize, cfg: &LabConfig) -> Result<Estimate> {
    lipschitz_killing(&entry.set, k, radius, &DVector::from_column_slice(center), cfg.budget(), &cfg.rng())
}

/// Growth quotients of a family's fibers over a (t, r) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsGrid {
    pub entry: String,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    /// The tube radius is eps_ratio·r.
    pub eps_ratio: f64,
    /// "fiber", or "boundary" for full-dimensional fibers.
    pub tube_of: String,
    /// ψ(A_t, r)/r^l, indexed [t][r].
    pub psi: Vec<Vec<f64>>,
    /// H^n(N(T_t, ε) ∩ B(0, r))/(r^{n−1}ε), indexed [t][r].
    pub tube: Vec<Vec<f64>>,
    pub psi_sup: f64,
    pub tube_sup: f64,
}

/// ψ and tube quotients of the fibers A_t at every grid node. Full-dimensional
/// fibers have unbounded tube quotients, so their tube is taken around the
/// boundary instead.
pub fn run_bounds_grid(entry: &CorpusEntry, t: &[f64], r: &[f64], eps_ratio: f64, cfg: &LabConfig) -> Result<BoundsGrid> {
    let fam = entry
        .family
        .as_ref()
        .ok_or_else(|| Error::Domain(format!("{} is not a family", entry.id)))?;
    if fam.param_dim != 1 {
        return Err(Error::Unsupported("grids over more than one parameter".into()));
    }
    let n = fam.fiber_ambient_dim();
    let l = fam.fiber_dim();
    let full = l == n;
    let origin = vec![0.0; n];
    let est = MeasureParams::new(cfg.samples, cfg.rng());
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = t
        .par_iter()
        .map(|&ti| {
            let fiber = fam.fiber(&[ti])?;
            let tube_set = match (&fiber, full) {
                (DefinableSet::Implicit(s), true) => DefinableSet::Implicit(s.boundary_cover()?),
                (_, true) => return Err(Error::Unsupported("tubes around PL boundaries".into())),
                _ => fiber.clone(),
            };
            let mut p = Vec::with_capacity(r.len());
            let mut q = Vec::with_capacity(r.len());
            for &ri in r {
                p.push(psi(&fiber, ri, &origin, &est)?.value / ri.powi(l as i32));
                let eps = eps_ratio * ri;
                q.push(tube_measure(&tube_set, eps, ri, &est)?.value / (ri.powi(n as i32 - 1) * eps));
            }
            Ok((p, q))
        })
        .collect();
    let (mut psi_rows, mut tube_rows) = (Vec::new(), Vec::new());
    for row in rows {
        let (p, q) = row?;
        psi_rows.push(p);
        tube_rows.push(q);
    }
    let sup = |m: &Vec<Vec<f64>>| m.iter().flatten().cloned().fold(0.0, f64::max);
    Ok(BoundsGrid {
        entry: entry.id.clone(),
        t: t.to_vec(),
        r: r.to_vec(),
        eps_ratio,
        tube_of: if full { "boundary" } else { "fiber" }.into(),
        psi_sup: sup(&psi_rows),
        tube_sup: sup(&tube_rows),
        psi: psi_rows,
        tube: tube_rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub spacing: f64,
    pub max_quotient: f64,
    pub median_quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entry: String,
    pub stratum: String,
    pub k: usize,
    pub t: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// NaN where the limit was inconclusive.
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub max_jump: f64,
    /// Standard error of the largest jump.
    pub jump_stderr: f64,
    pub continuity_tol: f64,
    pub continuous: bool,
    /// Quotients |ΔΛ|/|Δt| at the sweep spacing and at twice it.
    pub lipschitz: Vec<LipschitzRow>,
    pub lipschitz_constant: f64,
    pub lipschitz_stable: bool,
    /// Slope of log(max jump) against log(spacing), when defined.
    pub holder_exponent: Option<f64>,
    pub inconclusive: usize,
    pub degraded: bool,
}

fn quotients(t: &[f64], v: &[f64], stride: usize) -> Vec<f64> {
    let idx: Vec<usize> = (0..t.len()).step_by(stride).collect();
    idx.windows(2)
        .filter(|w| v[w[0]].is_finite() && v[w[1]].is_finite())
        .map(|w| (v[w[1]] - v[w[0]]).abs() / (t[w[1]] - t[w[0]]))
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Λ_k^loc at `n_points` equally spaced parameter values along stratum `y`.
/// Every point reuses the same random stream, so differences between
/// neighbours carry little Monte Carlo noise.
pub fn run_sweep(entry: &CorpusEntry, y: &str, k: usize, n_points: usize, cfg: &LabConfig) -> Result<SweepResult> {
    if n_points < 5 {
        return Err(Error::Domain("a sweep needs at least 5 points".into()));
    }
    let st = entry.stratified.stratum(y)?;
    if st.dim == 0 {
        return Err(Error::Domain(format!("stratum {y} is a point")));
    }
    let range = entry
        .sweep
        .as_ref()
        .map(|s| s.range)
        .ok_or_else(|| Error::Domain(format!("{} has no sweep range", entry.id)))?;
    let n = entry.set.ambient_dim();
    let t: Vec<f64> = (0..n_points)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n_points - 1) as f64)
        .collect();
    let mut points = Vec::with_capacity(n_points);
    for &ti in &t {
        let mut q = DVector::zeros(n);
        q[n - 1] = ti;
        let p = st.nearest(&q)?;
        if !st.contains(&p) {
            return Err(Error::Domain(format!("no point of {y} over t = {ti}")));
        }
        points.push(p);
    }
    let schedule = cfg.schedule()?;
    let rng = cfg.rng();
    let results: Vec<Result<Option<(f64, f64)>>> = points
        .par_iter()
        .map(|p| match local_curvature(&entry.set, p, k, &schedule, cfg.budget(), &rng) {
            Ok(prof) => Ok(Some((prof.limit, prof.limit_stderr))),
            Err(Error::InconclusiveLimit { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut values = Vec::with_capacity(n_points);
    let mut stderrs = Vec::with_capacity(n_points);
    let mut inconclusive = 0;
    for r in results {
        match r? {
            Some((v, s)) => {
                values.push(v);
                stderrs.push(s);
            }
            None => {
                inconclusive += 1;
                values.push(f64::NAN);
                stderrs.push(f64::NAN);
            }
        }
    }
    let mut max_jump: f64 = 0.0;
    let mut jump_stderr = 0.0;
    let mut continuous = true;
    for i in 0..n_points - 1 {
        if !(values[i].is_finite() && values[i + 1].is_finite()) {
            continue;
        }
        let j = (values[i + 1] - values[i]).abs();
        let s = (stderrs[i].powi(2) + stderrs[i + 1].powi(2)).sqrt();
        if j > cfg.continuity_tol + 2.0 * s {
            continuous = false;
        }
        if j > max_jump {
            max_jump = j;
            jump_stderr = s;
        }
    }
    let spacing = (range[1] - range[0]) / (n_points - 1) as f64;
    let mut lipschitz = Vec::new();
    let mut jumps = Vec::new();
    for stride in [1usize, 2, 4] {
        if (n_points - 1) / stride < 2 {
            break;
        }
        let q = quotients(&t, &values, stride);
        let h = spacing * stride as f64;
        let mx = q.iter().cloned().fold(0.0, f64::max);
        jumps.push((h, mx * h));
        lipschitz.push(LipschitzRow {
            spacing: h,
            max_quotient: mx,
            median_quotient: median(q),
        });
    }
    let lipschitz_constant = lipschitz.first().map(|r| r.max_quotient).unwrap_or(f64::NAN);
    let lipschitz_stable = lipschitz.len() >= 2 && {
        let (a, b) = (lipschitz[0].max_quotient, lipschitz[1].max_quotient);
        a <= 2.0 * b && b <= 2.0 * a
    };
    let holder_exponent = {
        let pts: Vec<(f64, f64)> = jumps.iter().filter(|(_, j)| *j > 0.0).map(|(h, j)| (h.ln(), j.ln())).collect();
        (pts.len() >= 2).then(|| {
            let m = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        })
    };
    Ok(SweepResult {
        entry: entry.id.clone(),
        stratum: y.to_string(),
        k,
        t,
        points: points.iter().map(|p| p.iter().copied().collect()).collect(),
        values,
        stderrs,
        max_jump,
        jump_stderr,
        continuity_tol: cfg.continuity_tol,
        continuous,
        lipschitz,
        lipschitz_constant,
        lipschitz_stable,
        holder_exponent,
        inconclusive,
        degraded: inconclusive * 5 >= n_points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityRun {
    pub entry: String,
    pub report: RegularityReport,
    pub expected: Option<ExpectedVerdicts>,
    /// False when an annotated verdict differs from the computed one.
    pub matches: bool,
}

fn verdict_matches(want: Option<Verdict>, got: Verdict) -> bool {
    want.map(|w| w == got).unwrap_or(true)
}

pub fn run_regularity(entry: &CorpusEntry, x: &str, y: &str, z: &[f64], cfg: &LabConfig) -> Result<RegularityRun> {
    let ss = &entry.stratified;
    let zv = DVector::from_column_slice(z);
    let report = check_pair(ss.stratum(x)?, ss.stratum(y)?, &zv, &cfg.scales, &cfg.regularity, &cfg.rng())?;
    let expected = entry.annotations.iter().find_map(|a| match a {
        Annotation::Regularity { x: ax, y: ay, at, expect, .. } if ax == x && ay == y && at.as_slice() == z => Some(expect.clone()),
        _ => None,
    });
    let matches = expected.as_ref().is_none_or(|e| {
        verdict_matches(e.b, report.whitney_b) && verdict_matches(e.r, report.kuo_r) && verdict_matches(e.w, report.verdier_w)
    });
    Ok(RegularityRun {
        entry: entry.id.clone(),
        report,
        expected,
        matches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractReport {
    pub entry: String,
    pub r: f64,
    pub r_prime: f64,
    pub r0: f64,
    /// eps after any halving.
    pub eps: f64,
    pub field_max_speed: f64,
    pub bounds: BoundsReport,
    pub trajectories: Vec<FlowTrajectory>,
}

/// Flows `n_starts` points of B(0, r′), spread over the non-origin strata.
pub fn run_retract(entry: &CorpusEntry, r: f64, r_prime: f64, r0: Option<f64>, n_starts: usize, cfg: &LabConfig) -> Result<RetractReport> {
    let r0 = r0.or(entry.retract.as_ref().map(|s| s.r0)).unwrap_or(r_prime);
    let ss = &entry.stratified;
    let field = build_field(ss, r0, &cfg.field, &cfg.rng())?;
    let origin = DVector::zeros(ss.ambient_dim());
    let movable: Vec<usize> = (0..ss.strata.len())
        .filter(|&i| ss.strata[i].dim > 0 && !ss.strata[i].sample_near(&origin, 0.0, r_prime, 1, 200, &mut cfg.rng().child(i as u64).rng()).is_empty())
        .collect();
    if movable.is_empty() {
        return Err(Error::Precondition(format!("{} has no stratum meeting B(0, r')", entry.id)));
    }
    let mut g = cfg.rng().child(0x7e7a).rng();
    let mut starts = Vec::with_capacity(n_starts);
    let mut tries = 0;
    while starts.len() < n_starts && tries < 200 * n_starts {
        tries += 1;
        let s = movable[starts.len() % movable.len()];
        let radius = r_prime * g.random::<f64>().sqrt();
        let hit = ss.strata[s].sample_near(&origin, 0.0, radius.max(1e-3 * r_prime), 1, 50, &mut g);
        if let Some(p) = hit.into_iter().next() {
            if p.norm() > 1e-9 * r_prime && p.norm() <= r_prime {
                starts.push(p.iter().copied().collect::<Vec<f64>>());
            }
        }
    }
    let trajectories = starts
        .par_iter()
        .map(|p| flow_retract(&field, r, r_prime, p, cfg.retract_steps))
        .collect::<Result<Vec<_>>>()?;
    let bounds = verify_bounds(&trajectories, r, r_prime);
    Ok(RetractReport {
        entry: entry.id.clone(),
        r,
        r_prime,
        r0,
        eps: field.eps,
        field_max_speed: field.max_speed,
        bounds,
        trajectories,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationCheck {
    pub entry: String,
    pub what: String,
    pub expected: f64,
    pub got: f64,
    pub stderr: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Recomputes every numeric annotation of an entry.
pub fn audit_annotations(entry: &CorpusEntry, cfg: &LabConfig) -> Result<Vec<AnnotationCheck>> {
    let mut out = Vec::new();
    for a in &entry.annotations {
        let (what, expected, est, tol) = match a {
            Annotation::Density { point, value, tol, .. } => {
                let p = run_density(entry, point, cfg)?;
                (format!("density at {point:?}"), *value, (p.limit, p.limit_stderr), *tol)
            }
            Annotation::Curvature { point, k, value, tol, .. } => {
                let p = run_curvature(entry, point, *k, cfg)?;
                (format!("curvature k={k} at {point:?}"), *value, (p.limit, p.limit_stderr), *tol)
            }
            Annotation::GlobalCurvature { center, radius, k, value, rel_tol, .. } => {
                let e = run_global(entry, center, *radius, *k, cfg)?;
                (format!("global curvature k={k} on B({center:?}, {radius})"), *value, (e.value, e.stderr), rel_tol * value.abs())
            }
            Annotation::Regularity { .. } => continue,
        };
        out.push(AnnotationCheck {
            entry: entry.id.clone(),
            what,
            expected,
            got: est.0,
            stderr: est.1,
            tol,
            passed: (est.0 - expected).abs() <= tol,
        });
    }
    Ok(out)
}
