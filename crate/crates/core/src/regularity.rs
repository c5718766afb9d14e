//! Sampled verdicts for Whitney (b), Kuo (r) and Verdier (w) regularity of a
//! stratum pair (X, Y) at a point z ∈ Y ∩ cl(X).

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample;
use crate::strata::Stratum;
use crate::subspace::{gap, Subspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProbe {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub secant: Vec<f64>,
    pub gap_xy: f64,
    pub gap_secant: f64,
    pub dist_xz: f64,
    pub dist_xy: f64,
}

impl PairProbe {
    /// gapXY·‖x − z‖/‖x − y‖, computed as the Verdier quotient times ‖x − z‖.
    pub fn kuo_ratio(&self) -> f64 {
        self.verdier_quotient() * self.dist_xz
    }

    /// gapXY/‖x − y‖
    pub fn verdier_quotient(&self) -> f64 {
        self.gap_xy / self.dist_xy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityConfig {
    /// Threshold on bucket maxima for (b) and (r).
    pub tol: f64,
    /// Values below this count as zero when judging trends.
    pub noise_floor: f64,
    /// Growth factor per halving that signals an unbounded quotient.
    pub growth: f64,
    /// Probes per scale.
    pub probes: usize,
    /// Hill-climbing iterations per witness search start.
    pub climb_steps: usize,
}

impl Default for RegularityConfig {
    fn default() -> Self {
        Self {
            tol: 0.05,
            noise_floor: 1e-7,
            growth: 2.0,
            probes: 48,
            climb_steps: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub scale: f64,
    pub probes: usize,
    pub max_gap_secant: f64,
    pub max_kuo: f64,
    pub max_verdier: f64,
    pub max_gap_xy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub x: String,
    pub y: String,
    pub z: Vec<f64>,
    pub buckets: Vec<BucketStats>,
    pub whitney_b: Verdict,
    pub kuo_r: Verdict,
    pub verdier_w: Verdict,
    /// 1.5 × the observed supremum of the Verdier quotient, when bounded.
    pub verdier_constant: Option<f64>,
    /// Worst probe per condition and bucket, kept for failing conditions.
    pub witnesses: Vec<PairProbe>,
    /// Largest tangent gap per bucket doubles as the (a) diagnostic.
    pub note: String,
}

fn measure_probe(x_s: &Stratum, y_s: &Stratum, z: &DVector<f64>, x: &DVector<f64>, ty_cache: Option<&Subspace>) -> Option<PairProbe> {
    let y = if y_s.dim == 0 { z.clone() } else { y_s.nearest(x).ok()? };
    let d = x - &y;
    let dist_xy = d.norm();
    // below this the nearest-point error dominates the secant
    if dist_xy < 1e-12 || dist_xy < 1e-6 * (x - z).norm() {
        return None;
    }
    let secant = &d / dist_xy;
    let tx = x_s.tangent_space(x).ok()?;
    let ty = match ty_cache {
        Some(t) => t.clone(),
        None if y_s.dim == 0 => Subspace::zero(x.len()),
        None => y_s.tangent_space(&y).ok()?,
    };
    let gap_xy = gap(&ty, &tx).ok()?;
    let proj = tx.project(&secant).ok()?;
    let gap_secant = (&secant - proj).norm().clamp(0.0, 1.0);
    Some(PairProbe {
        x: x.iter().copied().collect(),
        y: y.iter().copied().collect(),
        secant: secant.iter().copied().collect(),
        gap_xy,
        gap_secant,
        dist_xz: (x - z).norm(),
        dist_xy,
    })
}

/// Probes with ‖x − z‖ ∈ [scale/2, scale], sampled on X near z.
pub fn probe_pair(
    x_s: &Stratum,
    y_s: &Stratum,
    z: &DVector<f64>,
    scale: f64,
    n: usize,
    rng: &RngStream,
) -> Result<Vec<PairProbe>> {
    if scale <= 0.0 {
        return Err(Error::Domain("probe scale must be positive".into()));
    }
    let mut g = rng.rng();
    let pts = x_s.sample_near(z, 0.5 * scale, scale, n, 60 * n.max(1), &mut g);
    let probes: Vec<PairProbe> = pts.iter().filter_map(|x| measure_probe(x_s, y_s, z, x, None)).collect();
    if probes.len() * 2 < n {
        return Err(Error::Sampling(format!(
            "found {} of {n} probes on {} near z at scale {scale}",
            probes.len(),
            x_s.label
        )));
    }
    Ok(probes)
}

#[derive(Clone, Copy)]
enum Objective {
    Secant,
    Kuo,
    Verdier,
}

impl Objective {
    fn eval(self, p: &PairProbe) -> f64 {
        match self {
            Objective::Secant => p.gap_secant,
            Objective::Kuo => p.kuo_ratio(),
            Objective::Verdier => p.verdier_quotient(),
        }
    }
}

/// Extra probes concentrated near Y: balls of shrinking radius around
/// points of Y in the shell, projected onto X.
fn tube_probes<R: Rng + ?Sized>(
    x_s: &Stratum,
    y_s: &Stratum,
    z: &DVector<f64>,
    scale: f64,
    n: usize,
    rng: &mut R,
) -> Vec<PairProbe> {
    let dim = z.len();
    let anchors: Vec<DVector<f64>> = if y_s.dim == 0 {
        vec![z.clone()]
    } else {
        y_s.sample_near(z, 0.5 * scale, scale, 3, 60, rng)
    };
    let mut out = Vec::new();
    for a in &anchors {
        for j in 1..=5 {
            let rad = scale * 0.25f64.powi(j);
            for _ in 0..n {
                let p = a + sample::ball(dim, rad, rng);
                let Some(x) = x_s.project_near(&p) else { continue };
                let r = (&x - z).norm();
                if r < 0.5 * scale || r > scale {
                    continue;
                }
                if let Some(pr) = measure_probe(x_s, y_s, z, &x, None) {
                    out.push(pr);
                }
            }
        }
    }
    out
}

/// Projected random-walk ascent of one statistic along X inside the shell.
#[allow(clippy::too_many_arguments)]
fn climb<R: Rng + ?Sized>(
    x_s: &Stratum,
    y_s: &Stratum,
    z: &DVector<f64>,
    scale: f64,
    start: &PairProbe,
    obj: Objective,
    steps: usize,
    rng: &mut R,
) -> PairProbe {
    let mut best = start.clone();
    let mut h = 0.25 * start.dist_xy;
    let dim = z.len();
    for _ in 0..steps {
        let x = DVector::from_column_slice(&best.x);
        let Ok(tx) = x_s.tangent_space(&x) else { break };
        let Ok(dir) = tx.project(&sample::unit_sphere(dim, rng)) else { break };
        let Some(cand) = x_s.project_near(&(x + dir * h)) else {
            h *= 0.5;
            continue;
        };
        let r = (&cand - z).norm();
        let ok = r >= 0.5 * scale && r <= scale && x_s.contains(&cand);
        match ok.then(|| measure_probe(x_s, y_s, z, &cand, None)).flatten() {
            Some(p) if obj.eval(&p) > obj.eval(&best) => {
                h = (h * 1.5).min(0.25 * scale);
                best = p;
            }
            _ => h *= 0.7,
        }
        if h < 1e-14 * scale {
            break;
        }
    }
    best
}

fn validate_scales(scales: &[f64]) -> Result<()> {
    if scales.len() < 4 {
        return Err(Error::Domain("regularity tests need at least four scales".into()));
    }
    for w in scales.windows(2) {
        if !(w[1] > 0.0 && w[1] < w[0]) || (w[0] / w[1] - 2.0).abs() > 1e-9 {
            return Err(Error::Domain("scales must halve at each level".into()));
        }
    }
    Ok(())
}

fn trend_to_zero(maxima: &[f64], cfg: &RegularityConfig) -> Verdict {
    let m = maxima.len();
    let last3 = &maxima[m - 3..];
    let decreasing = last3.windows(2).all(|w| w[1] <= w[0] + cfg.noise_floor);
    if last3[2] < cfg.tol && decreasing {
        Verdict::Pass
    } else if last3.iter().all(|&v| v > 2.0 * cfg.tol) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn bounded(maxima: &[f64], cfg: &RegularityConfig) -> Verdict {
    let m = maxima.len();
    let last3 = &maxima[m - 3..];
    if last3.iter().all(|&v| v <= cfg.noise_floor) {
        return Verdict::Pass;
    }
    let hi = last3.iter().cloned().fold(0.0, f64::max);
    let lo = last3.iter().map(|&v| v.max(cfg.noise_floor)).fold(f64::INFINITY, f64::min);
    if hi <= cfg.growth * lo {
        return Verdict::Pass;
    }
    if last3.windows(2).all(|w| w[1] >= cfg.growth * w[0].max(cfg.noise_floor)) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Runs all three tests with a shared probe set per scale.
pub fn check_pair(
    x_s: &Stratum,
    y_s: &Stratum,
    z: &DVector<f64>,
    scales: &[f64],
    cfg: &RegularityConfig,
    rng: &RngStream,
) -> Result<RegularityReport> {
    validate_scales(scales)?;
    if !y_s.contains(z) {
        return Err(Error::Domain(format!("base point is not on {}", y_s.label)));
    }
    let mut buckets = Vec::new();
    let mut worst: Vec<[PairProbe; 3]> = Vec::new();
    for (i, &s) in scales.iter().enumerate() {
        let stream = rng.child(i as u64);
        let mut probes = probe_pair(x_s, y_s, z, s, cfg.probes, &stream)?;
        let mut g = stream.child(1).rng();
        probes.extend(tube_probes(x_s, y_s, z, s, cfg.probes / 8 + 1, &mut g));
        let mut tops = Vec::new();
        for obj in [Objective::Secant, Objective::Kuo, Objective::Verdier] {
            let mut order: Vec<&PairProbe> = probes.iter().collect();
            order.sort_by(|a, b| obj.eval(b).total_cmp(&obj.eval(a)));
            let mut best = order[0].clone();
            for start in order.iter().take(2) {
                let c = climb(x_s, y_s, z, s, start, obj, cfg.climb_steps, &mut g);
                if obj.eval(&c) > obj.eval(&best) {
                    best = c;
                }
            }
            tops.push(best);
        }
        probes.extend(tops.iter().cloned());
        let fold = |f: &dyn Fn(&PairProbe) -> f64| probes.iter().map(f).fold(0.0, f64::max);
        buckets.push(BucketStats {
            scale: s,
            probes: probes.len(),
            max_gap_secant: fold(&|p| p.gap_secant),
            max_kuo: fold(&|p| p.kuo_ratio()),
            max_verdier: fold(&|p| p.verdier_quotient()),
            max_gap_xy: fold(&|p| p.gap_xy),
        });
        worst.push([tops[0].clone(), tops[1].clone(), tops[2].clone()]);
    }
    let b_max: Vec<f64> = buckets.iter().map(|b| b.max_gap_secant).collect();
    let r_max: Vec<f64> = buckets.iter().map(|b| b.max_kuo).collect();
    let w_max: Vec<f64> = buckets.iter().map(|b| b.max_verdier).collect();
    let whitney_b = trend_to_zero(&b_max, cfg);
    let kuo_r = trend_to_zero(&r_max, cfg);
    let verdier_w = bounded(&w_max, cfg);
    let verdier_constant = (verdier_w == Verdict::Pass).then(|| 1.5 * w_max.iter().cloned().fold(0.0, f64::max));
    let mut witnesses = Vec::new();
    for (j, v) in [whitney_b, kuo_r, verdier_w].iter().enumerate() {
        if *v != Verdict::Pass {
            witnesses.extend(worst.iter().map(|w| w[j].clone()));
        }
    }
    Ok(RegularityReport {
        x: x_s.label.clone(),
        y: y_s.label.clone(),
        z: z.iter().copied().collect(),
        buckets,
        whitney_b,
        kuo_r,
        verdier_w,
        verdier_constant,
        witnesses,
        note: "max_gap_xy per bucket is the (a) diagnostic".into(),
    })
}

/// Whitney (b) alone.
pub fn whitney_b_test(x_s: &Stratum, y_s: &Stratum, z: &DVector<f64>, scales: &[f64], cfg: &RegularityConfig, rng: &RngStream) -> Result<(Verdict, RegularityReport)> {
    let rep = check_pair(x_s, y_s, z, scales, cfg, rng)?;
    Ok((rep.whitney_b, rep))
}

/// Kuo (r) alone.
pub fn kuo_r_test(x_s: &Stratum, y_s: &Stratum, z: &DVector<f64>, scales: &[f64], cfg: &RegularityConfig, rng: &RngStream) -> Result<(Verdict, RegularityReport)> {
    let rep = check_pair(x_s, y_s, z, scales, cfg, rng)?;
    Ok((rep.kuo_r, rep))
}

/// Verdier (w) alone, with the estimated constant.
pub fn verdier_w_test(
    x_s: &Stratum,
    y_s: &Stratum,
    z: &DVector<f64>,
    scales: &[f64],
    cfg: &RegularityConfig,
    rng: &RngStream,
) -> Result<(Verdict, Option<f64>, RegularityReport)> {
    let rep = check_pair(x_s, y_s, z, scales, cfg, rng)?;
    Ok((rep.verdier_w, rep.verdier_constant, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub violations: Vec<String>,
}

impl Audit {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags verdict combinations contradicting (w) ⇒ (r) ⇒ (b); inconclusive
/// verdicts are compatible with anything.
pub fn audit_implications(reports: &[RegularityReport]) -> Audit {
    use Verdict::*;
    let mut violations = Vec::new();
    for r in reports {
        let tag = format!("{} over {} at {:?}", r.x, r.y, r.z);
        if r.verdier_w == Pass && r.kuo_r == Fail {
            violations.push(format!("{tag}: (w) passes but (r) fails"));
        }
        if r.kuo_r == Pass && r.whitney_b == Fail {
            violations.push(format!("{tag}: (r) passes but (b) fails"));
        }
        if r.verdier_w == Pass && r.whitney_b == Fail {
            violations.push(format!("{tag}: (w) passes but (b) fails"));
        }
    }
    Audit { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit::{Condition, ImplicitSet, Sign};
    use crate::poly::Polynomial;

    fn cond(n: usize, pairs: &[(f64, &[u32])], sign: Sign) -> Condition {
        Condition::new(Polynomial::from_pairs(n, pairs).unwrap(), sign)
    }

    fn half_plane_pair() -> (Stratum, Stratum) {
        let x = ImplicitSet::from_conditions(
            3,
            vec![cond(3, &[(1.0, &[0, 0, 1])], Sign::Eq), cond(3, &[(1.0, &[0, 1, 0])], Sign::Gt)],
            2,
        )
        .unwrap();
        let y = ImplicitSet::from_conditions(
            3,
            vec![cond(3, &[(1.0, &[0, 0, 1])], Sign::Eq), cond(3, &[(1.0, &[0, 1, 0])], Sign::Eq)],
            1,
        )
        .unwrap();
        (Stratum::implicit("half-plane", x), Stratum::implicit("axis", y))
    }

    #[test]
    fn linear_pair_all_zero() {
        let (x, y) = half_plane_pair();
        let z = DVector::zeros(3);
        let scales = [0.4, 0.2, 0.1, 0.05];
        let rep = check_pair(&x, &y, &z, &scales, &RegularityConfig::default(), &RngStream::new(1, 0)).unwrap();
        assert_eq!((rep.whitney_b, rep.kuo_r, rep.verdier_w), (Verdict::Pass, Verdict::Pass, Verdict::Pass));
        for b in &rep.buckets {
            assert!(b.max_gap_secant < 1e-7 && b.max_kuo < 1e-7 && b.max_verdier < 1e-7, "{b:?}");
        }
        assert!(rep.verdier_constant.unwrap() < 1e-7);
    }

    #[test]
    fn probe_identity_and_point_strata() {
        let (x, _) = half_plane_pair();
        let origin = ImplicitSet::from_conditions(
            3,
            vec![
                cond(3, &[(1.0, &[1, 0, 0])], Sign::Eq),
                cond(3, &[(1.0, &[0, 1, 0])], Sign::Eq),
                cond(3, &[(1.0, &[0, 0, 1])], Sign::Eq),
            ],
            0,
        )
        .unwrap();
        let y = Stratum::implicit("origin", origin);
        let z = DVector::zeros(3);
        let probes = probe_pair(&x, &y, &z, 0.1, 20, &RngStream::new(4, 0)).unwrap();
        for p in &probes {
            assert_eq!(p.gap_xy, 0.0);
            assert_eq!(p.verdier_quotient(), 0.0);
            assert_eq!(p.kuo_ratio(), p.verdier_quotient() * p.dist_xz);
            assert!(p.dist_xz >= 0.05 - 1e-12 && p.dist_xz <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn parabola_secants_align() {
        let x = ImplicitSet::from_conditions(
            2,
            vec![cond(2, &[(1.0, &[0, 1]), (-1.0, &[2, 0])], Sign::Eq), cond(2, &[(1.0, &[1, 0])], Sign::Gt)],
            1,
        )
        .unwrap();
        let o = ImplicitSet::from_conditions(2, vec![cond(2, &[(1.0, &[1, 0])], Sign::Eq), cond(2, &[(1.0, &[0, 1])], Sign::Eq)], 0).unwrap();
        let (xs, ys) = (Stratum::implicit("arm", x), Stratum::implicit("o", o));
        let z = DVector::zeros(2);
        let coarse = probe_pair(&xs, &ys, &z, 0.2, 10, &RngStream::new(2, 0)).unwrap();
        let fine = probe_pair(&xs, &ys, &z, 0.0125, 10, &RngStream::new(2, 0)).unwrap();
        let m = |v: &[PairProbe]| v.iter().map(|p| p.gap_secant).fold(0.0, f64::max);
        assert!(m(&fine) < m(&coarse));
        assert!(m(&fine) < 0.02);
        // z not in the closure of X
        let far = DVector::from_column_slice(&[-1.0, 0.0]);
        assert!(matches!(probe_pair(&xs, &ys, &far, 0.1, 10, &RngStream::new(2, 0)), Err(Error::Sampling(_))));
    }

    #[test]
    fn audit_examples() {
        let mk = |b, r, w| RegularityReport {
            x: "X".into(),
            y: "Y".into(),
            z: vec![0.0],
            buckets: vec![],
            whitney_b: b,
            kuo_r: r,
            verdier_w: w,
            verdier_constant: None,
            witnesses: vec![],
            note: String::new(),
        };
        use Verdict::*;
        assert!(audit_implications(&[mk(Pass, Pass, Pass)]).clean());
        assert!(!audit_implications(&[mk(Pass, Fail, Pass)]).clean());
        assert!(audit_implications(&[mk(Pass, Inconclusive, Inconclusive)]).clean());
    }
}
