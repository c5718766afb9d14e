//! Limits r → 0 of normalized radius profiles.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// The profile is flat within its errors.
    Constant,
    /// v = L + b·r^α with α on a grid in [0.2, 2].
    PowerLaw,
    /// Two-point extrapolation with α = 1 from the smallest radii.
    Richardson,
}

/// Result of fitting v(r) → L as r → 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub limit: f64,
    pub stderr: f64,
    pub exponent: Option<f64>,
    pub method: FitMethod,
    /// Weighted residual sum of squares of the chosen model.
    pub residual: f64,
}

const STDERR_FLOOR: f64 = 1e-12;
const ALPHA_MIN: f64 = 0.2;
const ALPHA_MAX: f64 = 2.0;
const ALPHA_STEP: f64 = 0.01;

fn chi2_quantile(p: f64, dof: usize) -> f64 {
    ChiSquared::new(dof.max(1) as f64)
        .map(|d| d.inverse_cdf(p))
        .unwrap_or(f64::INFINITY)
}

/// Weighted least squares for v ≈ L + b·r^α; returns (L, b, rss, var(L), cond).
fn wls(radii: &[f64], values: &[f64], w: &[f64], alpha: f64) -> (f64, f64, f64, f64, f64) {
    let (mut s00, mut s01, mut s11, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&r, &v), &wi) in radii.iter().zip(values).zip(w) {
        let x = r.powf(alpha);
        s00 += wi;
        s01 += wi * x;
        s11 += wi * x * x;
        t0 += wi * v;
        t1 += wi * v * x;
    }
    let det = s00 * s11 - s01 * s01;
    let tr = s00 + s11;
    let cond = if det > 0.0 { tr * tr / det } else { f64::INFINITY };
    if det <= 0.0 {
        return (f64::NAN, f64::NAN, f64::INFINITY, f64::INFINITY, cond);
    }
    let l = (s11 * t0 - s01 * t1) / det;
    let b = (s00 * t1 - s01 * t0) / det;
    let rss = radii
        .iter()
        .zip(values)
        .zip(w)
        .map(|((&r, &v), &wi)| wi * (v - l - b * r.powf(alpha)).powi(2))
        .sum();
    (l, b, rss, s11 / det, cond)
}

/// Fits the limit of `values` over strictly decreasing `radii`.
pub fn fit_limit(radii: &[f64], values: &[f64], stderrs: &[f64]) -> Result<LimitFit> {
    let m = radii.len();
    if m < 2 || values.len() != m || stderrs.len() != m {
        return Err(Error::Domain("profile needs at least two matching samples".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimation("non-finite profile value".into()));
    }
    let s: Vec<f64> = stderrs.iter().map(|&e| e.max(STDERR_FLOOR)).collect();
    let w: Vec<f64> = s.iter().map(|e| 1.0 / (e * e)).collect();
    let wsum: f64 = w.iter().sum();
    let mean = values.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() / wsum;
    let chi2: f64 = values.iter().zip(&w).map(|(v, wi)| wi * (v - mean).powi(2)).sum();
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut sorted = s.clone();
    sorted.sort_by(f64::total_cmp);
    let typical = sorted[m / 2];
    if spread <= 1e-9 || chi2 <= chi2_quantile(0.99, m - 1) {
        // neighbouring radii share random streams, so the profile errors are
        // strongly correlated; report a single radius' error
        return Ok(LimitFit {
            limit: mean,
            stderr: if spread <= 1e-9 { typical } else { typical.max(0.5 * spread) },
            exponent: None,
            method: FitMethod::Constant,
            residual: chi2,
        });
    }
    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    let steps = ((ALPHA_MAX - ALPHA_MIN) / ALPHA_STEP).round() as usize;
    for i in 0..=steps {
        let alpha = ALPHA_MIN + ALPHA_STEP * i as f64;
        let (l, _, rss, var, cond) = wls(radii, values, &w, alpha);
        if !l.is_finite() || cond > 1e12 {
            continue;
        }
        if best.map(|b| rss < b.2).unwrap_or(true) {
            best = Some((alpha, l, rss, var, cond));
        }
    }
    let monotone = values.windows(2).all(|p| p[1] >= p[0]) || values.windows(2).all(|p| p[1] <= p[0]);
    match best {
        Some((alpha, l, rss, var, _)) => {
            if rss > 100.0 * chi2_quantile(0.99, m.saturating_sub(3).max(1)) && !monotone {
                return Err(Error::InconclusiveLimit {
                    reason: format!("no power law fits the profile (weighted residual {rss:.3e})"),
                    raw: radii
                        .iter()
                        .zip(values)
                        .zip(stderrs)
                        .map(|((&r, &v), &e)| (r, v, e))
                        .collect(),
                });
            }
            Ok(LimitFit {
                limit: l,
                stderr: var.sqrt().max(typical),
                exponent: Some(alpha),
                method: FitMethod::PowerLaw,
                residual: rss,
            })
        }
        None => {
            let (r1, r2) = (radii[m - 2], radii[m - 1]);
            let (v1, v2) = (values[m - 2], values[m - 1]);
            let l = (v2 * r1 - v1 * r2) / (r1 - r2);
            let k = r1 / (r1 - r2);
            Ok(LimitFit {
                limit: l,
                stderr: (k * k * s[m - 1].powi(2) + (k - 1.0).powi(2) * s[m - 2].powi(2)).sqrt(),
                exponent: Some(1.0),
                method: FitMethod::Richardson,
                residual: f64::NAN,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile() {
        let r = [0.4, 0.2, 0.1, 0.05];
        let f = fit_limit(&r, &[0.5, 0.5, 0.5, 0.5], &[0.0; 4]).unwrap();
        assert_eq!(f.method, FitMethod::Constant);
        assert_eq!(f.limit, 0.5);
        let f = fit_limit(&r, &[0.51, 0.49, 0.5, 0.505], &[0.01; 4]).unwrap();
        assert_eq!(f.method, FitMethod::Constant);
        assert!((f.limit - 0.50125).abs() < 1e-9);
    }

    #[test]
    fn power_law_recovered() {
        let r = [0.4, 0.2, 0.1, 0.05, 0.025];
        let v: Vec<f64> = r.iter().map(|x: &f64| 1.0 + 0.7 * x.powf(1.5)).collect();
        let f = fit_limit(&r, &v, &[1e-6; 5]).unwrap();
        assert_eq!(f.method, FitMethod::PowerLaw);
        assert!((f.limit - 1.0).abs() < 1e-4, "{f:?}");
        assert!((f.exponent.unwrap() - 1.5).abs() < 0.02);
    }

    #[test]
    fn wild_profile_is_inconclusive() {
        let r = [0.4, 0.2, 0.1, 0.05, 0.025];
        let v = [1.0, 3.0, -2.0, 5.0, 0.0];
        assert!(matches!(
            fit_limit(&r, &v, &[1e-3; 5]),
            Err(Error::InconclusiveLimit { .. })
        ));
    }
}
