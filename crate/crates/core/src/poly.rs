//! Multivariate polynomials with rational or floating coefficients, and
//! univariate restrictions used for slicing along lines.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{Error, Result};

/// A coefficient: either a decimal number or an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Float(f64),
    Rational { num: i64, den: i64 },
}

impl Coeff {
    pub fn value(&self) -> f64 {
        match *self {
            Coeff::Float(v) => v,
            Coeff::Rational { num, den } => num as f64 / den as f64,
        }
    }

    /// Exact value. Floats convert through their binary expansion.
    pub fn exact(&self) -> Option<BigRational> {
        match *self {
            Coeff::Float(v) => BigRational::from_float(v),
            Coeff::Rational { num, den } => {
                if den == 0 {
                    None
                } else {
                    Some(BigRational::new(BigInt::from(num), BigInt::from(den)))
                }
            }
        }
    }
}

impl From<f64> for Coeff {
    fn from(v: f64) -> Self {
        Coeff::Float(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Coeff,
    pub exps: Vec<u32>,
}

/// A polynomial in `nvars` variables, serialized as its list of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Term>,
    // cached float coefficients
    #[serde(skip)]
    coeffs: Vec<f64>,
}

impl TryFrom<Vec<Term>> for Polynomial {
    type Error = Error;
    fn try_from(terms: Vec<Term>) -> Result<Self> {
        let nvars = terms.first().map(|t| t.exps.len()).unwrap_or(0);
        Polynomial::new(nvars, terms)
    }
}

impl From<Polynomial> for Vec<Term> {
    fn from(p: Polynomial) -> Self {
        p.terms
    }
}

impl Polynomial {
    pub fn new(nvars: usize, terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            if t.exps.len() != nvars {
                return Err(Error::Invalid(format!(
                    "term with {} exponents in a polynomial of {nvars} variables",
                    t.exps.len()
                )));
            }
            if let Coeff::Rational { den: 0, .. } = t.coeff {
                return Err(Error::Invalid("zero denominator".into()));
            }
        }
        let coeffs = terms.iter().map(|t| t.coeff.value()).collect();
        Ok(Self {
            nvars,
            terms,
            coeffs,
        })
    }

    /// Builds from `(coefficient, exponents)` pairs with float coefficients.
    pub fn from_pairs(nvars: usize, pairs: &[(f64, &[u32])]) -> Result<Self> {
        Self::new(
            nvars,
            pairs
                .iter()
                .map(|(c, e)| Term {
                    coeff: Coeff::Float(*c),
                    exps: e.to_vec(),
                })
                .collect(),
        )
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    fn max_exp(&self) -> Vec<u32> {
        let mut m = vec![0; self.nvars];
        for t in &self.terms {
            for (i, &e) in t.exps.iter().enumerate() {
                m[i] = m[i].max(e);
            }
        }
        m
    }

    fn powers(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.max_exp()
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let mut v = Vec::with_capacity(e as usize + 1);
                let mut acc = 1.0;
                v.push(acc);
                for _ in 0..e {
                    acc *= x[i];
                    v.push(acc);
                }
                v
            })
            .collect()
    }

    /// Value at `x`. Empty polynomials (no terms) evaluate to 0 anywhere.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_with_scale(x).0
    }

    /// Value together with Σ |c|·|x^e|, the natural size for rounding error.
    pub fn eval_with_scale(&self, x: &[f64]) -> (f64, f64) {
        if self.terms.is_empty() {
            return (0.0, 0.0);
        }
        debug_assert!(x.len() >= self.nvars);
        let pw = self.powers(x);
        let mut v = 0.0;
        let mut s = 0.0;
        for (t, &c) in self.terms.iter().zip(&self.coeffs) {
            let mut m = c;
            for (i, &e) in t.exps.iter().enumerate() {
                m *= pw[i][e as usize];
            }
            v += m;
            s += m.abs();
        }
        (v, s)
    }

    /// Exact evaluation at rational coordinates.
    pub fn eval_rational(&self, x: &[BigRational]) -> Option<BigRational> {
        let mut v = BigRational::zero();
        for t in &self.terms {
            let mut m = t.coeff.exact()?;
            for (i, &e) in t.exps.iter().enumerate() {
                for _ in 0..e {
                    m *= &x[i];
                }
            }
            v += m;
        }
        Some(v)
    }

    /// ∂p/∂x_i.
    pub fn partial(&self, i: usize) -> Polynomial {
        let mut terms = Vec::new();
        for t in &self.terms {
            let e = t.exps[i];
            if e == 0 {
                continue;
            }
            let mut exps = t.exps.clone();
            exps[i] -= 1;
            let coeff = match t.coeff {
                Coeff::Float(c) => Coeff::Float(c * e as f64),
                Coeff::Rational { num, den } => Coeff::Rational {
                    num: num * e as i64,
                    den,
                },
            };
            terms.push(Term { coeff, exps });
        }
        Polynomial::new(self.nvars, terms).expect("same shape")
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// Substitutes `t` for the last `t.len()` variables.
    pub fn substitute_tail(&self, t: &[f64]) -> Polynomial {
        let k = t.len();
        let m = self.nvars - k;
        let mut terms: Vec<Term> = Vec::new();
        for term in &self.terms {
            let mut c = term.coeff.value();
            for (j, &tj) in t.iter().enumerate() {
                c *= tj.powi(term.exps[m + j] as i32);
            }
            let exps = term.exps[..m].to_vec();
            if let Some(existing) = terms.iter_mut().find(|u| u.exps == exps) {
                existing.coeff = Coeff::Float(existing.coeff.value() + c);
            } else {
                terms.push(Term {
                    coeff: Coeff::Float(c),
                    exps,
                });
            }
        }
        terms.retain(|t| t.coeff.value() != 0.0);
        Polynomial::new(m, terms).expect("same shape")
    }

    /// The univariate polynomial s ↦ p(x0 + s·u).
    pub fn restrict_line(&self, x0: &[f64], u: &[f64]) -> Univariate {
        let deg = self.degree() as usize;
        let maxe = self.max_exp();
        // powers of (x0_i + s u_i) as coefficient vectors
        let pw: Vec<Vec<Vec<f64>>> = maxe
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let mut out = vec![vec![1.0]];
                for _ in 0..e {
                    let prev = out.last().unwrap();
                    let mut next = vec![0.0; prev.len() + 1];
                    for (j, &c) in prev.iter().enumerate() {
                        next[j] += c * x0[i];
                        next[j + 1] += c * u[i];
                    }
                    out.push(next);
                }
                out
            })
            .collect();
        let mut coeffs = vec![0.0; deg + 1];
        let mut scale = vec![0.0; deg + 1];
        let mut buf = vec![0.0; deg + 1];
        for (t, &c) in self.terms.iter().zip(&self.coeffs) {
            buf.iter_mut().for_each(|b| *b = 0.0);
            buf[0] = c;
            let mut len = 1;
            for (i, &e) in t.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let f = &pw[i][e as usize];
                let mut tmp = vec![0.0; len + f.len() - 1];
                for a in 0..len {
                    for (b, &fb) in f.iter().enumerate() {
                        tmp[a + b] += buf[a] * fb;
                    }
                }
                len = tmp.len();
                buf[..len].copy_from_slice(&tmp);
            }
            for j in 0..len {
                coeffs[j] += buf[j];
                scale[j] += buf[j].abs();
            }
        }
        Univariate { coeffs, scale }
    }
}

/// A polynomial in one variable, ascending coefficients, with per-coefficient
/// magnitude bounds used to judge cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Univariate {
    pub coeffs: Vec<f64>,
    pub scale: Vec<f64>,
}

/// Outcome of isolating roots on an interval.
#[derive(Debug, Clone, PartialEq)]
pub enum RootSet {
    Roots(Vec<f64>),
    /// A multiple root or a vanishing polynomial.
    Degenerate,
}

impl Univariate {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        let scale = coeffs.iter().map(|c| c.abs()).collect();
        Self { coeffs, scale }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    fn scale_at(&self, s: f64) -> f64 {
        let a = s.abs();
        self.scale.iter().rev().fold(0.0, |acc, &c| acc * a + c)
    }

    fn derivative(&self) -> Univariate {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| c * j as f64)
            .collect();
        let scale = self
            .scale
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, &c)| c * j as f64)
            .collect();
        Univariate { coeffs, scale }
    }

    fn effective_degree(&self) -> Option<usize> {
        let tot: f64 = self.scale.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        (0..self.coeffs.len())
            .rev()
            .find(|&j| self.coeffs[j].abs() > 1e-13 * tot)
    }

    /// Simple roots strictly inside `(lo, hi)`, or `Degenerate` when an
    /// interior root is multiple or the polynomial vanishes identically.
    /// Roots at the interval ends may or may not be reported.
    pub fn roots_in(&self, lo: f64, hi: f64) -> RootSet {
        let tol = TOL.multiplicity;
        let Some(deg) = self.effective_degree() else {
            return RootSet::Degenerate;
        };
        if deg == 0 {
            return RootSet::Roots(vec![]);
        }
        let crit = self.derivative().sign_change_roots(lo, hi);
        for &c in &crit {
            if self.eval(c).abs() <= tol * self.scale_at(c) {
                return RootSet::Degenerate;
            }
        }
        RootSet::Roots(self.roots_between(lo, hi, &crit))
    }

    /// Roots at which the sign changes, found on monotone pieces.
    fn sign_change_roots(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.effective_degree() {
            None | Some(0) => vec![],
            Some(1) => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if r > lo && r < hi {
                    vec![r]
                } else {
                    vec![]
                }
            }
            Some(_) => {
                let crit = self.derivative().sign_change_roots(lo, hi);
                self.roots_between(lo, hi, &crit)
            }
        }
    }

    fn roots_between(&self, lo: f64, hi: f64, crit: &[f64]) -> Vec<f64> {
        let mut knots = Vec::with_capacity(crit.len() + 2);
        knots.push(lo);
        knots.extend_from_slice(crit);
        knots.push(hi);
        let mut out = Vec::new();
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa == 0.0 || fb == 0.0 || (fa < 0.0) == (fb < 0.0) {
                continue;
            }
            out.push(self.bracketed_root(a, b, fa, fb));
        }
        out
    }

    /// Illinois false position, falling back to bisection.
    fn bracketed_root(&self, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
        let mut side: i32 = 0;
        for _ in 0..200 {
            let width = b - a;
            if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
                break;
            }
            let mut c = (a * fb - b * fa) / (fb - fa);
            if !(c > a && c < b) || side.abs() > 3 {
                c = 0.5 * (a + b);
                side = 0;
            }
            let fc = self.eval(c);
            if fc == 0.0 {
                return c;
            }
            if (fc < 0.0) == (fa < 0.0) {
                a = c;
                fa = fc;
                if side < 0 {
                    fb *= 0.5;
                }
                side = if side < 0 { side - 1 } else { -1 };
            } else {
                b = c;
                fb = fc;
                if side > 0 {
                    fa *= 0.5;
                }
                side = if side > 0 { side + 1 } else { 1 };
            }
        }
        0.5 * (a + b)
    }
}

/// Convenience constructor for exact fractions.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle() -> Polynomial {
        Polynomial::from_pairs(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])]).unwrap()
    }

    #[test]
    fn evaluation_and_gradient() {
        let p = circle();
        assert_eq!(p.eval(&[1.0, 0.0]), 0.0);
        assert_eq!(p.eval(&[2.0, 0.0]), 3.0);
        let g = p.gradient();
        assert_eq!(g[0].eval(&[0.5, 3.0]), 1.0);
        assert_eq!(g[1].eval(&[0.5, 3.0]), 6.0);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn exact_evaluation() {
        let p = Polynomial::new(
            2,
            vec![
                Term {
                    coeff: Coeff::Rational { num: 1, den: 3 },
                    exps: vec![1, 0],
                },
                Term {
                    coeff: Coeff::Rational { num: -1, den: 1 },
                    exps: vec![0, 1],
                },
            ],
        )
        .unwrap();
        let v = p.eval_rational(&[rational(3, 1), rational(1, 1)]).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn serde_roundtrip() {
        let js = r#"[{"coeff": 1.5, "exps": [2, 0]}, {"coeff": {"num": -1, "den": 2}, "exps": [0, 0]}]"#;
        let p: Polynomial = serde_json::from_str(js).unwrap();
        assert_eq!(p.nvars(), 2);
        assert_eq!(p.eval(&[1.0, 7.0]), 1.0);
        let back = serde_json::to_string(&p).unwrap();
        let q: Polynomial = serde_json::from_str(&back).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn substitution() {
        // y² − t²x² at t = 1
        let p = Polynomial::from_pairs(3, &[(1.0, &[0, 2, 0]), (-1.0, &[2, 0, 2])]).unwrap();
        let q = p.substitute_tail(&[1.0]);
        assert_eq!(q.nvars(), 2);
        assert_eq!(q.eval(&[2.0, 2.0]), 0.0);
        assert_eq!(q.eval(&[2.0, 1.0]), -3.0);
    }

    #[test]
    fn line_restriction_roots() {
        let p = circle();
        let u = p.restrict_line(&[0.3, 0.0], &[0.0, 1.0]);
        match u.roots_in(-2.0, 2.0) {
            RootSet::Roots(r) => {
                assert_eq!(r.len(), 2);
                let h = (1.0f64 - 0.09).sqrt();
                assert!((r[0] + h).abs() < 1e-12 && (r[1] - h).abs() < 1e-12);
            }
            RootSet::Degenerate => panic!(),
        }
        // tangent line x = 1
        let t = p.restrict_line(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(t.roots_in(-2.0, 2.0), RootSet::Degenerate);
    }

    #[test]
    fn many_roots() {
        // (s−1)(s−2)(s−3)(s−4)(s−5)
        let mut c = vec![1.0];
        for r in 1..=5 {
            let mut n = vec![0.0; c.len() + 1];
            for (j, &v) in c.iter().enumerate() {
                n[j] -= v * r as f64;
                n[j + 1] += v;
            }
            c = n;
        }
        let u = Univariate::from_coeffs(c);
        match u.roots_in(0.5, 5.5) {
            RootSet::Roots(r) => {
                for (i, x) in r.iter().enumerate() {
                    assert!((x - (i + 1) as f64).abs() < 1e-10);
                }
                assert_eq!(r.len(), 5);
            }
            RootSet::Degenerate => panic!(),
        }
        assert_eq!(
            Univariate::from_coeffs(vec![1.0, -2.0, 1.0]).roots_in(-3.0, 3.0),
            RootSet::Degenerate
        );
    }
}
