//! Semialgebraic sets given by a disjunction of conjunctions of polynomial
//! sign conditions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::TOL;
use crate::error::{domain, Error, Result};
use crate::linalg::Svd;
use crate::poly::Polynomial;
use crate::subspace::Subspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// p = 0
    Eq,
    /// p ≥ 0
    Ge,
    /// p > 0
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub poly: Polynomial,
    pub sign: Sign,
}

impl Condition {
    pub fn new(poly: Polynomial, sign: Sign) -> Self {
        Self { poly, sign }
    }

    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        let (v, s) = self.poly.eval_with_scale(x);
        let slack = tol * (1.0 + s);
        match self.sign {
            Sign::Eq => v.abs() <= slack,
            Sign::Ge => v >= -slack,
            Sign::Gt => v > slack,
        }
    }
}

/// A conjunction of conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Clause(pub Vec<Condition>);

impl Clause {
    pub fn holds(&self, x: &[f64], tol: f64) -> bool {
        self.0.iter().all(|c| c.holds(x, tol))
    }

    pub fn equalities(&self) -> impl Iterator<Item = &Polynomial> {
        self.0
            .iter()
            .filter(|c| c.sign == Sign::Eq)
            .map(|c| &c.poly)
    }
}

/// `{x : some clause holds}` with a user-declared dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSet {
    pub ambient_dim: usize,
    pub clauses: Vec<Clause>,
    pub declared_dim: usize,
}

impl ImplicitSet {
    pub fn new(ambient_dim: usize, clauses: Vec<Clause>, declared_dim: usize) -> Result<Self> {
        let s = Self {
            ambient_dim,
            clauses,
            declared_dim,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.declared_dim > self.ambient_dim {
            return Err(Error::Invalid(format!(
                "declared dimension {} exceeds ambient {}",
                self.declared_dim, self.ambient_dim
            )));
        }
        if self.clauses.is_empty() {
            return Err(Error::Invalid("implicit set without clauses".into()));
        }
        for c in self.clauses.iter().flat_map(|c| c.0.iter()) {
            if !c.poly.terms().is_empty() && c.poly.nvars() != self.ambient_dim {
                return Err(Error::Invalid(format!(
                    "polynomial in {} variables inside ℝ^{}",
                    c.poly.nvars(),
                    self.ambient_dim
                )));
            }
        }
        Ok(())
    }

    /// Single-clause convenience constructor.
    pub fn from_conditions(ambient_dim: usize, conds: Vec<Condition>, declared_dim: usize) -> Result<Self> {
        Self::new(ambient_dim, vec![Clause(conds)], declared_dim)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.ambient_dim && self.clauses.iter().any(|c| c.holds(x, tol))
    }

    /// The first clause satisfied at `x`.
    pub fn active_clause(&self, x: &[f64], tol: f64) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.holds(x, tol))
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.declared_dim == self.ambient_dim
    }

    /// Every polynomial appearing in any condition.
    pub fn polynomials(&self) -> impl Iterator<Item = &Polynomial> {
        self.clauses.iter().flat_map(|c| c.0.iter().map(|k| &k.poly))
    }

    /// Jacobian rows of the equalities of the active clause.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let clause = self
            .active_clause(x, TOL.membership)
            .ok_or_else(|| Error::Domain("point not in set".into()))?;
        let rows: Vec<Vec<f64>> = clause
            .equalities()
            .map(|p| p.gradient().iter().map(|g| g.eval(x)).collect())
            .collect();
        let n = self.ambient_dim;
        Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }

    /// Kernel of the Jacobian of the active equalities; its dimension must
    /// equal the declared dimension.
    pub fn tangent_space(&self, x: &[f64]) -> Result<Subspace> {
        if !self.contains(x, TOL.membership) {
            return domain("tangent space requested off the set");
        }
        let n = self.ambient_dim;
        let j = self.jacobian(x)?;
        let t = kernel(&j, n)?;
        if t.dim() != self.declared_dim {
            return Err(Error::Singular(format!(
                "Jacobian kernel has dimension {} but the set is declared {}-dimensional",
                t.dim(),
                self.declared_dim
            )));
        }
        Ok(t)
    }

    /// Substitutes `t` into the trailing coordinates.
    pub fn substitute_tail(&self, t: &[f64], declared_dim: usize) -> Result<ImplicitSet> {
        let clauses = self
            .clauses
            .iter()
            .map(|c| {
                Clause(
                    c.0.iter()
                        .map(|k| Condition::new(k.poly.substitute_tail(t), k.sign))
                        .collect(),
                )
            })
            .collect();
        Ok(ImplicitSet {
            ambient_dim: self.ambient_dim - t.len(),
            clauses,
            declared_dim,
        })
    }

    /// Hypersurface pieces covering the boundary of a full-dimensional set.
    /// Each inequality of each clause in turn becomes an equality, the others
    /// are closed.
    pub fn boundary_cover(&self) -> Result<ImplicitSet> {
        if !self.is_full_dimensional() {
            return domain("boundary cover of a set that is not full-dimensional");
        }
        let mut clauses = Vec::new();
        for c in &self.clauses {
            for i in 0..c.0.len() {
                if c.0[i].sign == Sign::Eq {
                    continue;
                }
                clauses.push(Clause(
                    c.0.iter()
                        .enumerate()
                        .map(|(j, k)| {
                            let sign = if j == i { Sign::Eq } else if k.sign == Sign::Gt { Sign::Ge } else { k.sign };
                            Condition::new(k.poly.clone(), sign)
                        })
                        .collect(),
                ));
            }
        }
        ImplicitSet::new(self.ambient_dim, clauses, self.ambient_dim - 1)
    }
}

/// Null space of an m×n matrix, rank decided relative to its largest
/// singular value.
pub fn kernel(j: &DMatrix<f64>, n: usize) -> Result<Subspace> {
    if j.nrows() == 0 {
        return Ok(Subspace::full(n));
    }
    let svd = Svd::new(j);
    let smax = svd.max_singular();
    if smax <= TOL.rank {
        return Ok(Subspace::full(n));
    }
    Subspace::span(n, &svd.null_space(TOL.rank * smax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::gap;
    use nalgebra::DVector;

    #[test]
    fn boundary_of_a_quadrant() {
        let x = Polynomial::from_pairs(2, &[(1.0, &[1, 0])]).unwrap();
        let y = Polynomial::from_pairs(2, &[(1.0, &[0, 1])]).unwrap();
        let q = ImplicitSet::from_conditions(2, vec![Condition::new(x, Sign::Ge), Condition::new(y, Sign::Gt)], 2).unwrap();
        let b = q.boundary_cover().unwrap();
        assert_eq!(b.clauses.len(), 2);
        assert_eq!(b.declared_dim, 1);
        assert!(b.contains(&[0.0, 0.5], 1e-12) && b.contains(&[0.5, 0.0], 1e-12));
        assert!(!b.contains(&[0.5, 0.5], 1e-12) && !b.contains(&[-0.5, 0.0], 1e-12));
        assert!(b.boundary_cover().is_err());
    }

    fn circle() -> ImplicitSet {
        let p = Polynomial::from_pairs(2, &[(1.0, &[2, 0]), (1.0, &[0, 2]), (-1.0, &[0, 0])]).unwrap();
        ImplicitSet::from_conditions(2, vec![Condition::new(p, Sign::Eq)], 1).unwrap()
    }

    #[test]
    fn membership() {
        let c = circle();
        assert!(c.contains(&[1.0, 0.0], 1e-9));
        assert!(!c.contains(&[2.0, 0.0], 1e-9));
        let y = Polynomial::from_pairs(2, &[(1.0, &[0, 1])]).unwrap();
        let x = Polynomial::from_pairs(2, &[(1.0, &[1, 0])]).unwrap();
        let half = ImplicitSet::from_conditions(
            2,
            vec![Condition::new(y, Sign::Eq), Condition::new(x, Sign::Ge)],
            1,
        )
        .unwrap();
        assert!(half.contains(&[0.0, 0.0], 1e-9));
        assert!(!half.contains(&[-0.1, 0.0], 1e-9));
    }

    #[test]
    fn tangents() {
        let c = circle();
        let t = c.tangent_space(&[1.0, 0.0]).unwrap();
        let e2 = Subspace::coordinate(2, &[1]).unwrap();
        assert!(gap(&t, &e2).unwrap() < 1e-10);
        assert!(c.tangent_space(&[2.0, 0.0]).is_err());

        let cone = Polynomial::from_pairs(3, &[(1.0, &[2, 0, 0]), (1.0, &[0, 2, 0]), (-1.0, &[0, 0, 2])]).unwrap();
        let z = Polynomial::from_pairs(3, &[(1.0, &[0, 0, 1])]).unwrap();
        let s = ImplicitSet::from_conditions(
            3,
            vec![Condition::new(cone, Sign::Eq), Condition::new(z, Sign::Gt)],
            2,
        )
        .unwrap();
        let t = s.tangent_space(&[1.0, 0.0, 1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = Subspace::span_vectors(
            3,
            &[DVector::from_column_slice(&[0.0, 1.0, 0.0]), DVector::from_column_slice(&[h, 0.0, h])],
        )
        .unwrap();
        assert!(gap(&t, &expect).unwrap() < 1e-10);
        // the cone point is singular
        let apex = ImplicitSet::from_conditions(3, vec![s.clauses[0].0[0].clone()], 2).unwrap();
        assert!(matches!(apex.tangent_space(&[0.0, 0.0, 0.0]), Err(Error::Singular(_))));
    }
}
