use crate::error::{Error, Result};
use crate::set::DefinableSet;

/// A set in ℝ^{n−k} × ℝ^k read as the family of its fibers over the last
/// `param_dim` coordinates.
#[derive(Debug, Clone)]
pub struct SetFamily {
    pub total: DefinableSet,
    pub param_dim: usize,
}

impl SetFamily {
    pub fn new(total: DefinableSet, param_dim: usize) -> Result<Self> {
        if param_dim > total.ambient_dim() {
            return Err(Error::Invalid(format!(
                "{param_dim} parameters for a set in ℝ^{}",
                total.ambient_dim()
            )));
        }
        Ok(Self { total, param_dim })
    }

    pub fn fiber_ambient_dim(&self) -> usize {
        self.total.ambient_dim() - self.param_dim
    }

    /// Declared dimension of a generic fiber.
    pub fn fiber_dim(&self) -> usize {
        self.total.declared_dim().saturating_sub(self.param_dim)
    }

    /// The fiber {q : (q, t) ∈ A}.
    pub fn fiber(&self, t: &[f64]) -> Result<DefinableSet> {
        if t.len() != self.param_dim {
            return Err(Error::Domain(format!(
                "parameter of length {} for a {}-parameter family",
                t.len(),
                self.param_dim
            )));
        }
        match &self.total {
            DefinableSet::Implicit(s) => Ok(DefinableSet::Implicit(s.substitute_tail(t, self.fiber_dim())?)),
            DefinableSet::Pl(_) => Err(Error::Unsupported("fibers of PL families".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::implicit::{Condition, ImplicitSet, Sign};
    use crate::poly::Polynomial;

    #[test]
    fn line_family_fibers() {
        let p = Polynomial::from_pairs(3, &[(1.0, &[0, 2, 0]), (-1.0, &[2, 0, 2])]).unwrap();
        let total = ImplicitSet::from_conditions(3, vec![Condition::new(p, Sign::Eq)], 2).unwrap();
        let fam = SetFamily::new(total.into(), 1).unwrap();
        let f0 = fam.fiber(&[0.0]).unwrap();
        assert!(f0.contains(&[0.7, 0.0], 1e-9));
        assert!(!f0.contains(&[0.7, 0.1], 1e-9));
        let f1 = fam.fiber(&[1.0]).unwrap();
        assert!(f1.contains(&[0.5, -0.5], 1e-9));
        assert_eq!(f1.declared_dim(), 1);
        assert!(fam.fiber(&[1.0, 2.0]).is_err());
    }
}
