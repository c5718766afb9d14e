use std::sync::Arc;

use nalgebra::DVector;

use crate::implicit::ImplicitSet;
use crate::pl::PlComplex;

/// A closed set given either implicitly or as a PL complex.
#[derive(Debug, Clone)]
pub enum DefinableSet {
    Implicit(ImplicitSet),
    Pl(Arc<PlComplex>),
}

impl DefinableSet {
    pub fn ambient_dim(&self) -> usize {
        match self {
            DefinableSet::Implicit(s) => s.ambient_dim,
            DefinableSet::Pl(c) => c.ambient_dim(),
        }
    }

    pub fn declared_dim(&self) -> usize {
        match self {
            DefinableSet::Implicit(s) => s.declared_dim,
            DefinableSet::Pl(c) => c.top_dim(),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.ambient_dim() {
            return false;
        }
        match self {
            DefinableSet::Implicit(s) => s.contains(x, tol),
            DefinableSet::Pl(c) => c.contains(&DVector::from_column_slice(x), tol),
        }
    }
}

impl From<ImplicitSet> for DefinableSet {
    fn from(s: ImplicitSet) -> Self {
        DefinableSet::Implicit(s)
    }
}

impl From<PlComplex> for DefinableSet {
    fn from(c: PlComplex) -> Self {
        DefinableSet::Pl(Arc::new(c))
    }
}
