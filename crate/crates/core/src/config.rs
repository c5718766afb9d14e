//! Numerical tolerances shared by every module.

/// Central record of tolerance constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Linear algebra: orthonormality, projector agreement.
    pub linalg: f64,
    /// Relative tolerance for polynomial sign conditions.
    pub membership: f64,
    /// Relative singular-value cutoff for Jacobian rank decisions.
    pub rank: f64,
    /// Relative size below which a critical value of a restricted polynomial
    /// counts as a multiple root.
    pub multiplicity: f64,
    /// Barycentric slack for PL point location.
    pub barycentric: f64,
    /// Residual accepted for points returned by projections onto strata.
    pub on_stratum: f64,
    /// Smallest accepted simplex volume.
    pub simplex_volume: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

pub const TOL: Tolerances = Tolerances {
    linalg: 1e-10,
    membership: 1e-9,
    rank: 1e-8,
    multiplicity: 1e-10,
    barycentric: 1e-10,
    on_stratum: 1e-8,
    simplex_volume: 1e-12,
};
