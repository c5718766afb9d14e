//! Crofton-type estimation of Lipschitz–Killing curvatures.

pub mod extrapolate;
pub mod lk;
pub mod local;
pub mod slice;

pub use extrapolate::{fit_limit, FitMethod, LimitFit};
pub use lk::{ball_euler, fiber_histogram, lipschitz_killing, Budget, FiberHistogram};
pub use local::{crofton_consistency, density, local_curvature, ConsistencyReport, CurvatureProfile, RadiusSchedule};
pub use slice::{slice_euler, SlicePlan, Slicer};
