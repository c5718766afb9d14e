//! Local Lipschitz–Killing curvatures of semialgebraic and piecewise-linear
//! sets, estimated through Crofton-type integrals over Grassmannians, together
//! with numerical checks of Whitney, Kuo and Verdier regularity and a
//! strata-preserving deformation retract for PL stratified sets.

pub mod config;
pub mod crofton;
pub mod error;
pub mod family;
pub mod implicit;
mod linalg;
pub mod measure;
pub mod pl;
pub mod poly;
pub mod regularity;
pub mod retract;
pub mod rng;
pub mod sample;
pub mod set;
pub mod strata;
pub mod subspace;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use subspace::{crofton_constant, gap, haar_sample, unit_ball_volume, Subspace};
