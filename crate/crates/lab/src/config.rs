//! Run defaults, optionally read from a JSON file and overridden by flags.

use std::path::Path;

use lkcurv::crofton::{Budget, RadiusSchedule};
use lkcurv::measure::MeasureParams;
use lkcurv::regularity::RegularityConfig;
use lkcurv::retract::FieldConfig;
use lkcurv::{Error, Result, RngStream};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabConfig {
    pub seed: u64,
    pub planes: usize,
    pub fibers: usize,
    /// Monte Carlo samples for ψ.
    pub samples: usize,
    pub radii: Vec<f64>,
    pub continuity_tol: f64,
    pub sweep_points: usize,
    pub regularity: RegularityConfig,
    pub scales: Vec<f64>,
    pub field: FieldConfig,
    pub retract_starts: usize,
    pub retract_steps: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            planes: 1000,
            fibers: 1000,
            samples: 200_000,
            radii: vec![0.2, 0.1, 0.05, 0.025],
            continuity_tol: 0.03,
            sweep_points: 11,
            regularity: RegularityConfig::default(),
            scales: vec![0.1, 0.05, 0.025, 0.0125],
            field: FieldConfig::default(),
            retract_starts: 100,
            retract_steps: 16,
        }
    }
}

impl LabConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn budget(&self) -> Budget {
        Budget {
            planes: self.planes,
            fibers: self.fibers,
        }
    }

    pub fn rng(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }

    pub fn schedule(&self) -> Result<RadiusSchedule> {
        RadiusSchedule::new(self.radii.clone())
    }

    pub fn measure(&self) -> MeasureParams {
        MeasureParams::new(self.samples, self.rng())
    }
}
