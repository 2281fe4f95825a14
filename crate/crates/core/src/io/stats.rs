use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::gridgen::GenStats;

/// Summary written next to a generated grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub sum: f64,
    pub per_channel_sums: Vec<f64>,
    pub nonzero_voxels: u64,
    pub erf_evals: u64,
    pub elapsed_ms: f64,
}

impl StatsReport {
    pub fn new(grid: &Grid<f32>, stats: &GenStats) -> Self {
        Self {
            sum: grid.sum(),
            per_channel_sums: grid.channel_sums(),
            nonzero_voxels: stats.nonzero_voxels,
            erf_evals: stats.erf_evals,
            elapsed_ms: stats.elapsed.as_secs_f64() * 1e3,
        }
    }
}
