//! Grid reversal: persistence peaks as seeds, then gradient descent on the
//! grid-space mean-squared error.

mod peaks;
mod refine;

pub use peaks::{detect_peaks, filtration_order, persistence_pairs, Peak, PeakSet, PersistencePair};
pub use refine::{loss, loss_gradient, refine_coords, ReversalConfig, ReversalState, Termination};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::ParticleSet;
use crate::grid::Grid;
use crate::kernels::Real;

/// A channel whose rounded mass disagrees with its number of peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMismatch {
    pub channel: usize,
    /// Channel sum rounded to the nearest integer.
    pub expected: usize,
    /// Number of detected peaks, which is what the output uses.
    pub found: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalOutput {
    pub particles: ParticleSet,
    pub peaks: PeakSet,
    pub warnings: Vec<CountMismatch>,
    /// `None` when there was nothing to refine.
    pub state: Option<ReversalState>,
}

/// Recovers particle coordinates from `grid`.
///
/// One particle is produced per detected peak. Channels whose rounded sum
/// differs from their peak count are reported in `warnings`.
pub fn reverse_grid<T: Real>(grid: &Grid<T>, config: &ReversalConfig) -> Result<ReversalOutput> {
    config.validate()?;
    let spec = grid.spec();
    let peaks = detect_peaks(grid, config.persistence_threshold)?;

    let mut warnings = Vec::new();
    for (channel, sum) in grid.channel_sums().into_iter().enumerate() {
        let expected = sum.round().max(0.0) as usize;
        let found = peaks.count_in(channel);
        if expected != found {
            log::warn!("channel {channel}: mass rounds to {expected} particles but {found} peaks were found");
            warnings.push(CountMismatch { channel, expected, found });
        }
    }

    let empty = ParticleSet { particles: Vec::new(), lattice: spec.periodic };
    if peaks.is_empty() {
        return Ok(ReversalOutput { particles: empty, peaks, warnings, state: None });
    }

    let state = refine_coords(grid, &peaks, config)?;
    let particles = ParticleSet { particles: state.particles.clone(), lattice: spec.periodic };
    Ok(ReversalOutput { particles, peaks, warnings, state: Some(state) })
}
