//! Multi-channel Gaussian-density voxel grids for typed point clouds.
//!
//! Every particle is a normalized 3D Gaussian; each voxel stores the exact
//! integral of that Gaussian over its extent, so grids sum to the number of
//! particles. The integral is separable, which lets generation work from
//! per-axis tables and skip every voxel where one of the axis factors has
//! saturated to zero.
//!
//! The crate also inverts grids: peaks are found with superlevel-set
//! persistence and then refined by gradient descent on the grid-space
//! mean-squared error.

pub mod error;
pub mod geometry;
pub mod grid;
pub mod gridgen;
pub mod io;
pub mod kernels;
pub mod reversal;

pub use error::{GridError, Result};
pub use geometry::{bounding_box_of, BoundingBox, GridSpec, LatticeCell, Particle, ParticleSet};
pub use grid::Grid;
pub use gridgen::{
    generate_batch, generate_grid, generate_grid_with, splat_atom, GenOptions, GenStats, Mode, SpecPolicy, Truncation,
};
pub use kernels::{axis_gradient, axis_table, axis_table_periodic, erf_approx, AxisTable, Real};
pub use reversal::{
    detect_peaks, loss, loss_gradient, refine_coords, reverse_grid, Peak, PeakSet, ReversalConfig, ReversalOutput,
    ReversalState, Termination,
};
