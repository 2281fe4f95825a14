//! Grid generation: the dense baseline and the truncation-aware sparse path.
//!
//! Both paths build the same three axis tables per particle and evaluate
//! every voxel value as `(G[i] * H[j]) * L[k]`. The dense path visits the
//! whole grid; the sparse path only the product of the axis supports. Values
//! outside the support are exactly zero, so adding them is a no-op and the
//! two paths agree bit for bit under saturation truncation.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::geometry::{bounding_box_of, GridSpec, ParticleSet, DEFAULT_PADDING_SIGMAS};
use crate::grid::Grid;
use crate::kernels::{axis_table, axis_table_periodic, AxisTable, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dense,
    #[default]
    Sparse,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dense" => Ok(Mode::Dense),
            "sparse" => Ok(Mode::Sparse),
            other => Err(format!("unknown mode '{other}' (expected dense or sparse)")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Dense => "dense",
            Mode::Sparse => "sparse",
        })
    }
}

/// Where an axis table stops counting as nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Truncation {
    /// Only values that saturated to exactly zero are skipped.
    #[default]
    Saturation,
    /// Values at or below the threshold are skipped as well.
    Threshold(f64),
}

/// Default threshold for [`Truncation::Threshold`].
pub const DEFAULT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GenOptions {
    pub mode: Mode,
    pub truncation: Truncation,
}

impl GenOptions {
    pub fn new(mode: Mode) -> Self {
        Self { mode, truncation: Truncation::Saturation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenStats {
    pub voxel_writes: u64,
    pub erf_evals: u64,
    pub nonzero_voxels: u64,
    pub elapsed: Duration,
}

impl GenStats {
    fn absorb(&mut self, other: &GenStats) {
        self.voxel_writes += other.voxel_writes;
        self.erf_evals += other.erf_evals;
        self.elapsed += other.elapsed;
    }
}

fn tables_for<T: Real>(spec: &GridSpec, position: [f64; 3], truncation: Truncation) -> Result<[AxisTable<T>; 3]> {
    let d = spec.voxel_size();
    let build = |a: usize| -> Result<AxisTable<T>> {
        let mut t = match &spec.periodic {
            Some(cell) => axis_table_periodic(position[a], cell.edges[a], d[a], spec.shape[a], spec.sigma)?,
            None => axis_table(position[a], spec.bbox.origin[a], d[a], spec.shape[a], spec.sigma)?,
        };
        if let Truncation::Threshold(eps) = truncation {
            t.set_support(T::from_f64(eps));
        }
        Ok(t)
    };
    Ok([build(0)?, build(1)?, build(2)?])
}

/// Adds one particle's voxel masses into `grid`.
///
/// The returned stats cover this particle only; `nonzero_voxels` is left at
/// zero since it describes a whole grid.
pub fn splat_atom<T: Real>(
    grid: &mut Grid<T>,
    channel: usize,
    position: [f64; 3],
    options: GenOptions,
) -> Result<GenStats> {
    let spec = grid.spec().clone();
    if channel >= spec.channels {
        return Err(GridError::ChannelOutOfRange { channel, channels: spec.channels });
    }
    if position.iter().any(|v| !v.is_finite()) {
        return Err(GridError::NonFinitePosition(position));
    }
    let position = match &spec.periodic {
        Some(cell) => cell.wrap(position),
        None => position,
    };
    let [gx, gy, gz] = tables_for::<T>(&spec, position, options.truncation)?;
    let [nx, ny, nz] = spec.shape;
    let (xr, yr, zr) = match options.mode {
        Mode::Dense => (0..nx, 0..ny, 0..nz),
        Mode::Sparse => (gx.support(), gy.support(), gz.support()),
    };
    let writes = (xr.len() * yr.len() * zr.len()) as u64;
    let erf_evals = (gx.erf_evals + gy.erf_evals + gz.erf_evals) as u64;

    let data = grid.data_mut();
    let lz = &gz.values[zr.clone()];
    for i in xr {
        let g = gx.values[i];
        for j in yr.clone() {
            let gh = g * gy.values[j];
            let start = spec.flat_index(channel, [i, j, zr.start]);
            let row = &mut data[start..start + lz.len()];
            for (v, l) in row.iter_mut().zip(lz) {
                *v += gh * *l;
            }
        }
    }
    Ok(GenStats { voxel_writes: writes, erf_evals, ..Default::default() })
}

fn check_compatible(points: &ParticleSet, spec: &GridSpec) -> Result<()> {
    spec.validate()?;
    match (&points.lattice, &spec.periodic) {
        (Some(a), Some(b)) if a != b => Err(GridError::LatticeMismatch),
        (Some(_), None) => Err(GridError::LatticeMismatch),
        _ => Ok(()),
    }
}

/// Builds the grid for `points`, splatting particles in index order.
pub fn generate_grid_with<T: Real>(
    points: &ParticleSet,
    spec: &GridSpec,
    options: GenOptions,
) -> Result<(Grid<T>, GenStats)> {
    check_compatible(points, spec)?;
    let mut grid = Grid::<T>::zeros(spec.clone());
    let mut stats = GenStats::default();
    let start = Instant::now();
    for p in &points.particles {
        let s = splat_atom(&mut grid, p.channel, p.position, options)?;
        stats.absorb(&s);
    }
    stats.elapsed = start.elapsed();
    stats.nonzero_voxels = grid.count_nonzero() as u64;
    Ok((grid, stats))
}

/// 32-bit grid with saturation truncation.
pub fn generate_grid(points: &ParticleSet, spec: &GridSpec, mode: Mode) -> Result<(Grid<f32>, GenStats)> {
    generate_grid_with(points, spec, GenOptions::new(mode))
}

/// How each molecule in a batch gets its grid spec.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecPolicy {
    /// Every molecule shares one spec.
    Fixed(GridSpec),
    /// Each molecule gets its own padded bounding box at a fixed resolution.
    PerMoleculeBbox { shape: [usize; 3], channels: usize, sigma: f64, padding_sigmas: f64 },
}

impl SpecPolicy {
    pub fn per_molecule(shape: [usize; 3], channels: usize, sigma: f64) -> Self {
        SpecPolicy::PerMoleculeBbox { shape, channels, sigma, padding_sigmas: DEFAULT_PADDING_SIGMAS }
    }

    pub fn spec_for(&self, points: &ParticleSet) -> Result<GridSpec> {
        match self {
            SpecPolicy::Fixed(spec) => Ok(spec.clone()),
            SpecPolicy::PerMoleculeBbox { shape, channels, sigma, padding_sigmas } => {
                let min_extent = 2.0 * padding_sigmas.max(DEFAULT_PADDING_SIGMAS) * sigma;
                let bbox = bounding_box_of(points, *sigma, *padding_sigmas, min_extent)?;
                GridSpec::new(*shape, *channels, bbox, *sigma)
            }
        }
    }
}

pub type BatchItem = Result<(Grid<f32>, GenStats)>;

/// Generates one grid per point set on `parallelism` worker threads.
///
/// Work is split across molecules only, so every grid is bitwise identical
/// whatever the thread count. Failures are reported per index.
pub fn generate_batch(
    point_sets: &[ParticleSet],
    policy: &SpecPolicy,
    options: GenOptions,
    parallelism: usize,
) -> Result<Vec<BatchItem>> {
    if parallelism == 0 {
        return Err(GridError::InvalidConfig("parallelism must be at least 1".into()));
    }
    let one = |points: &ParticleSet| -> BatchItem {
        let spec = policy.spec_for(points)?;
        generate_grid_with(points, &spec, options)
    };
    if parallelism == 1 {
        return Ok(point_sets.iter().map(one).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| GridError::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| point_sets.par_iter().map(one).collect()))
}
