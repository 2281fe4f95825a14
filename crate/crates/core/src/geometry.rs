//! Grid geometry: bounding boxes, lattice cells, grid specs and particle sets.
//!
//! Axis convention: grid axis 1 runs along x, axis 2 along y and axis 3
//! along z. A spec with shape `[nx, ny, nz]` and extents `[a, b, c]` has
//! voxel widths `[a / nx, b / ny, c / nz]`.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};

/// Default box padding, in multiples of sigma, around a point cloud.
pub const DEFAULT_PADDING_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub origin: [f64; 3],
    pub extents: [f64; 3],
}

impl BoundingBox {
    pub fn new(origin: [f64; 3], extents: [f64; 3]) -> Result<Self> {
        if origin.iter().any(|v| !v.is_finite()) {
            return Err(GridError::InvalidSpec(format!("box origin {origin:?} is not finite")));
        }
        for (axis, &extent) in extents.iter().enumerate() {
            if !(extent > 0.0 && extent.is_finite()) {
                return Err(GridError::DegenerateBox { axis, extent });
            }
        }
        Ok(Self { origin, extents })
    }

    /// Box with its lower corner at the origin.
    pub fn from_extents(extents: [f64; 3]) -> Result<Self> {
        Self::new([0.0; 3], extents)
    }

    pub fn upper(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.origin[a] + self.extents[a])
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.origin[a] && p[a] < self.origin[a] + self.extents[a])
    }

    pub fn translated(&self, by: [f64; 3]) -> Self {
        Self { origin: [0, 1, 2].map(|a| self.origin[a] + by[a]), extents: self.extents }
    }
}

/// Orthorhombic periodic cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeCell {
    pub edges: [f64; 3],
}

impl LatticeCell {
    pub fn new(edges: [f64; 3]) -> Result<Self> {
        if edges.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(GridError::InvalidSpec(format!("lattice edges {edges:?} must be positive")));
        }
        Ok(Self { edges })
    }

    /// Wraps a position into `[0, edge)` on every axis.
    pub fn wrap(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| {
            let e = self.edges[a];
            let w = p[a].rem_euclid(e);
            // rem_euclid can round up to exactly `e` for tiny negative inputs
            if w >= e {
                0.0
            } else {
                w
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Voxel counts along x, y, z.
    pub shape: [usize; 3],
    pub channels: usize,
    pub bbox: BoundingBox,
    /// Gaussian standard deviation.
    pub sigma: f64,
    pub periodic: Option<LatticeCell>,
}

impl GridSpec {
    pub fn new(shape: [usize; 3], channels: usize, bbox: BoundingBox, sigma: f64) -> Result<Self> {
        let spec = Self { shape, channels, bbox, sigma, periodic: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Cubic grid of `n` voxels per axis.
    pub fn cubic(n: usize, channels: usize, bbox: BoundingBox, sigma: f64) -> Result<Self> {
        Self::new([n; 3], channels, bbox, sigma)
    }

    /// Periodic grid covering exactly one lattice cell, box origin at zero.
    pub fn periodic(shape: [usize; 3], channels: usize, cell: LatticeCell, sigma: f64) -> Result<Self> {
        let spec = Self { shape, channels, bbox: BoundingBox::from_extents(cell.edges)?, sigma, periodic: Some(cell) };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.contains(&0) {
            return Err(GridError::InvalidSpec(format!("shape {:?} has a zero axis", self.shape)));
        }
        if self.channels == 0 {
            return Err(GridError::InvalidSpec("channel count must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(GridError::InvalidSpec(format!("sigma {} must be positive", self.sigma)));
        }
        BoundingBox::new(self.bbox.origin, self.bbox.extents)?;
        if let Some(cell) = &self.periodic {
            LatticeCell::new(cell.edges)?;
            if self.bbox.origin != [0.0; 3] || self.bbox.extents != cell.edges {
                return Err(GridError::InvalidSpec(
                    "periodic grids must cover exactly one cell with origin at zero".into(),
                ));
            }
            for a in 0..3 {
                if self.sigma * 6.0 >= cell.edges[a] {
                    return Err(GridError::SigmaTooLargeForCell { sigma: self.sigma, edge: cell.edges[a] });
                }
            }
        }
        Ok(())
    }

    pub fn voxel_size(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.bbox.extents[a] / self.shape[a] as f64)
    }

    pub fn voxels_per_channel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn len(&self) -> usize {
        self.channels * self.voxels_per_channel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of voxel `(i, j, k)` in `channel`, channel-major and
    /// contiguous along z.
    #[inline]
    pub fn flat_index(&self, channel: usize, [i, j, k]: [usize; 3]) -> usize {
        ((channel * self.shape[0] + i) * self.shape[1] + j) * self.shape[2] + k
    }

    /// Left endpoint (lower corner) of voxel `index`.
    pub fn voxel_to_world(&self, index: [usize; 3]) -> Result<[f64; 3]> {
        if (0..3).any(|a| index[a] >= self.shape[a]) {
            return Err(GridError::IndexOutOfRange { index, shape: self.shape });
        }
        let d = self.voxel_size();
        Ok([0, 1, 2].map(|a| self.bbox.origin[a] + index[a] as f64 * d[a]))
    }

    pub fn voxel_center(&self, index: [usize; 3]) -> Result<[f64; 3]> {
        let lo = self.voxel_to_world(index)?;
        let d = self.voxel_size();
        Ok([0, 1, 2].map(|a| lo[a] + 0.5 * d[a]))
    }

    /// Voxel whose half-open interval contains `p`, or `None` outside the box.
    pub fn world_to_voxel(&self, p: [f64; 3]) -> Option<[usize; 3]> {
        let d = self.voxel_size();
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let rel = p[a] - self.bbox.origin[a];
            if rel.is_nan() || rel < 0.0 {
                return None;
            }
            let mut i = (rel / d[a]).floor() as usize;
            // Division can round across a voxel boundary; settle on the
            // interval that really contains p.
            if i < self.shape[a] && self.bbox.origin[a] + i as f64 * d[a] > p[a] {
                i = i.checked_sub(1)?;
            } else if i + 1 < self.shape[a] && self.bbox.origin[a] + (i + 1) as f64 * d[a] <= p[a] {
                i += 1;
            }
            if i >= self.shape[a] {
                return None;
            }
            idx[a] = i;
        }
        Some(idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub channel: usize,
    pub position: [f64; 3],
}

impl Particle {
    pub fn new(channel: usize, position: [f64; 3]) -> Self {
        Self { channel, position }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub particles: Vec<Particle>,
    pub lattice: Option<LatticeCell>,
}

impl ParticleSet {
    pub fn new(particles: Vec<Particle>) -> Self {
        Self { particles, lattice: None }
    }

    /// Periodic set; positions are wrapped into the cell.
    pub fn periodic(particles: Vec<Particle>, cell: LatticeCell) -> Self {
        let particles = particles.into_iter().map(|p| Particle::new(p.channel, cell.wrap(p.position))).collect();
        Self { particles, lattice: Some(cell) }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// One more than the largest channel index, or 0 when empty.
    pub fn channel_count(&self) -> usize {
        self.particles.iter().map(|p| p.channel + 1).max().unwrap_or(0)
    }

    pub fn counts_per_channel(&self, channels: usize) -> Vec<usize> {
        let mut counts = vec![0; channels];
        for p in &self.particles {
            if p.channel < channels {
                counts[p.channel] += 1;
            }
        }
        counts
    }

    pub fn centroid(&self) -> Option<[f64; 3]> {
        if self.is_empty() {
            return None;
        }
        let n = self.len() as f64;
        let mut c = [0.0; 3];
        for p in &self.particles {
            for (acc, v) in c.iter_mut().zip(p.position) {
                *acc += v;
            }
        }
        Some(c.map(|v| v / n))
    }

    pub fn translated(&self, by: [f64; 3]) -> Self {
        let particles =
            self.particles.iter().map(|p| Particle::new(p.channel, [0, 1, 2].map(|a| p.position[a] + by[a]))).collect();
        Self { particles, lattice: self.lattice }
    }
}

/// Axis-aligned box around `points`, padded by `padding_sigmas * sigma` on
/// every face. Axes whose padded extent is below `min_extent` are widened
/// symmetrically to `min_extent`.
pub fn bounding_box_of(points: &ParticleSet, sigma: f64, padding_sigmas: f64, min_extent: f64) -> Result<BoundingBox> {
    if points.is_empty() {
        return Err(GridError::EmptyPointSet);
    }
    if padding_sigmas.is_nan() || padding_sigmas < 0.0 || sigma.is_nan() || sigma <= 0.0 {
        return Err(GridError::InvalidSpec(format!(
            "padding {padding_sigmas} and sigma {sigma} must be nonnegative / positive"
        )));
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &points.particles {
        if p.position.iter().any(|v| !v.is_finite()) {
            return Err(GridError::NonFinitePosition(p.position));
        }
        for a in 0..3 {
            lo[a] = lo[a].min(p.position[a]);
            hi[a] = hi[a].max(p.position[a]);
        }
    }
    let pad = padding_sigmas * sigma;
    let mut origin = [0.0; 3];
    let mut extents = [0.0; 3];
    for a in 0..3 {
        let mut start = lo[a] - pad;
        let mut extent = (hi[a] - lo[a]) + 2.0 * pad;
        if extent < min_extent {
            start -= 0.5 * (min_extent - extent);
            extent = min_extent;
        }
        origin[a] = start;
        extents[a] = extent;
    }
    BoundingBox::new(origin, extents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_spec(n: usize) -> GridSpec {
        GridSpec::cubic(n, 1, BoundingBox::from_extents([1.0; 3]).unwrap(), 0.1).unwrap()
    }

    #[test]
    fn single_point_box_is_symmetric() {
        let set = ParticleSet::new(vec![Particle::new(0, [0.0; 3])]);
        let b = bounding_box_of(&set, 0.5, 4.0, 0.0).unwrap();
        assert_eq!(b.origin, [-2.0; 3]);
        assert_eq!(b.extents, [4.0; 3]);
    }

    #[test]
    fn degenerate_axes_need_a_floor() {
        let set = ParticleSet::new(vec![Particle::new(0, [0.0; 3]), Particle::new(0, [1.0, 0.0, 0.0])]);
        let err = bounding_box_of(&set, 0.5, 0.0, 0.0).unwrap_err();
        assert_eq!(err, GridError::DegenerateBox { axis: 1, extent: 0.0 });

        let b = bounding_box_of(&set, 0.5, 0.0, 0.25).unwrap();
        assert_eq!(b.extents, [1.0, 0.25, 0.25]);
        assert_eq!(b.origin, [0.0, -0.125, -0.125]);
    }

    #[test]
    fn empty_set_is_rejected() {
        let err = bounding_box_of(&ParticleSet::default(), 0.5, 4.0, 0.0).unwrap_err();
        assert_eq!(err, GridError::EmptyPointSet);
    }

    #[test]
    fn random_cloud_box_matches_min_max_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Particle> = (0..10)
            .map(|_| Particle::new(0, [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]))
            .collect();
        let set = ParticleSet::new(pts.clone());
        let sigma = 0.3;
        let b = bounding_box_of(&set, sigma, 4.0, 0.0).unwrap();
        for a in 0..3 {
            let min = pts.iter().map(|p| p.position[a]).fold(f64::MAX, f64::min);
            let max = pts.iter().map(|p| p.position[a]).fold(f64::MIN, f64::max);
            assert!((b.origin[a] - (min - 1.2)).abs() < 1e-12);
            assert!((b.upper()[a] - (max + 1.2)).abs() < 1e-12);
        }
    }

    #[test]
    fn voxel_to_world_left_endpoints() {
        let spec = unit_spec(2);
        assert_eq!(spec.voxel_to_world([0, 0, 0]).unwrap(), [0.0; 3]);
        assert_eq!(spec.voxel_to_world([1, 1, 1]).unwrap(), [0.5; 3]);

        let b = BoundingBox::new([-2.0; 3], [4.0; 3]).unwrap();
        let spec = GridSpec::cubic(32, 1, b, 0.5).unwrap();
        assert_eq!(spec.voxel_to_world([16, 16, 16]).unwrap(), [0.0; 3]);
    }

    #[test]
    fn voxel_to_world_rejects_out_of_range() {
        let spec = unit_spec(2);
        assert!(matches!(spec.voxel_to_world([2, 0, 0]), Err(GridError::IndexOutOfRange { .. })));
    }

    #[test]
    fn spec_invariants() {
        let b = BoundingBox::from_extents([1.0; 3]).unwrap();
        assert!(GridSpec::new([0, 1, 1], 1, b, 0.1).is_err());
        assert!(GridSpec::new([1, 1, 1], 0, b, 0.1).is_err());
        assert!(GridSpec::new([1, 1, 1], 1, b, 0.0).is_err());
        assert!(BoundingBox::new([0.0; 3], [1.0, -1.0, 1.0]).is_err());
        let cell = LatticeCell::new([1.0; 3]).unwrap();
        assert!(matches!(GridSpec::periodic([8; 3], 1, cell, 0.2), Err(GridError::SigmaTooLargeForCell { .. })));
        assert!(GridSpec::periodic([8; 3], 1, cell, 0.1).is_ok());
    }

    #[test]
    fn anisotropic_voxel_sizes() {
        let b = BoundingBox::from_extents([2.0, 3.0, 4.0]).unwrap();
        let spec = GridSpec::new([4, 6, 16], 1, b, 0.1).unwrap();
        assert_eq!(spec.voxel_size(), [0.5, 0.5, 0.25]);
        assert_eq!(spec.flat_index(0, [0, 0, 1]), 1);
        assert_eq!(spec.flat_index(0, [0, 1, 0]), 16);
        assert_eq!(spec.flat_index(1, [0, 0, 0]), 4 * 6 * 16);
    }

    #[test]
    fn wrap_into_cell() {
        let cell = LatticeCell::new([2.0, 3.0, 4.0]).unwrap();
        assert_eq!(cell.wrap([2.0, -1.0, 9.0]), [0.0, 2.0, 1.0]);
        let w = cell.wrap([-1e-18, 0.0, 0.0]);
        assert!(w[0] >= 0.0 && w[0] < 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn world_to_voxel_contains_point(
                n in 1usize..40,
                ox in -10.0f64..10.0,
                ext in 0.1f64..20.0,
                fx in 0.0f64..1.0, fy in 0.0f64..1.0, fz in 0.0f64..1.0,
            ) {
                let b = BoundingBox::new([ox, -ox, 0.5 * ox], [ext, ext * 1.5, ext * 0.7]).unwrap();
                let spec = GridSpec::cubic(n, 1, b, 0.1).unwrap();
                let p = [0, 1, 2].map(|a| b.origin[a] + [fx, fy, fz][a] * b.extents[a] * 0.999_999);
                prop_assume!(b.contains(p));
                let idx = spec.world_to_voxel(p).unwrap();
                let lo = spec.voxel_to_world(idx).unwrap();
                let d = spec.voxel_size();
                for a in 0..3 {
                    prop_assert!(lo[a] <= p[a]);
                    if idx[a] + 1 < n {
                        prop_assert!(p[a] < b.origin[a] + (idx[a] + 1) as f64 * d[a]);
                    }
                }
            }
        }
    }
}
