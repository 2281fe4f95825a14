//! Peak detection by 0-dimensional persistence of the superlevel-set
//! filtration on the 26-connected voxel grid.
//!
//! Voxels enter the filtration from the highest value down. A voxel with no
//! processed neighbour births a component; when components meet, the one
//! with the lower birth value dies at the current value (elder rule).
//! Components that never merge die at zero. Zero voxels never enter.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::Grid;
use crate::kernels::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub channel: usize,
    pub index: [usize; 3],
    pub value: f64,
    pub persistence: f64,
    /// Voxel center in world coordinates.
    pub seed: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn count_in(&self, channel: usize) -> usize {
        self.peaks.iter().filter(|p| p.channel == channel).count()
    }
}

/// A birth/death pair of the superlevel filtration of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair<T> {
    /// Flat index (within the channel) of the voxel that births the class.
    pub birth_index: usize,
    pub birth: T,
    pub death: T,
}

impl<T: Real> PersistencePair<T> {
    pub fn persistence(&self) -> T {
        self.birth - self.death
    }
}

struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect() }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }
}

/// Total order used by the filtration: higher value first, lower flat index
/// breaks ties.
pub fn filtration_order<T: Real>(values: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i] > T::zero()).collect();
    order.sort_unstable_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    order
}

/// All persistence pairs of one channel laid out as `[nx][ny][nz]`.
pub fn persistence_pairs<T: Real>(values: &[T], shape: [usize; 3]) -> Vec<PersistencePair<T>> {
    let [nx, ny, nz] = shape;
    assert_eq!(values.len(), nx * ny * nz, "values do not match shape");
    let order = filtration_order(values);
    let mut sets = DisjointSets::new(values.len());
    let mut added = vec![false; values.len()];
    // birth voxel of each root
    let birth_of: Vec<u32> = (0..values.len() as u32).collect();
    let mut pairs = Vec::new();
    let mut roots: Vec<u32> = Vec::with_capacity(26);

    for &v in &order {
        let (i, j, k) = (v / (ny * nz), (v / nz) % ny, v % nz);
        roots.clear();
        for di in -1i64..=1 {
            let ii = i as i64 + di;
            if ii < 0 || ii >= nx as i64 {
                continue;
            }
            for dj in -1i64..=1 {
                let jj = j as i64 + dj;
                if jj < 0 || jj >= ny as i64 {
                    continue;
                }
                for dk in -1i64..=1 {
                    let kk = k as i64 + dk;
                    if kk < 0 || kk >= nz as i64 || (di == 0 && dj == 0 && dk == 0) {
                        continue;
                    }
                    let w = (ii as usize * ny + jj as usize) * nz + kk as usize;
                    if added[w] {
                        let r = sets.find(w as u32);
                        if !roots.contains(&r) {
                            roots.push(r);
                        }
                    }
                }
            }
        }
        added[v] = true;
        if roots.is_empty() {
            continue;
        }
        // the elder component was born first in filtration order; every
        // root's birth voxel precedes v, so compare by (value, index)
        let elder = *roots
            .iter()
            .max_by(|&&a, &&b| {
                let (ba, bb) = (birth_of[a as usize] as usize, birth_of[b as usize] as usize);
                values[ba].partial_cmp(&values[bb]).unwrap().then(bb.cmp(&ba))
            })
            .unwrap();
        for &r in &roots {
            if r != elder {
                let b = birth_of[r as usize] as usize;
                pairs.push(PersistencePair { birth_index: b, birth: values[b], death: values[v] });
                sets.parent[r as usize] = elder;
            }
        }
        sets.parent[v] = elder;
    }

    for &v in &order {
        if sets.find(v as u32) == v as u32 {
            pairs.push(PersistencePair { birth_index: v, birth: values[v], death: T::zero() });
        }
    }
    pairs
}

/// Peaks whose persistence is at least `threshold` times the channel max.
///
/// The global maximum of every nonzero channel is always reported since its
/// class persists down to zero.
pub fn detect_peaks<T: Real>(grid: &Grid<T>, threshold: f64) -> Result<PeakSet> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(GridError::InvalidConfig(format!("persistence threshold {threshold} must lie in (0, 1)")));
    }
    let spec = grid.spec();
    let [_, ny, nz] = spec.shape;
    let mut peaks = Vec::new();
    for c in 0..spec.channels {
        let values = grid.channel(c);
        let max = grid.channel_max(c);
        if max <= T::zero() {
            continue;
        }
        let cutoff = T::from_f64(threshold) * max;
        let mut found: Vec<Peak> = persistence_pairs(values, spec.shape)
            .into_iter()
            .filter(|p| p.persistence() > T::zero() && p.persistence() >= cutoff)
            .map(|p| {
                let v = p.birth_index;
                let index = [v / (ny * nz), (v / nz) % ny, v % nz];
                Peak {
                    channel: c,
                    index,
                    value: p.birth.as_f64(),
                    persistence: p.persistence().as_f64(),
                    seed: spec.voxel_center(index).expect("index within shape"),
                }
            })
            .collect();
        found.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
        peaks.extend(found);
    }
    Ok(PeakSet { peaks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundingBox, GridSpec, Particle, ParticleSet};
    use crate::gridgen::{generate_grid, Mode};

    fn spec(n: usize, edge: f64, sigma: f64) -> GridSpec {
        GridSpec::cubic(n, 1, BoundingBox::from_extents([edge; 3]).unwrap(), sigma).unwrap()
    }

    #[test]
    fn one_particle_one_peak_in_its_voxel() {
        let s = spec(32, 16.0, 1.0);
        let pos = [7.3, 8.8, 9.1];
        let (g, _) = generate_grid(&ParticleSet::new(vec![Particle::new(0, pos)]), &s, Mode::Sparse).unwrap();
        let peaks = detect_peaks(&g, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks.peaks[0].index, s.world_to_voxel(pos).unwrap());
        assert_eq!(peaks.peaks[0].persistence, peaks.peaks[0].value);
    }

    #[test]
    fn separated_particles_each_get_a_peak() {
        let s = spec(32, 16.0, 1.0);
        let pts = [[4.2, 4.1, 4.7], [10.6, 4.4, 4.3], [4.5, 11.3, 10.9], [11.2, 11.7, 11.4]];
        let set = ParticleSet::new(pts.iter().map(|p| Particle::new(0, *p)).collect());
        let (g, _) = generate_grid(&set, &s, Mode::Sparse).unwrap();
        let peaks = detect_peaks(&g, 0.05).unwrap();
        assert_eq!(peaks.len(), 4);
        let d = s.voxel_size()[0];
        for p in &pts {
            let near = peaks.peaks.iter().any(|pk| (0..3).all(|a| (pk.seed[a] - p[a]).abs() <= d));
            assert!(near, "{p:?}");
        }
    }

    #[test]
    fn close_particles_merge_into_one_peak() {
        let s = spec(32, 16.0, 1.0);
        let set = ParticleSet::new(vec![Particle::new(0, [8.0, 8.0, 8.0]), Particle::new(0, [8.5, 8.0, 8.0])]);
        let (g, _) = generate_grid(&set, &s, Mode::Sparse).unwrap();
        assert_eq!(detect_peaks(&g, 0.05).unwrap().len(), 1);
    }

    #[test]
    fn empty_channel_has_no_peaks() {
        let g = Grid::<f32>::zeros(spec(8, 1.0, 0.1));
        assert!(detect_peaks(&g, 0.05).unwrap().is_empty());
        assert!(detect_peaks(&g, 0.0).is_err());
        assert!(detect_peaks(&g, 1.0).is_err());
    }

    #[test]
    fn plateau_ties_give_one_class() {
        let values = [1.0f64, 1.0, 1.0, 0.5, 1.0];
        let pairs = persistence_pairs(&values, [1, 1, 5]);
        let live: Vec<_> = pairs.iter().filter(|p| p.persistence() > 0.0).collect();
        assert_eq!(live.len(), 2);
        assert_eq!(live.iter().filter(|p| p.death == 0.0).count(), 1);
        assert!(live.iter().any(|p| p.birth_index == 0 && p.death == 0.0));
        assert!(live.iter().any(|p| p.birth_index == 4 && p.death == 0.5));
    }

    #[test]
    fn disconnected_components_are_all_essential() {
        let values = [0.9f64, 0.0, 0.3, 0.0, 0.6];
        let pairs = persistence_pairs(&values, [1, 1, 5]);
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.death == 0.0));
    }
}
