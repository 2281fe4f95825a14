use crate::error::{GridError, Result};
use crate::geometry::GridSpec;
use crate::kernels::Real;

/// Dense channel-major voxel tensor `[channels][nx][ny][nz]`, contiguous
/// along z.
///
/// Production grids are `f32`; `f64` grids exist for gradient checks and for
/// the internal refinement loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T = f32> {
    spec: GridSpec,
    data: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn zeros(spec: GridSpec) -> Self {
        let data = vec![T::zero(); spec.len()];
        Self { spec, data }
    }

    pub fn from_data(spec: GridSpec, data: Vec<T>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(GridError::DataLength { len: data.len(), shape: Self::shape_of(&spec) });
        }
        Ok(Self { spec, data })
    }

    fn shape_of(spec: &GridSpec) -> [usize; 4] {
        [spec.channels, spec.shape[0], spec.shape[1], spec.shape[2]]
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// `(channels, nx, ny, nz)`.
    pub fn shape(&self) -> [usize; 4] {
        Self::shape_of(&self.spec)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, channel: usize, index: [usize; 3]) -> T {
        self.data[self.spec.flat_index(channel, index)]
    }

    pub fn channel(&self, channel: usize) -> &[T] {
        let n = self.spec.voxels_per_channel();
        &self.data[channel * n..(channel + 1) * n]
    }

    /// Sum of every voxel, accumulated in f64.
    pub fn sum(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64()).sum()
    }

    pub fn channel_sums(&self) -> Vec<f64> {
        (0..self.spec.channels).map(|c| self.channel(c).iter().map(|v| v.as_f64()).sum()).collect()
    }

    pub fn channel_max(&self, channel: usize) -> T {
        self.channel(channel).iter().copied().fold(T::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|v| **v != T::zero()).count()
    }

    /// Element-wise precision conversion.
    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid { spec: self.spec.clone(), data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect() }
    }

    /// Same data under a different spec of identical shape.
    pub fn with_spec(self, spec: GridSpec) -> Result<Self> {
        Self::from_data(spec, self.data)
    }
}
