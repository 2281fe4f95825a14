use thiserror::Error;

pub type Result<T, E = GridError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("bounding box is degenerate along axis {axis} (extent {extent})")]
    DegenerateBox { axis: usize, extent: f64 },

    #[error("voxel index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange { index: [usize; 3], shape: [usize; 3] },

    #[error("channel {channel} out of range (grid has {channels} channels)")]
    ChannelOutOfRange { channel: usize, channels: usize },

    #[error("particle position {0:?} is not finite")]
    NonFinitePosition([f64; 3]),

    #[error("sigma {sigma} too large for periodic edge {edge}: need sigma < edge / 6")]
    SigmaTooLargeForCell { sigma: f64, edge: f64 },

    #[error("particle set lattice does not match the grid spec")]
    LatticeMismatch,

    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { len: usize, shape: [usize; 4] },

    #[error("invalid reversal config: {0}")]
    InvalidConfig(String),

    #[error("no seed coordinates to refine")]
    NoSeeds,
}
