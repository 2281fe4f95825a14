//! File formats: XYZ and `(channel, x, y, z)` CSV input, NPY grid output,
//! and the generation stats JSON.

pub mod elements;
pub mod npy;
pub mod points_csv;
pub mod stats;
pub mod xyz;

use thiserror::Error;

use crate::error::GridError;

pub use npy::{read_npy, read_npy_from, write_npy, write_npy_to, NpyTensor};
pub use points_csv::{parse_points_csv, write_points_csv};
pub use stats::StatsReport;
pub use xyz::{parse_xyz, MoleculeFile};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: header declares {expected} atoms but {found} rows were found")]
    CountMismatch { line: usize, expected: usize, found: usize },

    #[error("line {line}: unknown element symbol '{symbol}'")]
    UnknownElement { line: usize, symbol: String },

    #[error("npy: {0}")]
    Npy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Grid(#[from] GridError),
}

/// How element types or CSV channel ids become grid channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelPolicy {
    /// One channel per distinct element (sorted by atomic number), or the
    /// CSV channel ids as given.
    #[default]
    Auto,
    /// Like `Auto`, but the grid has exactly this many channels.
    Fixed(usize),
    /// Everything in channel 0.
    Single,
}

impl std::str::FromStr for ChannelPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ChannelPolicy::Auto),
            "single" => Ok(ChannelPolicy::Single),
            n => match n.parse::<usize>() {
                Ok(k) if k > 0 => Ok(ChannelPolicy::Fixed(k)),
                _ => Err(format!("invalid channel policy '{s}' (expected auto, single or a positive count)")),
            },
        }
    }
}
