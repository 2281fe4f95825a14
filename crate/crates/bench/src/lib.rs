//! Dense vs sparse grid generation throughput on a molecule corpus.

pub mod corpus;
pub mod harness;

use thiserror::Error;

pub use corpus::{load_xyz_dir, synth_corpus, synthetic, Corpus};
pub use harness::{run_benchmark, run_on_corpus, BenchCell, BenchConfig, BenchReport, CorpusSource, DEFAULT_BOX_EDGE};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark config: {0}")]
    Config(String),
    #[error("corpus: {0}")]
    Corpus(String),
    #[error(transparent)]
    Grid(#[from] gaussgrid::GridError),
}
