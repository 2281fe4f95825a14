//! Timed dense vs sparse generation over a corpus.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use gaussgrid::{
    generate_batch, generate_grid_with, splat_atom, BoundingBox, GenOptions, Grid, GridSpec, Mode, ParticleSet,
    SpecPolicy,
};
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Corpus};
use crate::BenchError;

/// Edge of the fixed cubic box, centred on the origin, that every corpus
/// molecule is gridded into.
///
/// At 64 voxels this is ~0.6 units per voxel, which puts the synthetic
/// corpus at a nonzero fraction of about 1%.
pub const DEFAULT_BOX_EDGE: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CorpusSource {
    Synthetic { molecules: usize, seed: u64 },
    XyzDir(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    /// Gaussian widths, used as the standard deviation.
    pub variances: Vec<f64>,
    pub repeats: usize,
    pub corpus: CorpusSource,
    /// Worker threads for the separate batch-throughput measurement.
    pub jobs: Option<usize>,
    /// `None` grids each molecule in its own padded bounding box.
    pub box_edge: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![16, 32, 64, 128],
            variances: vec![0.05, 0.1, 0.25, 0.5],
            repeats: 10,
            corpus: CorpusSource::Synthetic { molecules: 100, seed: 0 },
            jobs: None,
            box_edge: Some(DEFAULT_BOX_EDGE),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.sizes.is_empty() || self.variances.is_empty() {
            return bad("sizes and variances must be non-empty".into());
        }
        if let Some(s) = self.sizes.iter().find(|s| **s < 8) {
            return bad(format!("grid size {s} is below the minimum of 8"));
        }
        if let Some(v) = self.variances.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return bad(format!("variance {v} must be positive"));
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if let Some(e) = self.box_edge {
            if !(e.is_finite() && e > 0.0) {
                return bad(format!("box edge {e} must be positive"));
            }
        }
        if let CorpusSource::Synthetic { molecules: 0, .. } = self.corpus {
            return bad("corpus size must be at least 1".into());
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<Corpus, BenchError> {
        match &self.corpus {
            CorpusSource::Synthetic { molecules, seed } => corpus::synthetic(*molecules, *seed),
            CorpusSource::XyzDir(dir) => corpus::load_xyz_dir(dir),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub size: usize,
    pub variance: f64,
    pub mode: Mode,
    pub mean_time_s: f64,
    /// Molecules per second, `1 / mean_time_s`.
    pub throughput: f64,
    pub nonzero_fraction: f64,
    /// Dense mean time over this cell's mean time.
    pub speedup: f64,
    /// Batch throughput on `jobs` threads, when requested.
    pub parallel_throughput: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub molecules: usize,
    pub mean_atoms: f64,
    pub channels: usize,
    pub repeats: usize,
    pub jobs: Option<usize>,
    pub box_edge: Option<f64>,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn cell(&self, size: usize, variance: f64, mode: Mode) -> Option<&BenchCell> {
        self.cells.iter().find(|c| c.size == size && c.variance == variance && c.mode == mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let par = self.jobs.is_some();
        let _ = write!(
            out,
            "{:>5} {:>9} {:>6} {:>12} {:>12} {:>9} {:>8}",
            "size", "variance", "mode", "ms/mol", "mol/s", "nonzero%", "speedup"
        );
        if par {
            let _ = write!(out, " {:>12}", "par mol/s");
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(
                out,
                "{:>5} {:>9} {:>6} {:>12.4} {:>12.1} {:>9.3} {:>8.2}",
                c.size,
                c.variance,
                c.mode.to_string(),
                c.mean_time_s * 1e3,
                c.throughput,
                c.nonzero_fraction * 100.0,
                c.speedup
            );
            if let Some(p) = c.parallel_throughput {
                let _ = write!(out, " {p:>12.1}");
            }
            out.push('\n');
        }
        out
    }
}

/// Spec for grids of `size`³ at width `sigma` in the configured box.
pub fn spec_policy(size: usize, sigma: f64, channels: usize, box_edge: Option<f64>) -> Result<SpecPolicy, BenchError> {
    Ok(match box_edge {
        Some(edge) => {
            let bbox = BoundingBox::new([-edge / 2.0; 3], [edge; 3])?;
            SpecPolicy::Fixed(GridSpec::cubic(size, channels, bbox, sigma)?)
        }
        None => SpecPolicy::per_molecule([size; 3], channels, sigma),
    })
}

/// Mean nonzero fraction of the corpus grids, from one untimed pass.
fn warm_up(molecules: &[ParticleSet], specs: &[GridSpec], mode: Mode) -> Result<f64, BenchError> {
    let mut frac = 0.0;
    for (m, spec) in molecules.iter().zip(specs) {
        let (g, stats) = generate_grid_with::<f32>(m, spec, GenOptions::new(mode))?;
        std::hint::black_box(&g);
        frac += stats.nonzero_voxels as f64 / spec.len() as f64;
    }
    Ok(frac / molecules.len() as f64)
}

fn time_serial(
    molecules: &[ParticleSet],
    specs: &[GridSpec],
    mode: Mode,
    repeats: usize,
) -> Result<Duration, BenchError> {
    // allocation and splatting only; the nonzero count is a stats pass
    let opts = GenOptions::new(mode);
    let start = Instant::now();
    for _ in 0..repeats {
        for (m, spec) in molecules.iter().zip(specs) {
            let mut grid = Grid::<f32>::zeros(spec.clone());
            for p in &m.particles {
                splat_atom(&mut grid, p.channel, p.position, opts)?;
            }
            std::hint::black_box(grid);
        }
    }
    Ok(start.elapsed())
}

fn time_parallel(
    molecules: &[ParticleSet],
    policy: &SpecPolicy,
    mode: Mode,
    repeats: usize,
    jobs: usize,
) -> Result<Duration, BenchError> {
    let opts = GenOptions::new(mode);
    let start = Instant::now();
    for _ in 0..repeats {
        for item in generate_batch(molecules, policy, opts, jobs)? {
            std::hint::black_box(item?);
        }
    }
    Ok(start.elapsed())
}

/// Runs every (size, variance, mode) cell; dense first so speedups are
/// relative to it.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let corpus = config.load_corpus()?;
    run_on_corpus(config, &corpus)
}

/// Like [`run_benchmark`] with an already loaded corpus.
pub fn run_on_corpus(config: &BenchConfig, corpus: &Corpus) -> Result<BenchReport, BenchError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(BenchError::Corpus("corpus is empty".into()));
    }
    let n = corpus.len();
    let mut cells = Vec::new();
    for &size in &config.sizes {
        for &sigma in &config.variances {
            let policy = spec_policy(size, sigma, corpus.channels(), config.box_edge)?;
            let specs = corpus.molecules.iter().map(|m| policy.spec_for(m)).collect::<Result<Vec<_>, _>>()?;
            let mut dense_time = None;
            for mode in [Mode::Dense, Mode::Sparse] {
                let nonzero_fraction = warm_up(&corpus.molecules, &specs, mode)?;
                let elapsed = time_serial(&corpus.molecules, &specs, mode, config.repeats)?;
                let mean = elapsed.as_secs_f64() / (n * config.repeats) as f64;
                let dense = *dense_time.get_or_insert(mean);
                let parallel_throughput = match config.jobs {
                    Some(jobs) => {
                        let t = time_parallel(&corpus.molecules, &policy, mode, config.repeats, jobs)?;
                        Some((n * config.repeats) as f64 / t.as_secs_f64())
                    }
                    None => None,
                };
                log::debug!("size {size} sigma {sigma} {mode}: {:.3} ms/molecule", mean * 1e3);
                cells.push(BenchCell {
                    size,
                    variance: sigma,
                    mode,
                    mean_time_s: mean,
                    throughput: 1.0 / mean,
                    nonzero_fraction,
                    speedup: if mode == Mode::Dense { 1.0 } else { dense / mean },
                    parallel_throughput,
                });
            }
        }
    }
    Ok(BenchReport {
        molecules: n,
        mean_atoms: corpus.mean_atoms(),
        channels: corpus.channels(),
        repeats: config.repeats,
        jobs: config.jobs,
        box_edge: config.box_edge,
        cells,
    })
}
