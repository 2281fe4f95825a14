//! Benchmark molecules: a seeded synthetic generator and an XYZ directory
//! loader.

use std::ops::RangeInclusive;
use std::path::Path;

use gaussgrid::io::{parse_xyz, ChannelPolicy, FormatError};
use gaussgrid::{Particle, ParticleSet};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::BenchError;

/// Element symbols of the synthetic corpus; the index is the channel.
pub const SYNTH_ELEMENTS: [&str; 4] = ["H", "C", "N", "O"];
const ELEMENT_WEIGHTS: [f64; 4] = [0.40, 0.45, 0.08, 0.07];

const BOND_MIN: f64 = 1.1;
const BOND_MAX: f64 = 1.55;
/// No two atoms closer than this, in bond-length units.
const MIN_SEPARATION: f64 = 1.05;
const PLACEMENT_ATTEMPTS: usize = 200;

pub const DEFAULT_ATOMS: RangeInclusive<usize> = 8..=40;

/// A set of molecules sharing one channel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub molecules: Vec<ParticleSet>,
    pub channel_names: Vec<String>,
}

impl Corpus {
    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn mean_atoms(&self) -> f64 {
        if self.molecules.is_empty() {
            return 0.0;
        }
        self.molecules.iter().map(ParticleSet::len).sum::<usize>() as f64 / self.molecules.len() as f64
    }
}

/// `n` random molecules grown atom by atom as bonded trees.
///
/// Each new atom bonds to a random existing atom at a covalent-like distance
/// and must keep clear of every other atom. Coordinates are multiplied by
/// `box_scale` and centred on the centroid.
pub fn synth_corpus(
    n: usize,
    atoms_range: RangeInclusive<usize>,
    box_scale: f64,
    seed: u64,
) -> Result<Vec<ParticleSet>, BenchError> {
    if n == 0 {
        return Err(BenchError::Config("corpus size must be at least 1".into()));
    }
    if atoms_range.is_empty() || *atoms_range.start() == 0 {
        return Err(BenchError::Config(format!("degenerate atom range {atoms_range:?}")));
    }
    if !(box_scale.is_finite() && box_scale > 0.0) {
        return Err(BenchError::Config(format!("box scale {box_scale} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements = WeightedIndex::new(ELEMENT_WEIGHTS).expect("static weights are valid");
    let molecules = (0..n)
        .map(|_| {
            let atoms = rng.gen_range(atoms_range.clone());
            grow_molecule(&mut rng, atoms, &elements, box_scale)
        })
        .collect();
    Ok(molecules)
}

fn grow_molecule(rng: &mut ChaCha8Rng, atoms: usize, elements: &WeightedIndex<f64>, scale: f64) -> ParticleSet {
    let mut pos: Vec<[f64; 3]> = vec![[0.0; 3]];
    while pos.len() < atoms {
        for _ in 0..PLACEMENT_ATTEMPTS {
            let anchor = pos[rng.gen_range(0..pos.len())];
            let r = rng.gen_range(BOND_MIN..BOND_MAX);
            let d = unit_vector(rng);
            let cand = [anchor[0] + r * d[0], anchor[1] + r * d[1], anchor[2] + r * d[2]];
            let clear = pos.iter().all(|p| {
                let d2: f64 = (0..3).map(|a| (p[a] - cand[a]).powi(2)).sum();
                d2 >= MIN_SEPARATION * MIN_SEPARATION
            });
            if clear {
                pos.push(cand);
                break;
            }
        }
    }
    let mut c = [0.0; 3];
    for p in &pos {
        for a in 0..3 {
            c[a] += p[a] / pos.len() as f64;
        }
    }
    let particles = pos
        .iter()
        .map(|p| {
            Particle::new(elements.sample(rng), [(p[0] - c[0]) * scale, (p[1] - c[1]) * scale, (p[2] - c[2]) * scale])
        })
        .collect();
    ParticleSet::new(particles)
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let n = n2.sqrt();
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Synthetic corpus with the default element channels.
pub fn synthetic(n: usize, seed: u64) -> Result<Corpus, BenchError> {
    Ok(Corpus {
        molecules: synth_corpus(n, DEFAULT_ATOMS, 1.0, seed)?,
        channel_names: SYNTH_ELEMENTS.iter().map(|s| s.to_string()).collect(),
    })
}

/// Every `*.xyz` file in `dir`, in file-name order, with one channel per
/// element found anywhere in the directory.
pub fn load_xyz_dir(dir: &Path) -> Result<Corpus, BenchError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| BenchError::Corpus(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("xyz")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(BenchError::Corpus(format!("{}: no .xyz files", dir.display())));
    }
    let files = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| BenchError::Corpus(format!("{}: {e}", p.display())))?;
            parse_xyz(&text).map_err(|e| BenchError::Corpus(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<u8> = files.iter().flat_map(|f| f.elements.iter().copied()).collect();
    order.sort_unstable();
    order.dedup();
    let mut molecules = Vec::with_capacity(files.len());
    let mut names = Vec::new();
    for (f, p) in files.iter().zip(&paths) {
        let (set, n) = f
            .to_particles_with(ChannelPolicy::Auto, &order)
            .map_err(|e: FormatError| BenchError::Corpus(format!("{}: {e}", p.display())))?;
        if f.elements.is_empty() {
            return Err(BenchError::Corpus(format!("{}: no atoms", p.display())));
        }
        molecules.push(set);
        names = n;
    }
    Ok(Corpus { molecules, channel_names: names })
}
