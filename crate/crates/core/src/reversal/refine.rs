//! Grid-space mean-squared error, its analytic gradient, and the descent
//! loop that refines peak seeds into particle coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::geometry::{GridSpec, Particle, ParticleSet};
use crate::grid::Grid;
use crate::gridgen::{generate_grid_with, GenOptions, Mode};
use crate::kernels::{axis_gradient, axis_gradient_periodic, axis_table, axis_table_periodic, AxisTable, Real};

use super::peaks::PeakSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalConfig {
    /// Step size, applied to the curvature-normalized gradient.
    pub learning_rate: f64,
    /// Stop once the loss falls below `tolerance` times the mean square of
    /// the reference grid.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Minimum peak persistence as a fraction of the channel maximum.
    pub persistence_threshold: f64,
    /// Step halvings tried before a step is given up.
    pub max_backoff: usize,
}

impl Default for ReversalConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, tolerance: 1e-6, max_iters: 5000, persistence_threshold: 0.05, max_backoff: 10 }
    }
}

impl ReversalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(GridError::InvalidConfig(what.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.persistence_threshold > 0.0 && self.persistence_threshold < 1.0) {
            return bad("persistence threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Loss fell below the tolerance.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
    /// No step size within the backoff budget lowered the loss.
    Stalled,
    /// The loss or gradient became non-finite; the state is the best seen.
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReversalState {
    pub particles: Vec<Particle>,
    pub loss: f64,
    pub initial_loss: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Loss after each accepted iteration, starting with the initial loss.
    pub history: Vec<f64>,
}

fn check_particles(spec: &GridSpec, particles: &[Particle]) -> Result<()> {
    for p in particles {
        if p.channel >= spec.channels {
            return Err(GridError::SpecMismatch(format!(
                "particle channel {} but grid has {} channels",
                p.channel, spec.channels
            )));
        }
    }
    Ok(())
}

fn regenerate<T: Real>(spec: &GridSpec, particles: &[Particle]) -> Result<Grid<T>> {
    let set = ParticleSet { particles: particles.to_vec(), lattice: spec.periodic };
    Ok(generate_grid_with::<T>(&set, spec, GenOptions::new(Mode::Sparse))?.0)
}

/// Mean over all voxels of `(regenerated - reference)^2`.
pub fn loss<T: Real>(reference: &Grid<T>, particles: &[Particle]) -> Result<f64> {
    check_particles(reference.spec(), particles)?;
    let model = regenerate::<T>(reference.spec(), particles)?;
    Ok(mse(reference.data(), model.data()))
}

fn mse<T: Real>(reference: &[T], model: &[T]) -> f64 {
    let n = reference.len() as f64;
    reference
        .iter()
        .zip(model)
        .map(|(g, f)| {
            let d = f.as_f64() - g.as_f64();
            d * d
        })
        .sum::<f64>()
        / n
}

struct Evaluation {
    loss: f64,
    gradient: Vec<[f64; 3]>,
    /// Diagonal Gauss-Newton curvature per coordinate.
    curvature: Vec<[f64; 3]>,
}

fn axis_pair<T: Real>(spec: &GridSpec, mu: f64, axis: usize) -> Result<(AxisTable<T>, Vec<T>)> {
    let d = spec.voxel_size()[axis];
    let n = spec.shape[axis];
    match &spec.periodic {
        Some(cell) => Ok((
            axis_table_periodic(mu, cell.edges[axis], d, n, spec.sigma)?,
            axis_gradient_periodic(mu, cell.edges[axis], d, n, spec.sigma)?,
        )),
        None => Ok((
            axis_table(mu, spec.bbox.origin[axis], d, n, spec.sigma)?,
            axis_gradient(mu, spec.bbox.origin[axis], d, n, spec.sigma)?,
        )),
    }
}

fn evaluate<T: Real>(reference: &Grid<T>, particles: &[Particle]) -> Result<Evaluation> {
    let spec = reference.spec();
    let model = regenerate::<T>(spec, particles)?;
    let residual: Vec<f64> = model.data().iter().zip(reference.data()).map(|(f, g)| f.as_f64() - g.as_f64()).collect();
    let n = residual.len() as f64;
    let loss = residual.iter().map(|r| r * r).sum::<f64>() / n;

    let mut gradient = Vec::with_capacity(particles.len());
    let mut curvature = Vec::with_capacity(particles.len());
    for p in particles {
        let pos = match &spec.periodic {
            Some(cell) => cell.wrap(p.position),
            None => p.position,
        };
        let (tx, gx) = axis_pair::<T>(spec, pos[0], 0)?;
        let (ty, gy) = axis_pair::<T>(spec, pos[1], 1)?;
        let (tz, gz) = axis_pair::<T>(spec, pos[2], 2)?;
        let mut acc = [0.0f64; 3];
        for i in tx.support() {
            let (vx, dx) = (tx.values[i].as_f64(), gx[i].as_f64());
            for j in ty.support() {
                let (vy, dy) = (ty.values[j].as_f64(), gy[j].as_f64());
                let start = spec.flat_index(p.channel, [i, j, 0]);
                for k in tz.support() {
                    let (vz, dz) = (tz.values[k].as_f64(), gz[k].as_f64());
                    let r = residual[start + k];
                    acc[0] += r * dx * vy * vz;
                    acc[1] += r * vx * dy * vz;
                    acc[2] += r * vx * vy * dz;
                }
            }
        }
        gradient.push(acc.map(|v| 2.0 * v / n));

        let sq = |v: &[T]| v.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>();
        let (sx, sy, sz) = (sq(&tx.values), sq(&ty.values), sq(&tz.values));
        let (dsx, dsy, dsz) = (sq(&gx), sq(&gy), sq(&gz));
        curvature.push([dsx * sy * sz, sx * dsy * sz, sx * sy * dsz].map(|v| 2.0 * v / n));
    }
    Ok(Evaluation { loss, gradient, curvature })
}

/// Analytic `dL/d(x, y, z)` for every particle, summed over the support of
/// each particle's axis tables.
pub fn loss_gradient<T: Real>(reference: &Grid<T>, particles: &[Particle]) -> Result<Vec<[f64; 3]>> {
    check_particles(reference.spec(), particles)?;
    Ok(evaluate(reference, particles)?.gradient)
}

fn all_finite(e: &Evaluation) -> bool {
    e.loss.is_finite() && e.gradient.iter().all(|g| g.iter().all(|v| v.is_finite()))
}

/// Gradient descent from the peak seeds until the loss drops below the
/// tolerance or the budget runs out.
///
/// Each coordinate moves by `learning_rate * gradient / curvature`, where the
/// curvature is the particle's own diagonal Gauss-Newton term; a step that
/// does not lower the loss is halved up to `max_backoff` times.
pub fn refine_coords<T: Real>(reference: &Grid<T>, seeds: &PeakSet, config: &ReversalConfig) -> Result<ReversalState> {
    config.validate()?;
    if seeds.is_empty() {
        return Err(GridError::NoSeeds);
    }
    let particles: Vec<Particle> = seeds.peaks.iter().map(|p| Particle::new(p.channel, p.seed)).collect();
    check_particles(reference.spec(), &particles)?;
    let reference = reference.cast::<f64>();
    refine_from(&reference, particles, config)
}

pub(crate) fn refine_from(
    reference: &Grid<f64>,
    mut particles: Vec<Particle>,
    config: &ReversalConfig,
) -> Result<ReversalState> {
    let spec = reference.spec().clone();
    let scale = mse(reference.data(), &vec![0.0f64; reference.data().len()]);
    let target = config.tolerance * if scale > 0.0 { scale } else { 1.0 };

    let mut current = evaluate(reference, &particles)?;
    let initial_loss = current.loss;
    let mut history = vec![current.loss];
    if !all_finite(&current) {
        return Ok(ReversalState {
            particles,
            loss: current.loss,
            initial_loss,
            iterations: 0,
            termination: Termination::Diverged,
            history,
        });
    }

    let mut iterations = 0;
    let termination = loop {
        if current.loss < target {
            break Termination::Converged;
        }
        if iterations >= config.max_iters {
            break Termination::MaxIters;
        }
        let mut step = config.learning_rate;
        let mut accepted = None;
        let mut saw_nonfinite = false;
        for _ in 0..=config.max_backoff {
            let candidate: Vec<Particle> = particles
                .iter()
                .zip(current.gradient.iter().zip(&current.curvature))
                .map(|(p, (g, c))| {
                    let mut pos = p.position;
                    for a in 0..3 {
                        if c[a] > 0.0 {
                            pos[a] -= step * g[a] / c[a];
                        }
                    }
                    if let Some(cell) = &spec.periodic {
                        pos = cell.wrap(pos);
                    }
                    Particle::new(p.channel, pos)
                })
                .collect();
            let eval = evaluate(reference, &candidate)?;
            if !all_finite(&eval) {
                saw_nonfinite = true;
            } else if eval.loss < current.loss {
                accepted = Some((candidate, eval));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((p, e)) => {
                particles = p;
                current = e;
                iterations += 1;
                history.push(current.loss);
            }
            None if saw_nonfinite => break Termination::Diverged,
            None => break Termination::Stalled,
        }
    };

    Ok(ReversalState { particles, loss: current.loss, initial_loss, iterations, termination, history })
}
