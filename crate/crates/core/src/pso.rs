//! Particle-swarm minimization for cheap, high-frequency objectives.
//!
//! The swarm stores only current positions, velocities, and bests, so its
//! memory footprint does not grow with iteration count. Under noisy
//! evaluators a best keeps the first value observed at its position; the
//! recorded best never regresses.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{denormalize, ParamSpace, ParamVector};

/// Velocity clamp per normalized dimension.
const VELOCITY_CLAMP: f64 = 1.0;

/// Swarm hyperparameters: inertia plus personal/global attraction weights.
/// Defaults are the standard constriction values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoHyper {
    pub inertia: f64,
    pub weight_personal: f64,
    pub weight_global: f64,
}

impl Default for PsoHyper {
    fn default() -> Self {
        Self {
            inertia: 0.7298,
            weight_personal: 1.49618,
            weight_global: 1.49618,
        }
    }
}

/// Default swarm size.
pub const DEFAULT_SWARM_SIZE: usize = 20;

#[derive(Debug, Clone)]
struct Particle {
    /// Unit-cube position.
    position: Vec<f64>,
    velocity: Vec<f64>,
    best_position: Vec<f64>,
    best_value: Option<f64>,
}

/// One particle evaluation, for the optional per-step trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub particle: usize,
    /// Evaluated point in original units.
    pub theta: Vec<f64>,
    pub value: f64,
    pub global_best: f64,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    space: ParamSpace,
    particles: Vec<Particle>,
    hyper: PsoHyper,
    global_best: Option<(Vec<f64>, f64)>,
    iteration: usize,
    evaluations: usize,
    /// Fan particle evaluations out to the rayon pool. Results are reduced
    /// in particle order either way, so this changes wall-clock only.
    pub parallel: bool,
}

impl Swarm {
    /// Random initialization: positions uniform in the unit cube,
    /// velocities uniform in [-0.5, 0.5] per dimension. Bests stay unset
    /// until the first step evaluates.
    pub fn init(
        space: &ParamSpace,
        n_particles: usize,
        hyper: PsoHyper,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self> {
        if n_particles < 2 {
            return Err(Error::SwarmTooSmall(n_particles));
        }
        let d = space.dim();
        let particles = (0..n_particles)
            .map(|_| {
                let position: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=1.0)).collect();
                let velocity: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..=0.5)).collect();
                Particle {
                    best_position: position.clone(),
                    position,
                    velocity,
                    best_value: None,
                }
            })
            .collect();
        Ok(Self {
            space: space.clone(),
            particles,
            hyper,
            global_best: None,
            iteration: 0,
            evaluations: 0,
            parallel: false,
        })
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Total objective evaluations performed so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn n_particles(&self) -> usize {
        self.particles.len()
    }

    /// Number of stored floats; constant across steps.
    pub fn state_size(&self) -> usize {
        let d = self.space.dim();
        self.particles.len() * 3 * d + self.global_best.as_ref().map_or(0, |_| d + 1)
    }

    /// Global best in original units with its recorded value.
    pub fn best(&self) -> Result<(ParamVector, f64)> {
        let (pos, value) = self.global_best.as_ref().ok_or(Error::SwarmNotEvaluated)?;
        let theta = denormalize(&ParamVector::new(pos.clone()), &self.space)?.value;
        Ok((theta, *value))
    }

    /// Advance the swarm one iteration.
    ///
    /// The first call only evaluates the initial positions and fills in the
    /// bests. Later calls update velocities with fresh per-particle,
    /// per-dimension uniform draws, move (clamped to the cube), evaluate
    /// the new positions, and update personal/global bests. A particle
    /// whose evaluation fails keeps its previous state; the step continues.
    pub fn step<F>(&mut self, evaluator: F, rng: &mut ChaCha12Rng) -> Result<Vec<TraceRow>>
    where
        F: Fn(&ParamVector) -> Result<f64> + Sync,
    {
        let d = self.space.dim();
        let first_round = self.global_best.is_none();

        // Snapshot previous states, then move. Randomness is drawn
        // sequentially in particle order so worker count cannot affect it.
        let prev: Vec<(Vec<f64>, Vec<f64>)> = self
            .particles
            .iter()
            .map(|p| (p.position.clone(), p.velocity.clone()))
            .collect();

        if !first_round {
            let global = self.global_best.as_ref().expect("bests populated").0.clone();
            for p in self.particles.iter_mut() {
                for k in 0..d {
                    let phi_x: f64 = rng.random_range(0.0..=1.0);
                    let phi_g: f64 = rng.random_range(0.0..=1.0);
                    let v = self.hyper.inertia * p.velocity[k]
                        + phi_x * self.hyper.weight_personal * (p.best_position[k] - p.position[k])
                        + phi_g * self.hyper.weight_global * (global[k] - p.position[k]);
                    p.velocity[k] = v.clamp(-VELOCITY_CLAMP, VELOCITY_CLAMP);
                }
                for k in 0..d {
                    p.position[k] = (p.position[k] + p.velocity[k]).clamp(0.0, 1.0);
                }
            }
        }

        // Evaluate all positions (original units).
        let thetas: Vec<ParamVector> = self
            .particles
            .iter()
            .map(|p| {
                denormalize(&ParamVector::new(p.position.clone()), &self.space)
                    .expect("positions stay in the cube")
                    .value
            })
            .collect();
        let results: Vec<Result<f64>> = if self.parallel {
            thetas.par_iter().map(&evaluator).collect()
        } else {
            thetas.iter().map(&evaluator).collect()
        };

        // Reduce in particle order.
        let mut trace = Vec::with_capacity(self.particles.len());
        for (i, result) in results.into_iter().enumerate() {
            match result {
                Ok(value) => {
                    self.evaluations += 1;
                    let p = &mut self.particles[i];
                    if p.best_value.map_or(true, |b| value < b) {
                        p.best_value = Some(value);
                        p.best_position = p.position.clone();
                    }
                    if self.global_best.as_ref().map_or(true, |(_, b)| value < *b) {
                        self.global_best = Some((p.position.clone(), value));
                    }
                    trace.push(TraceRow {
                        iteration: self.iteration,
                        particle: i,
                        theta: thetas[i].values.clone(),
                        value,
                        global_best: self.global_best.as_ref().expect("just set").1,
                    });
                }
                Err(_) => {
                    let p = &mut self.particles[i];
                    p.position = prev[i].0.clone();
                    p.velocity = prev[i].1.clone();
                }
            }
        }
        self.iteration += 1;
        Ok(trace)
    }
}
