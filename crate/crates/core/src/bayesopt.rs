//! Sequential model-based minimization: a GP surrogate plus Expected
//! Improvement, with a multi-start random + coordinate golden-section
//! inner optimizer for the acquisition.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::gp::{self, GpModel, KernelParams, Observation};
use crate::space::{denormalize, normalize, ParamSpace, ParamVector};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF via the complementary error function.
fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected improvement below the incumbent `f_plus` for a Gaussian
/// posterior `N(mu, sigma^2)`:
///
///   EI = (f_plus - mu) * Phi(z) + sigma * phi(z),  z = (f_plus - mu) / sigma
///
/// With `sigma = 0` this degenerates to `max(f_plus - mu, 0)`.
pub fn expected_improvement(mu: f64, sigma: f64, f_plus: f64) -> f64 {
    debug_assert!(sigma >= 0.0);
    if sigma <= 0.0 {
        return (f_plus - mu).max(0.0);
    }
    let z = (f_plus - mu) / sigma;
    ((f_plus - mu) * norm_cdf(z) + sigma * norm_pdf(z)).max(0.0)
}

/// Tuning knobs for the long-term optimizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoConfig {
    /// Raw random candidates per proposal.
    pub budget: usize,
    /// Staleness discount factor.
    pub lambda_d: f64,
    /// Jitter as a fraction of the kernel amplitude.
    pub jitter_rel: f64,
    /// Noise-variance floor applied to incoming observations.
    pub noise_floor: f64,
    /// Run the hyperparameter grid search every this many observations.
    pub refit_every: usize,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            budget: 128,
            lambda_d: gp::DEFAULT_LAMBDA_D,
            jitter_rel: gp::DEFAULT_JITTER_REL,
            noise_floor: 1e-4,
            refit_every: 10,
        }
    }
}

/// A proposal from the acquisition maximizer.
#[derive(Debug, Clone)]
pub struct Proposal {
    /// Proposed point in original units.
    pub theta: ParamVector,
    /// Same point in unit-cube coordinates.
    pub theta_unit: ParamVector,
    /// EI value at the proposal (0 on exploration fallback).
    pub ei: f64,
    /// Set when every candidate had zero EI (or no model exists yet) and a
    /// uniform random point was returned instead.
    pub exploration_fallback: bool,
}

/// One completed optimization step, for run logs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub theta: Vec<f64>,
    pub ei: f64,
    pub value: f64,
    pub incumbent: f64,
}

/// Optimizer state: history, fitted surrogate, and incumbent.
#[derive(Debug, Clone)]
pub struct BoState {
    space: ParamSpace,
    cfg: BoConfig,
    history: Vec<Observation>,
    model: Option<GpModel>,
    tuned_kernel: Option<KernelParams>,
    incumbent_idx: Option<usize>,
    steps: usize,
}

impl BoState {
    pub fn new(space: ParamSpace, cfg: BoConfig) -> Self {
        Self {
            space,
            cfg,
            history: Vec::new(),
            model: None,
            tuned_kernel: None,
            incumbent_idx: None,
            steps: 0,
        }
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    /// Replace the search space (used by staged refinement when bounds
    /// contract between iterations). History stays in original units
    /// conceptually, so stored unit-cube coordinates are remapped.
    pub fn set_space(&mut self, space: ParamSpace) -> Result<()> {
        for o in &mut self.history {
            let orig = denormalize(&o.theta, &self.space)?.value;
            let clamped = space.clamp(&orig);
            o.theta = normalize(&clamped, &space)?;
        }
        self.space = space;
        if !self.history.is_empty() {
            self.refit()?;
        }
        Ok(())
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    pub fn model(&self) -> Option<&GpModel> {
        self.model.as_ref()
    }

    /// Incumbent value `f+ = min` over history, with its location in
    /// original units. Ties resolve to the earliest observation.
    pub fn incumbent(&self) -> Option<(ParamVector, f64)> {
        self.incumbent_idx.map(|i| {
            let o = &self.history[i];
            let theta = denormalize(&o.theta, &self.space)
                .expect("stored thetas match the space")
                .value;
            (theta, o.value)
        })
    }

    /// Record an evaluation at `theta` (original units) and refit.
    pub fn observe(&mut self, theta: &ParamVector, value: f64, noise_var: f64) -> Result<()> {
        let unit = normalize(&self.space.clamp(theta), &self.space)?;
        self.history.push(Observation::new(
            unit,
            value,
            noise_var.max(self.cfg.noise_floor),
        ));
        let idx = self.history.len() - 1;
        match self.incumbent_idx {
            Some(best) if self.history[best].value <= value => {}
            _ => self.incumbent_idx = Some(idx),
        }
        self.refit()
    }

    /// Bump every observation's staleness counter and refit.
    pub fn mark_all_stale(&mut self) -> Result<()> {
        gp::mark_stale(&mut self.history);
        if self.history.is_empty() {
            return Ok(());
        }
        self.refit()
    }

    fn refit(&mut self) -> Result<()> {
        let prior_mean = gp::value_mean(&self.history);
        let default = gp::default_kernel(self.space.dim(), &self.history);
        if self.history.len() >= 2 && self.history.len() % self.cfg.refit_every == 0 {
            let start = self.tuned_kernel.clone().unwrap_or_else(|| default.clone());
            self.tuned_kernel = Some(gp::select_hyperparams(
                &self.history,
                &start,
                prior_mean,
                self.cfg.lambda_d,
                self.cfg.jitter_rel,
            ));
        }
        let kernel = self.tuned_kernel.clone().unwrap_or(default);
        let jitter = self.cfg.jitter_rel * kernel.amplitude;
        self.model = Some(GpModel::fit(
            &self.history,
            kernel,
            prior_mean,
            self.cfg.lambda_d,
            jitter,
        )?);
        Ok(())
    }

    /// Maximize EI over the space: `budget` uniform candidates, the best of
    /// which is refined by at most 50 coordinate-wise golden-section line
    /// searches. Falls back to a uniform random point when every candidate
    /// has zero EI (fully exploited model) or no model exists yet.
    pub fn propose_next(&self, budget: usize, rng: &mut ChaCha12Rng) -> Proposal {
        let d = self.space.dim();
        let uniform = |rng: &mut ChaCha12Rng| {
            ParamVector::new((0..d).map(|_| rng.random_range(0.0..=1.0)).collect())
        };

        let (model, f_plus) = match (self.model.as_ref(), self.incumbent_idx) {
            (Some(m), Some(i)) => (m, self.history[i].value),
            _ => {
                let u = uniform(rng);
                let theta = denormalize(&u, &self.space).expect("unit point").value;
                return Proposal {
                    theta,
                    theta_unit: u,
                    ei: 0.0,
                    exploration_fallback: true,
                };
            }
        };

        let ei_at = |u: &ParamVector| -> f64 {
            let (mu, var) = model.posterior(u).expect("dimensions match");
            expected_improvement(mu, var.sqrt(), f_plus)
        };

        let mut best_u = uniform(rng);
        let mut best_ei = ei_at(&best_u);
        for _ in 1..budget.max(1) {
            let u = uniform(rng);
            let ei = ei_at(&u);
            if ei > best_ei {
                best_ei = ei;
                best_u = u;
            }
        }

        // Coordinate golden-section refinement, keeping the best point seen.
        let mut improved_since_sweep_start = true;
        let mut iter = 0;
        while iter < 50 {
            if iter % d == 0 {
                if !improved_since_sweep_start && iter > 0 {
                    break;
                }
                improved_since_sweep_start = false;
            }
            let k = iter % d;
            let (x, ei) = golden_max(
                |v| {
                    let mut u = best_u.clone();
                    u.values[k] = v;
                    ei_at(&u)
                },
                0.0,
                1.0,
                24,
            );
            if ei > best_ei {
                best_ei = ei;
                best_u.values[k] = x;
                improved_since_sweep_start = true;
            }
            iter += 1;
        }

        if best_ei <= 0.0 {
            let u = uniform(rng);
            let theta = denormalize(&u, &self.space).expect("unit point").value;
            return Proposal {
                theta,
                theta_unit: u,
                ei: 0.0,
                exploration_fallback: true,
            };
        }

        let theta = denormalize(&best_u, &self.space).expect("unit point").value;
        Proposal {
            theta,
            theta_unit: best_u,
            ei: best_ei,
            exploration_fallback: false,
        }
    }

    /// One optimization step: propose, evaluate, record, refit. The
    /// evaluator returns `(value, noise_var)` and receives the proposal in
    /// original units. On evaluator failure the state is left untouched and
    /// the rejected point is carried in the error.
    pub fn bo_step<F>(
        &mut self,
        mut evaluator: F,
        budget: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<StepRecord>
    where
        F: FnMut(&ParamVector) -> Result<(f64, f64)>,
    {
        let proposal = self.propose_next(budget, rng);
        let (value, noise_var) = match evaluator(&proposal.theta) {
            Ok(v) => v,
            Err(e) => {
                return Err(Error::LongEvalFailed {
                    theta: proposal.theta.values.clone(),
                    message: e.to_string(),
                })
            }
        };
        self.observe(&proposal.theta, value, noise_var)?;
        self.steps += 1;
        let incumbent = self.incumbent().expect("non-empty history").1;
        Ok(StepRecord {
            step: self.steps,
            theta: proposal.theta.values.clone(),
            ei: proposal.ei,
            value,
            incumbent,
        })
    }
}

/// Golden-section search for the maximum of `f` on `[lo, hi]`, tracking the
/// best point actually evaluated (the function need not be unimodal; the
/// returned value is never worse than any probe). The interval endpoints
/// are probed too: acquisition maxima often sit on the domain boundary,
/// which interior-only probes can never reach.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}
