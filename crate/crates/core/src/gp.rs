//! Gaussian-process regression with a squared-exponential kernel,
//! per-observation (heteroscedastic) noise, and staleness-discounted
//! variance inflation.
//!
//! Observations carry a staleness counter `n_d`: each time the short-term
//! loop finds a better parameter set, every long-term observation recorded
//! under the old one becomes less trustworthy, and its noise variance is
//! inflated to `base / lambda_d^n_d`. The discount only touches the
//! covariance diagonal of the training set.
//!
//! Note on the kernel sign: the exponent is negative,
//! `K(x1,x2) = amplitude * exp(-1/2 (x1-x2)^T L (x1-x2))`, the standard
//! squared-exponential form. A positive exponent is unbounded and not a
//! valid covariance.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::ParamVector;

/// Default length scale per normalized dimension.
pub const DEFAULT_LENGTH_SCALE: f64 = 0.2;
/// Default staleness discount factor.
pub const DEFAULT_LAMBDA_D: f64 = 0.8;
/// Relative jitter (fraction of the kernel amplitude) added to the
/// covariance diagonal before factorization.
pub const DEFAULT_JITTER_REL: f64 = 1e-8;

/// Squared-exponential kernel hyperparameters. `length_scales[k]` is the
/// length scale of dimension `k`; the precision matrix L is diagonal with
/// `L_kk = 1 / length_scales[k]^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub amplitude: f64,
    pub length_scales: Vec<f64>,
}

impl KernelParams {
    pub fn new(amplitude: f64, length_scales: Vec<f64>) -> Result<Self> {
        if amplitude <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "kernel amplitude must be > 0, got {amplitude}"
            )));
        }
        if length_scales.is_empty() || length_scales.iter().any(|l| *l <= 0.0) {
            return Err(Error::InvalidArgument(
                "length scales must be non-empty and positive".into(),
            ));
        }
        Ok(Self {
            amplitude,
            length_scales,
        })
    }

    pub fn isotropic(dim: usize, amplitude: f64, length_scale: f64) -> Result<Self> {
        Self::new(amplitude, vec![length_scale; dim])
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }
}

/// Squared-exponential kernel value between two unit-cube points.
pub fn kernel_se(x1: &ParamVector, x2: &ParamVector, k: &KernelParams) -> Result<f64> {
    if x1.dim() != x2.dim() || x1.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: if x1.dim() != k.dim() {
                x1.dim()
            } else {
                x2.dim()
            },
        });
    }
    let mut q = 0.0;
    for i in 0..x1.dim() {
        let d = (x1[i] - x2[i]) / k.length_scales[i];
        q += d * d;
    }
    Ok(k.amplitude * (-0.5 * q).exp())
}

/// One recorded objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Unit-cube coordinates of the evaluated point.
    pub theta: ParamVector,
    /// Observed objective value.
    pub value: f64,
    /// Noise variance at recording time.
    pub base_noise_var: f64,
    /// Number of short-term-best changes since this value was observed.
    pub staleness: u32,
}

impl Observation {
    pub fn new(theta: ParamVector, value: f64, base_noise_var: f64) -> Self {
        Self {
            theta,
            value,
            base_noise_var,
            staleness: 0,
        }
    }

    /// Noise variance after the staleness discount: `base / lambda_d^n_d`.
    pub fn effective_noise_var(&self, lambda_d: f64) -> f64 {
        self.base_noise_var / lambda_d.powi(self.staleness as i32)
    }
}

/// Increment every observation's staleness counter by one.
pub fn mark_stale(obs: &mut [Observation]) {
    for o in obs {
        o.staleness += 1;
    }
}

/// A fitted Gaussian process: kernel, prior mean, training set, and the
/// Cholesky factor of the training covariance. Immutable after `fit`;
/// posterior queries are safe to run concurrently.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelParams,
    prior_mean: f64,
    lambda_d: f64,
    jitter_used: f64,
    obs: Vec<Observation>,
    chol: Cholesky<f64, Dyn>,
    /// Sigma^{-1} (y - prior_mean), precomputed.
    alpha: DVector<f64>,
}

impl GpModel {
    /// Fit the GP: build `Sigma = K + diag(noise) + jitter*I` and factorize.
    /// On factorization failure the jitter is escalated by decades, up to
    /// three, before giving up.
    pub fn fit(
        obs: &[Observation],
        kernel: KernelParams,
        prior_mean: f64,
        lambda_d: f64,
        jitter: f64,
    ) -> Result<GpModel> {
        if obs.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit a GP on zero observations".into(),
            ));
        }
        if jitter <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "jitter must be > 0, got {jitter}"
            )));
        }
        if !(lambda_d > 0.0 && lambda_d <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda_d must be in (0, 1], got {lambda_d}"
            )));
        }
        let n = obs.len();
        for o in obs {
            if o.theta.dim() != kernel.dim() {
                return Err(Error::DimensionMismatch {
                    expected: kernel.dim(),
                    got: o.theta.dim(),
                });
            }
            if o.base_noise_var < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "negative noise variance {}",
                    o.base_noise_var
                )));
            }
        }

        let mut base = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel_se(&obs[i].theta, &obs[j].theta, &kernel)?;
                base[(i, j)] = v;
                base[(j, i)] = v;
            }
            base[(i, i)] += obs[i].effective_noise_var(lambda_d);
        }

        let mut last_jitter = jitter;
        for escalation in 0..=3 {
            let j = jitter * 10f64.powi(escalation);
            last_jitter = j;
            let mut sigma = base.clone();
            for i in 0..n {
                sigma[(i, i)] += j;
            }
            if let Some(chol) = Cholesky::new(sigma) {
                let y = DVector::from_iterator(n, obs.iter().map(|o| o.value - prior_mean));
                let alpha = chol.solve(&y);
                return Ok(GpModel {
                    kernel,
                    prior_mean,
                    lambda_d,
                    jitter_used: j,
                    obs: obs.to_vec(),
                    chol,
                    alpha,
                });
            }
        }
        let diag: Vec<f64> = (0..n).map(|i| base[(i, i)]).collect();
        Err(Error::Factorization {
            jitter: last_jitter,
            diag_min: diag.iter().cloned().fold(f64::INFINITY, f64::min),
            diag_max: diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Posterior mean and variance at a unit-cube query point. The variance
    /// is clamped at zero from below and never exceeds the amplitude.
    pub fn posterior(&self, theta: &ParamVector) -> Result<(f64, f64)> {
        if theta.dim() != self.kernel.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.kernel.dim(),
                got: theta.dim(),
            });
        }
        let n = self.obs.len();
        let mut k_star = DVector::zeros(n);
        for i in 0..n {
            k_star[i] = kernel_se(theta, &self.obs[i].theta, &self.kernel)?;
        }
        let mean = k_star.dot(&self.alpha) + self.prior_mean;
        let v = self.chol.solve(&k_star);
        let var = (self.kernel.amplitude - k_star.dot(&v)).max(0.0);
        Ok((mean, var))
    }

    /// Gaussian log evidence of the training values under the prior.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.obs.len() as f64;
        let y = DVector::from_iterator(
            self.obs.len(),
            self.obs.iter().map(|o| o.value - self.prior_mean),
        );
        let quad = y.dot(&self.alpha);
        let log_det: f64 = (0..self.obs.len())
            .map(|i| self.chol.l_dirty()[(i, i)].ln())
            .sum::<f64>()
            * 2.0;
        -0.5 * quad - 0.5 * log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn lambda_d(&self) -> f64 {
        self.lambda_d
    }

    /// Jitter actually used (after any escalation).
    pub fn jitter(&self) -> f64 {
        self.jitter_used
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    /// Lower-triangular Cholesky factor of the training covariance.
    pub fn factor_l(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Default kernel for a training set: amplitude = sample variance of the
/// observed values (floored to stay positive), isotropic length scale 0.2.
pub fn default_kernel(dim: usize, obs: &[Observation]) -> KernelParams {
    let amplitude = value_variance(obs).max(1e-6);
    KernelParams::isotropic(dim, amplitude, DEFAULT_LENGTH_SCALE)
        .expect("default kernel parameters are valid")
}

/// Running mean of observed values; used as the constant prior mean.
pub fn value_mean(obs: &[Observation]) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    obs.iter().map(|o| o.value).sum::<f64>() / obs.len() as f64
}

fn value_variance(obs: &[Observation]) -> f64 {
    if obs.len() < 2 {
        return 1.0;
    }
    let m = value_mean(obs);
    obs.iter().map(|o| (o.value - m).powi(2)).sum::<f64>() / (obs.len() - 1) as f64
}

/// Deterministic hyperparameter selection: coordinate-wise search over a
/// 7-point log grid per dimension (amplitude first, then each length
/// scale), keeping whichever setting maximizes the log marginal likelihood.
pub fn select_hyperparams(
    obs: &[Observation],
    start: &KernelParams,
    prior_mean: f64,
    lambda_d: f64,
    jitter_rel: f64,
) -> KernelParams {
    const GRID: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.5, 4.0];

    let score = |k: &KernelParams| -> f64 {
        match GpModel::fit(obs, k.clone(), prior_mean, lambda_d, jitter_rel * k.amplitude) {
            Ok(m) => m.log_marginal_likelihood(),
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut best = start.clone();
    let mut best_score = score(&best);

    let amp0 = best.amplitude;
    for g in GRID {
        let cand = KernelParams {
            amplitude: amp0 * g,
            ..best.clone()
        };
        let s = score(&cand);
        if s > best_score {
            best_score = s;
            best = cand;
        }
    }
    for k in 0..best.dim() {
        let ls0 = best.length_scales[k];
        for g in GRID {
            let mut cand = best.clone();
            cand.length_scales[k] = (ls0 * g).clamp(0.02, 5.0);
            let s = score(&cand);
            if s > best_score {
                best_score = s;
                best = cand;
            }
        }
    }
    best
}
