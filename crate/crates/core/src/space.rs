//! Bounded parameter domains and points within them.
//!
//! Optimizers in this crate work internally in the unit cube; objective
//! evaluators receive points mapped back to original units. The mapping
//! lives here, together with the boundary-contraction step used by the
//! staged refinement phase and replication-averaged noisy evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in parameter space. Units depend on context: original units when
/// handed to objectives, unit-cube coordinates inside the optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// A bounded box domain with named dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ParamSpace {
    /// Build a space, validating `lower[k] < upper[k]` and `d >= 1`.
    pub fn new(names: Vec<String>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidSpace("dimension must be >= 1".into()));
        }
        if names.len() != lower.len() || names.len() != upper.len() {
            return Err(Error::InvalidSpace(format!(
                "names/lower/upper lengths disagree: {}/{}/{}",
                names.len(),
                lower.len(),
                upper.len()
            )));
        }
        for k in 0..names.len() {
            if !(lower[k] < upper[k]) {
                return Err(Error::InvalidSpace(format!(
                    "dimension {} ({}): lower {} must be < upper {}",
                    k, names[k], lower[k], upper[k]
                )));
            }
        }
        Ok(Self {
            names,
            lower,
            upper,
        })
    }

    /// Unnamed space with dimensions labelled `x0..x{d-1}`.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let names = (0..bounds.len()).map(|k| format!("x{k}")).collect();
        Self::new(
            names,
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, theta: &ParamVector) -> bool {
        theta.dim() == self.dim()
            && theta
                .values
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Midpoint of every dimension, in original units.
    pub fn midpoint(&self) -> ParamVector {
        ParamVector::new(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }

    /// Clamp a point (original units) into the box componentwise.
    pub fn clamp(&self, theta: &ParamVector) -> ParamVector {
        ParamVector::new(
            theta
                .values
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
        )
    }

    /// Concatenate two spaces (used by single-optimizer baselines that
    /// search the full parameter list at once).
    pub fn concat(&self, other: &ParamSpace) -> Result<ParamSpace> {
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        ParamSpace::new(names, lower, upper)
    }
}

/// Result of mapping a unit-cube point to original units. `clamped` flags
/// inputs that fell outside `[0,1]` and were pulled back in.
#[derive(Debug, Clone, PartialEq)]
pub struct Denormalized {
    pub value: ParamVector,
    pub clamped: bool,
}

/// Map a point in original units to the unit cube.
pub fn normalize(theta: &ParamVector, space: &ParamSpace) -> Result<ParamVector> {
    if theta.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: theta.dim(),
        });
    }
    Ok(ParamVector::new(
        theta
            .values
            .iter()
            .zip(space.lower.iter().zip(&space.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect(),
    ))
}

/// Map a unit-cube point back to original units. Out-of-cube coordinates are
/// clamped to `[0,1]` first and the result is flagged.
pub fn denormalize(u: &ParamVector, space: &ParamSpace) -> Result<Denormalized> {
    if u.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: u.dim(),
        });
    }
    let mut clamped = false;
    let values = u
        .values
        .iter()
        .zip(space.lower.iter().zip(&space.upper))
        .map(|(v, (lo, hi))| {
            let c = v.clamp(0.0, 1.0);
            if c != *v {
                clamped = true;
            }
            lo + c * (hi - lo)
        })
        .collect();
    Ok(Denormalized {
        value: ParamVector::new(values),
        clamped,
    })
}

/// Contract a box toward `theta_best +- r_b` with damping `lambda_b`:
///
///   upper' = lambda_b * upper + (1 - lambda_b) * (theta_best + r_b)
///   lower' = lambda_b * lower + (1 - lambda_b) * (theta_best - r_b)
///
/// `lambda_b = 1` leaves the box unchanged; `lambda_b = 0` jumps straight to
/// `theta_best +- r_b`. Should a dimension ever cross (lower >= upper), it is
/// re-centered to `theta_best +- r_b`.
pub fn shrink_bounds(
    space: &ParamSpace,
    theta_best: &ParamVector,
    lambda_b: f64,
    r_b: &[f64],
) -> Result<ParamSpace> {
    if !(0.0..=1.0).contains(&lambda_b) {
        return Err(Error::InvalidArgument(format!(
            "lambda_b must be in [0, 1], got {lambda_b}"
        )));
    }
    if theta_best.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: theta_best.dim(),
        });
    }
    if r_b.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: r_b.len(),
        });
    }
    if let Some(bad) = r_b.iter().find(|r| **r <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "r_b must be positive, got {bad}"
        )));
    }

    let mut lower = Vec::with_capacity(space.dim());
    let mut upper = Vec::with_capacity(space.dim());
    for k in 0..space.dim() {
        let t = theta_best[k];
        let mut up = lambda_b * space.upper[k] + (1.0 - lambda_b) * (t + r_b[k]);
        let mut lo = lambda_b * space.lower[k] + (1.0 - lambda_b) * (t - r_b[k]);
        if lo >= up {
            lo = t - r_b[k];
            up = t + r_b[k];
        }
        lower.push(lo);
        upper.push(up);
    }
    ParamSpace::new(space.names.clone(), lower, upper)
}

/// Evaluate a noisy objective `n_reps` times and return the arithmetic mean
/// and the unbiased sample variance (0 when `n_reps == 1`).
pub fn replicate_mean<F>(mut evaluator: F, theta: &ParamVector, n_reps: usize) -> Result<(f64, f64)>
where
    F: FnMut(&ParamVector) -> Result<f64>,
{
    if n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be >= 1".into()));
    }
    let mut samples = Vec::with_capacity(n_reps);
    for i in 0..n_reps {
        let v = evaluator(theta).map_err(|e| Error::Evaluation {
            index: i,
            message: e.to_string(),
        })?;
        samples.push(v);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn space_1d(lo: f64, hi: f64) -> ParamSpace {
        ParamSpace::from_bounds(&[(lo, hi)]).unwrap()
    }

    #[test]
    fn space_rejects_degenerate_bounds() {
        assert!(ParamSpace::from_bounds(&[(1.0, 1.0)]).is_err());
        assert!(ParamSpace::from_bounds(&[(2.0, 1.0)]).is_err());
        assert!(ParamSpace::from_bounds(&[]).is_err());
    }

    #[test]
    fn normalize_boundaries() {
        let s = ParamSpace::from_bounds(&[(1.0, 6.0), (-2.0, 2.0)]).unwrap();
        let at_lower = normalize(&ParamVector::new(vec![1.0, -2.0]), &s).unwrap();
        assert_eq!(at_lower.values, vec![0.0, 0.0]);
        let at_upper = normalize(&ParamVector::new(vec![6.0, 2.0]), &s).unwrap();
        assert_eq!(at_upper.values, vec![1.0, 1.0]);
    }

    #[test]
    fn normalize_velocity_bounds_midpoint() {
        // Velocity bounds 1..6 m/s, theta = 3.5 -> 0.5.
        let s = space_1d(1.0, 6.0);
        let u = normalize(&ParamVector::new(vec![3.5]), &s).unwrap();
        assert_relative_eq!(u[0], 0.5);
    }

    #[test]
    fn normalize_dimension_mismatch() {
        let s = space_1d(0.0, 1.0);
        let err = normalize(&ParamVector::new(vec![0.1, 0.2]), &s).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn denormalize_midpoint_and_lower() {
        let s = space_1d(1.0, 6.0);
        let mid = denormalize(&ParamVector::new(vec![0.5]), &s).unwrap();
        assert_relative_eq!(mid.value[0], 3.5);
        assert!(!mid.clamped);
        let lo = denormalize(&ParamVector::new(vec![0.0]), &s).unwrap();
        assert_relative_eq!(lo.value[0], 1.0);
    }

    #[test]
    fn denormalize_clamps_and_flags() {
        let s = space_1d(1.0, 6.0);
        let out = denormalize(&ParamVector::new(vec![1.5]), &s).unwrap();
        assert!(out.clamped);
        assert_relative_eq!(out.value[0], 6.0);
        let neg = denormalize(&ParamVector::new(vec![-0.25]), &s).unwrap();
        assert!(neg.clamped);
        assert_relative_eq!(neg.value[0], 1.0);
    }

    proptest! {
        // normalize/denormalize are mutual inverses on in-bound points.
        #[test]
        fn round_trip_identity(
            lo in -100.0f64..100.0,
            width in 1e-3f64..1e3,
            fracs in proptest::collection::vec(0.0f64..=1.0, 1..6)
        ) {
            let d = fracs.len();
            let bounds: Vec<(f64, f64)> = (0..d)
                .map(|k| (lo + k as f64, lo + k as f64 + width))
                .collect();
            let s = ParamSpace::from_bounds(&bounds).unwrap();
            let theta = ParamVector::new(
                fracs.iter().enumerate()
                    .map(|(k, f)| bounds[k].0 + f * width)
                    .collect(),
            );
            let u = normalize(&theta, &s).unwrap();
            let back = denormalize(&u, &s).unwrap();
            prop_assert!(!back.clamped);
            for k in 0..d {
                let scale = theta[k].abs().max(1.0);
                prop_assert!((back.value[k] - theta[k]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn shrink_lambda_zero_jumps_to_radius() {
        let s = ParamSpace::from_bounds(&[(0.0, 10.0), (0.0, 10.0)]).unwrap();
        let best = ParamVector::new(vec![4.0, 6.0]);
        let out = shrink_bounds(&s, &best, 0.0, &[1.0, 0.5]).unwrap();
        assert_eq!(out.lower(), &[3.0, 5.5]);
        assert_eq!(out.upper(), &[5.0, 6.5]);
    }

    #[test]
    fn shrink_lambda_one_is_identity() {
        let s = ParamSpace::from_bounds(&[(0.0, 10.0)]).unwrap();
        let out = shrink_bounds(&s, &ParamVector::new(vec![4.0]), 1.0, &[1.0]).unwrap();
        assert_eq!(out.lower(), s.lower());
        assert_eq!(out.upper(), s.upper());
    }

    #[test]
    fn shrink_half_step() {
        // upper' = 0.5*10 + 0.5*(4+1) = 7.5
        let s = ParamSpace::from_bounds(&[(0.0, 10.0)]).unwrap();
        let out = shrink_bounds(&s, &ParamVector::new(vec![4.0]), 0.5, &[1.0]).unwrap();
        assert_relative_eq!(out.upper()[0], 7.5);
        assert_relative_eq!(out.lower()[0], 1.5);
    }

    #[test]
    fn shrink_rejects_bad_args() {
        let s = ParamSpace::from_bounds(&[(0.0, 10.0)]).unwrap();
        let best = ParamVector::new(vec![4.0]);
        assert!(shrink_bounds(&s, &best, -0.1, &[1.0]).is_err());
        assert!(shrink_bounds(&s, &best, 1.1, &[1.0]).is_err());
        assert!(shrink_bounds(&s, &best, 0.5, &[0.0]).is_err());
        assert!(shrink_bounds(&s, &best, 0.5, &[-1.0]).is_err());
    }

    #[test]
    fn shrink_geometric_contraction() {
        // |upper_k - (best + r)| = lambda^k * |upper_0 - (best + r)|
        for &lambda in &[0.3, 0.5, 0.9] {
            let mut s = ParamSpace::from_bounds(&[(-3.0, 12.0)]).unwrap();
            let best = ParamVector::new(vec![4.0]);
            let r = [1.0];
            let target = best[0] + r[0];
            let initial_gap = (s.upper()[0] - target).abs();
            for k in 1..=10 {
                s = shrink_bounds(&s, &best, lambda, &r).unwrap();
                let expect = lambda.powi(k) * initial_gap;
                assert!(
                    ((s.upper()[0] - target).abs() - expect).abs() < 1e-9,
                    "lambda={lambda} k={k}"
                );
                assert!(s.lower()[0] < best[0] && best[0] < s.upper()[0]);
            }
        }
    }

    #[test]
    fn replicate_constant() {
        let theta = ParamVector::new(vec![0.0]);
        let (mean, var) = replicate_mean(|_| Ok(2.0), &theta, 5).unwrap();
        assert_eq!(mean, 2.0);
        assert_eq!(var, 0.0);
    }

    #[test]
    fn replicate_single_draw_has_zero_variance() {
        let theta = ParamVector::new(vec![0.0]);
        let (mean, var) = replicate_mean(|_| Ok(7.25), &theta, 1).unwrap();
        assert_eq!(mean, 7.25);
        assert_eq!(var, 0.0);
    }

    #[test]
    fn replicate_rejects_zero_reps() {
        let theta = ParamVector::new(vec![0.0]);
        assert!(replicate_mean(|_| Ok(0.0), &theta, 0).is_err());
    }

    #[test]
    fn replicate_propagates_failure_with_index() {
        let theta = ParamVector::new(vec![0.0]);
        let mut calls = 0;
        let err = replicate_mean(
            |_| {
                calls += 1;
                if calls == 3 {
                    Err(Error::InvalidArgument("boom".into()))
                } else {
                    Ok(1.0)
                }
            },
            &theta,
            10,
        )
        .unwrap_err();
        match err {
            Error::Evaluation { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn replicate_gaussian_mean_within_standard_error() {
        // sigma = 0.1, n = 1e4 -> SE = 1e-3; 3 sigma bound = 3e-3.
        let theta = ParamVector::new(vec![1.5]);
        let mut rng = crate::rng::RngStream::new(1234, 0).rng();
        let noise = Normal::new(0.0, 0.1).unwrap();
        let (mean, var) =
            replicate_mean(|t| Ok(t[0] + noise.sample(&mut rng)), &theta, 10_000).unwrap();
        assert!((mean - 1.5).abs() < 3e-3, "mean {mean}");
        assert!(var > 0.0);
    }

    #[test]
    fn replicate_variance_estimate_concentrates() {
        // i.i.d. noise of variance sigma^2: estimate within [0.8, 1.2]*sigma^2
        // for n = 1e4 in >= 95 of 100 trials.
        let sigma = 0.3;
        let theta = ParamVector::new(vec![0.0]);
        let mut hits = 0;
        for trial in 0..100u64 {
            let mut rng = crate::rng::RngStream::new(500 + trial, 0).rng();
            let noise = Normal::new(0.0, sigma).unwrap();
            let (_, var) =
                replicate_mean(|_| Ok(noise.sample(&mut rng)), &theta, 10_000).unwrap();
            let s2 = sigma * sigma;
            if var >= 0.8 * s2 && var <= 1.2 * s2 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 inside the band");
    }

    #[test]
    fn clamp_and_contains() {
        let s = ParamSpace::from_bounds(&[(0.0, 1.0), (2.0, 4.0)]).unwrap();
        let p = ParamVector::new(vec![-0.5, 5.0]);
        assert!(!s.contains(&p));
        let c = s.clamp(&p);
        assert_eq!(c.values, vec![0.0, 4.0]);
        assert!(s.contains(&c));
    }

    #[test]
    fn uniform_draws_cover_space() {
        let mut rng = crate::rng::RngStream::new(7, 0).rng();
        let s = ParamSpace::from_bounds(&[(-5.0, 5.0)]).unwrap();
        for _ in 0..100 {
            let u = ParamVector::new(vec![rng.random_range(0.0..=1.0)]);
            let d = denormalize(&u, &s).unwrap();
            assert!(s.contains(&d.value));
        }
    }
}
