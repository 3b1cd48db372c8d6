//! Objective functions over planner and flight outcomes.
//!
//! Short-term costs are computable the instant a trajectory exists
//! (computing time, failure count, smoothness, clearance); long-term costs
//! need a flown lap (flight time, collisions, emergency stops, tracking
//! error). All functions here are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::traj::Trajectory;

/// Outcome of one planning call.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanMetrics {
    /// Computing time in seconds (deterministic proxy by default).
    pub t_c: f64,
    /// Failed attempts before a trajectory was produced.
    pub n_s: u32,
    pub trajectory: Trajectory,
    /// Refinement iterations consumed (feeds the t_c proxy).
    pub refine_iters: u32,
    /// A* node expansions (feeds the t_c proxy).
    pub astar_expansions: u32,
}

/// One tracking sample: time, desired position, actual position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub desired: [f64; 2],
    pub actual: [f64; 2],
}

impl TrackSample {
    pub fn error(&self) -> f64 {
        let dx = self.desired[0] - self.actual[0];
        let dy = self.desired[1] - self.actual[1];
        (dx * dx + dy * dy).sqrt()
    }
}

/// Record of one simulated lap.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlightMetrics {
    /// Flight time in seconds.
    pub t_f: f64,
    /// Collision count.
    pub n_c: u32,
    /// Emergency-stop count.
    pub n_e: u32,
    pub tracking: Vec<TrackSample>,
    /// Largest commanded acceleration magnitude over the lap.
    pub max_accel: f64,
    /// Whether the lap hit the simulation timeout.
    pub timed_out: bool,
}

impl FlightMetrics {
    /// Maximum tracking error over the whole lap.
    pub fn max_tracking_error(&self) -> f64 {
        self.tracking
            .iter()
            .map(TrackSample::error)
            .fold(0.0, f64::max)
    }
}

/// Weights shared by the short-term, long-term, and changing-environment
/// objectives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    /// Weight on the computing-time penalty in the short-term cost.
    pub w_t: f64,
    /// Weight on the failure count in the short-term cost.
    pub w_s: f64,
    /// Hinge weight enforcing the real-time threshold; must be >> 1.
    pub w_tau: f64,
    /// Real-time computing threshold in seconds.
    pub tau_t: f64,
    /// Emergency-stop weight in the long-term cost.
    pub w_e: f64,
    /// Jerk-integral weight in the changing-environment cost.
    pub w_p: f64,
    /// Clearance weight in the changing-environment cost.
    pub w_c: f64,
    /// Desired clearance in meters.
    pub clearance: f64,
    /// Execution-time weight in the changing-environment cost.
    pub w_time: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            w_t: 1.0,
            w_s: 1.0,
            w_tau: 1000.0,
            tau_t: 0.01,
            w_e: 5.0,
            w_p: 0.01,
            w_c: 100.0,
            clearance: 0.6,
            w_time: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        if self.w_tau < 100.0 {
            return Err(Error::InvalidArgument(format!(
                "w_tau must be >= 100 to enforce the real-time constraint, got {}",
                self.w_tau
            )));
        }
        if self.tau_t <= 0.0 {
            return Err(Error::InvalidArgument("tau_t must be > 0".into()));
        }
        if self.clearance <= 0.0 {
            return Err(Error::InvalidArgument("clearance must be > 0".into()));
        }
        let all = [
            self.w_t, self.w_s, self.w_e, self.w_p, self.w_c, self.w_time,
        ];
        if all.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidArgument("weights must be >= 0".into()));
        }
        Ok(())
    }
}

/// Computing-time penalty: linear below the real-time threshold, squared
/// hinge above it. Continuous and C1 at `t_c = tau_t`.
pub fn computing_time_penalty(t_c: f64, tau_t: f64, w_tau: f64) -> f64 {
    t_c + w_tau * (t_c - tau_t).max(0.0).powi(2)
}

/// Short-term cost: weighted computing-time penalty plus failure count.
pub fn short_term_cost(m: &PlanMetrics, w: &ObjectiveWeights) -> f64 {
    w.w_t * computing_time_penalty(m.t_c, w.tau_t, w.w_tau) + w.w_s * m.n_s as f64
}

/// Maximum Euclidean tracking error over samples inside `[t_s, t_e]`.
pub fn tracking_error_penalty(m: &FlightMetrics, window: (f64, f64)) -> Result<f64> {
    let (t_s, t_e) = window;
    let mut max_err: Option<f64> = None;
    for s in &m.tracking {
        if s.t >= t_s && s.t <= t_e {
            let e = s.error();
            max_err = Some(max_err.map_or(e, |m: f64| m.max(e)));
        }
    }
    max_err.ok_or(Error::EmptyWindow {
        start: t_s,
        end: t_e,
    })
}

/// Long-term lap cost: flight time, collisions weighted by the flight time
/// itself, and emergency stops.
pub fn long_term_cost(m: &FlightMetrics, w_e: f64) -> f64 {
    m.t_f + m.t_f * m.n_c as f64 + w_e * m.n_e as f64
}

/// Time-integral of squared jerk, exact per polynomial piece.
pub fn jerk_integral(traj: &Trajectory) -> f64 {
    traj.squared_jerk_integral()
}

/// Quadratic penalty for dropping below the desired clearance.
pub fn clearance_penalty(c_obs: f64, clearance: f64) -> f64 {
    debug_assert!(clearance > 0.0);
    if c_obs < clearance {
        (clearance - c_obs).powi(2)
    } else {
        0.0
    }
}

/// Changing-environment short-term cost: execution time, smoothness, and
/// clearance, weighted (1, 0.01, 100) by default.
pub fn changing_env_cost(traj: &Trajectory, c_obs: f64, w: &ObjectiveWeights) -> f64 {
    w.w_time * traj.duration()
        + w.w_p * jerk_integral(traj)
        + w.w_c * clearance_penalty(c_obs, w.clearance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::traj::{Piece, Vec2};
    use approx::assert_relative_eq;

    fn flat_metrics(t_f: f64, n_c: u32, n_e: u32) -> FlightMetrics {
        FlightMetrics {
            t_f,
            n_c,
            n_e,
            tracking: Vec::new(),
            max_accel: 0.0,
            timed_out: false,
        }
    }

    fn plan_metrics(t_c: f64, n_s: u32) -> PlanMetrics {
        let piece = Piece::from_boundary(
            Vec2::zeros(),
            Vec2::new(1.0, 0.0),
            Vec2::zeros(),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::zeros(),
            1.0,
        );
        PlanMetrics {
            t_c,
            n_s,
            trajectory: Trajectory::new(vec![piece]),
            refine_iters: 0,
            astar_expansions: 0,
        }
    }

    #[test]
    fn computing_penalty_inactive_below_threshold() {
        assert_eq!(computing_time_penalty(0.004, 0.01, 1000.0), 0.004);
        // Continuity exactly at the hinge.
        assert_eq!(computing_time_penalty(0.01, 0.01, 1000.0), 0.01);
    }

    #[test]
    fn computing_penalty_hinge_arithmetic() {
        // t_c = tau_t + 0.01, w_tau = 1000 -> tau_t + 0.01 + 0.1
        let tau_t = 0.01;
        let v = computing_time_penalty(tau_t + 0.01, tau_t, 1000.0);
        assert_relative_eq!(v, tau_t + 0.01 + 0.1, epsilon = 1e-12);
    }

    #[test]
    fn computing_penalty_is_c1_at_the_hinge() {
        // Symmetric finite differences around tau_t: slope approaches 1 from
        // both sides because the squared hinge has zero slope at the kink.
        let tau_t = 0.01;
        let h = 1e-7;
        let left = (computing_time_penalty(tau_t, tau_t, 1000.0)
            - computing_time_penalty(tau_t - h, tau_t, 1000.0))
            / h;
        let right = (computing_time_penalty(tau_t + h, tau_t, 1000.0)
            - computing_time_penalty(tau_t, tau_t, 1000.0))
            / h;
        assert_relative_eq!(left, 1.0, epsilon = 1e-4);
        assert_relative_eq!(right, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn short_term_cost_examples() {
        let w = ObjectiveWeights::default();
        // No failures, t_c below threshold: f_s = w_t * t_c.
        let m = plan_metrics(0.005, 0);
        assert_relative_eq!(short_term_cost(&m, &w), 0.005);
        // w_t = 0 isolates the failure term.
        let zero_t = ObjectiveWeights { w_t: 0.0, ..w };
        let m2 = plan_metrics(0.005, 4);
        assert_relative_eq!(short_term_cost(&m2, &zero_t), 4.0);
        // w_t = 1, w_s = 2, t_c = 0.003, n_s = 3 -> 6.003
        let w2 = ObjectiveWeights {
            w_t: 1.0,
            w_s: 2.0,
            ..w
        };
        let m3 = plan_metrics(0.003, 3);
        assert_relative_eq!(short_term_cost(&m3, &w2), 6.003);
    }

    #[test]
    fn tracking_error_window_semantics() {
        let mut m = flat_metrics(10.0, 0, 0);
        m.tracking = vec![
            TrackSample {
                t: 1.0,
                desired: [0.0, 0.0],
                actual: [0.0, 0.0],
            },
            TrackSample {
                t: 2.0,
                desired: [0.3, 0.4],
                actual: [0.0, 0.0],
            },
            TrackSample {
                t: 3.0,
                desired: [0.1, 0.0],
                actual: [0.0, 0.0],
            },
        ];
        // Perfect tracking only.
        assert_eq!(tracking_error_penalty(&m, (0.5, 1.5)).unwrap(), 0.0);
        // 3-4-5 triangle.
        assert_relative_eq!(tracking_error_penalty(&m, (0.0, 10.0)).unwrap(), 0.5);
        // Window that excludes the worst sample.
        assert_relative_eq!(tracking_error_penalty(&m, (2.5, 10.0)).unwrap(), 0.1);
        // Empty window errors.
        assert!(tracking_error_penalty(&m, (5.0, 6.0)).is_err());
    }

    #[test]
    fn long_term_cost_examples() {
        assert_relative_eq!(long_term_cost(&flat_metrics(17.5, 0, 0), 5.0), 17.5);
        // t_f = 12, n_c = 1, w_e = 5, n_e = 2 -> 12 + 12 + 10 = 34
        assert_relative_eq!(long_term_cost(&flat_metrics(12.0, 1, 2), 5.0), 34.0);
        // Doubling t_f with one collision doubles the collision term.
        let single = long_term_cost(&flat_metrics(10.0, 1, 0), 5.0);
        let double = long_term_cost(&flat_metrics(20.0, 1, 0), 5.0);
        assert_relative_eq!(double, 2.0 * single);
    }

    #[test]
    fn collision_dominates_clean_laps() {
        // For fixed t_f >= 1 and w_e <= t_f, any collision makes the lap
        // strictly worse than a collision-free lap of equal t_f, n_e <= 1.
        for t_f in [1.0, 5.0, 30.0] {
            let w_e = t_f * 0.8;
            let collided = long_term_cost(&flat_metrics(t_f, 1, 0), w_e);
            let clean_worst = long_term_cost(&flat_metrics(t_f, 0, 1), w_e);
            assert!(collided > clean_worst);
        }
    }

    #[test]
    fn clearance_penalty_examples() {
        assert_eq!(clearance_penalty(1.0, 1.0), 0.0);
        assert_relative_eq!(clearance_penalty(0.5, 1.0), 0.25);
        assert_eq!(clearance_penalty(2.0, 1.0), 0.0);
    }

    #[test]
    fn changing_env_cost_reduces_to_time_when_smooth_and_clear() {
        // Straight constant-velocity trajectory with clearance >= C.
        let piece = Piece::from_boundary(
            Vec2::zeros(),
            Vec2::new(2.0, 0.0),
            Vec2::zeros(),
            Vec2::new(8.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::zeros(),
            4.0,
        );
        let traj = Trajectory::new(vec![piece]);
        assert!(jerk_integral(&traj) < 1e-18);
        let w = ObjectiveWeights::default();
        let cost = changing_env_cost(&traj, 2.0, &w);
        assert_relative_eq!(cost, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn changing_env_cost_weighted_sum() {
        // Weights (1, 0.01, 100): t_exe 4, jerk 100, deficit^2 0.04
        // -> 4 + 1 + 4 = 9.
        let w = ObjectiveWeights {
            clearance: 1.0,
            ..ObjectiveWeights::default()
        };
        // Single-axis cubic with constant jerk 5 over 4 s integrates to 100.
        let piece = Piece {
            coeffs_x: [0.0, 0.0, 0.0, 5.0 / 6.0, 0.0, 0.0],
            coeffs_y: [0.0; 6],
            duration: 4.0,
        };
        let traj = Trajectory::new(vec![piece]);
        assert_relative_eq!(jerk_integral(&traj), 100.0, epsilon = 1e-9);
        let cost = changing_env_cost(&traj, 0.8, &w);
        assert_relative_eq!(cost, 4.0 + 1.0 + 4.0, epsilon = 1e-9);
    }

    #[test]
    fn pure_time_minimization_when_other_weights_vanish() {
        let w = ObjectiveWeights {
            w_p: 0.0,
            w_c: 0.0,
            ..ObjectiveWeights::default()
        };
        let piece = Piece {
            coeffs_x: [0.0, 0.0, 0.0, 3.0, 1.0, 0.5],
            coeffs_y: [0.0; 6],
            duration: 2.5,
        };
        let traj = Trajectory::new(vec![piece]);
        assert_relative_eq!(changing_env_cost(&traj, 0.0, &w), 2.5);
    }

    #[test]
    fn costs_are_monotone_in_raw_metrics() {
        let w = ObjectiveWeights::default();
        // t_c
        assert!(
            short_term_cost(&plan_metrics(0.02, 0), &w)
                > short_term_cost(&plan_metrics(0.01, 0), &w)
        );
        // n_s
        assert!(
            short_term_cost(&plan_metrics(0.01, 2), &w)
                > short_term_cost(&plan_metrics(0.01, 1), &w)
        );
        // t_f, n_c, n_e
        assert!(long_term_cost(&flat_metrics(11.0, 0, 0), 5.0)
            > long_term_cost(&flat_metrics(10.0, 0, 0), 5.0));
        assert!(long_term_cost(&flat_metrics(10.0, 2, 0), 5.0)
            > long_term_cost(&flat_metrics(10.0, 1, 0), 5.0));
        assert!(long_term_cost(&flat_metrics(10.0, 0, 2), 5.0)
            > long_term_cost(&flat_metrics(10.0, 0, 1), 5.0));
        // clearance deficit
        assert!(clearance_penalty(0.2, 1.0) > clearance_penalty(0.4, 1.0));
    }

    #[test]
    fn weight_validation() {
        assert!(ObjectiveWeights::default().validate().is_ok());
        let bad = ObjectiveWeights {
            w_tau: 10.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let neg = ObjectiveWeights {
            w_c: -1.0,
            ..Default::default()
        };
        assert!(neg.validate().is_err());
    }
}
