//! Desk-scale surrogate of an online planner and executor: randomized
//! obstacle worlds, receding-horizon planning sensitive to the tuned
//! parameters, point-mass tracking, and collision/emergency accounting.
//!
//! The world is 2-D and the drone a point mass; the couplings the tuner
//! exploits (parameters -> compute/failures/flight time/collisions) are
//! all present at a fraction of the cost of a full dynamics stack.

pub mod grid;
pub mod lap;
pub mod plan;
pub mod traj;
pub mod world;

pub use lap::{execute_lap, plan_only_eval};
pub use plan::plan;
pub use traj::{Piece, Trajectory, Vec2};
pub use world::{gen_world, sense, Circle, World};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::ParamVector;

/// Fixed simulator constants. All config-overridable; defaults documented
/// field by field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConstants {
    /// Sensing radius in meters.
    pub sensing_radius: f64,
    /// Robot radius in meters.
    pub robot_radius: f64,
    /// Collision-forecast horizon for emergency stops, seconds.
    pub tau_c: f64,
    /// Acceleration limit, m/s^2.
    pub a_max: f64,
    /// Occupancy-grid cell size, meters.
    pub grid_cell: f64,
    /// Simulation step, seconds.
    pub dt: f64,
    /// Hard lap timeout, seconds.
    pub timeout: f64,
    /// Tracking-law proportional gain.
    pub kp: f64,
    /// Tracking-law derivative gain.
    pub kd: f64,
    /// Refinement iteration cap per planning attempt.
    pub refine_max_iters: u32,
    /// Feasibility residual tolerance for a successful plan.
    pub feas_tol: f64,
    /// Use measured wall-clock for t_c instead of the deterministic proxy.
    pub wall_clock_tc: bool,
}

impl Default for SimConstants {
    fn default() -> Self {
        Self {
            sensing_radius: 5.0,
            robot_radius: 0.3,
            tau_c: 1.0,
            a_max: 6.0,
            grid_cell: 0.2,
            dt: 0.02,
            timeout: 120.0,
            kp: 16.0,
            kd: 8.0,
            refine_max_iters: 500,
            feas_tol: 1.0,
            wall_clock_tc: false,
        }
    }
}

impl SimConstants {
    /// Cheaper, lower-fidelity preset for the simulation-first tuning stage.
    pub fn low_fidelity() -> Self {
        Self {
            dt: 0.04,
            refine_max_iters: 150,
            ..Self::default()
        }
    }
}

/// Tunable planner parameters. The short-term set `[w_col, w_dyn, n_pol]`
/// shapes the inner trajectory optimization; the long-term set
/// `[v_des, h_pl, t_pl]` shapes lap-level behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Collision-avoidance weight in trajectory refinement.
    pub w_col: f64,
    /// Dynamical-feasibility weight in trajectory refinement.
    pub w_dyn: f64,
    /// Number of polynomial pieces (integer in [2, 12]).
    pub n_pol: u32,
    /// Desired velocity, m/s.
    pub v_des: f64,
    /// Planning horizon, meters.
    pub h_pl: f64,
    /// Replan interval, seconds.
    pub t_pl: f64,
}

impl PlannerConfig {
    pub fn new(
        w_col: f64,
        w_dyn: f64,
        n_pol_real: f64,
        v_des: f64,
        h_pl: f64,
        t_pl: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("w_col", w_col),
            ("w_dyn", w_dyn),
            ("n_pol", n_pol_real),
            ("v_des", v_des),
            ("h_pl", h_pl),
            ("t_pl", t_pl),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "planner parameter {name} must be > 0, got {v}"
                )));
            }
        }
        // n_pol is carried as a real by the optimizers and rounded here.
        let n_pol = (n_pol_real.round() as i64).clamp(2, 12) as u32;
        Ok(Self {
            w_col,
            w_dyn,
            n_pol,
            v_des,
            h_pl,
            t_pl,
        })
    }

    /// Assemble from the benchmark split: short-term `[w_col, w_dyn, n_pol]`
    /// and long-term `[v_des, h_pl, t_pl]`, both in original units.
    pub fn from_split(short: &ParamVector, long: &ParamVector) -> Result<Self> {
        if short.dim() != 3 || long.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: if short.dim() != 3 {
                    short.dim()
                } else {
                    long.dim()
                },
            });
        }
        Self::new(short[0], short[1], short[2], long[0], long[1], long[2])
    }
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            w_col: 1.0,
            w_dyn: 1.0,
            n_pol: 6,
            v_des: 2.0,
            h_pl: 6.0,
            t_pl: 0.5,
        }
    }
}

/// Drone and knowledge state carried through a lap: position/velocity, the
/// simulation clock, the currently executed trajectory (with its start
/// time), and the sensed obstacle set (grows monotonically).
#[derive(Debug, Clone)]
pub struct SimState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub clock: f64,
    pub trajectory: Option<(Trajectory, f64)>,
    pub sensed: Vec<bool>,
    pub sensed_count: usize,
}

impl SimState {
    pub fn at_rest(position: Vec2, world: &World) -> Self {
        Self {
            position,
            velocity: Vec2::zeros(),
            clock: 0.0,
            trajectory: None,
            sensed: vec![false; world.obstacles.len()],
            sensed_count: 0,
        }
    }

    pub fn sensed_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.sensed
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.then_some(i))
    }
}
