//! Dual-loop parameter tuning for receding-horizon planners.
//!
//! Two complementary optimizers share one planner: a particle swarm tunes
//! parameters whose cost is observable the moment a trajectory is produced
//! (computing time, failure counts, smoothness, clearance), while Bayesian
//! optimization with a Gaussian-process surrogate tunes parameters whose
//! cost only shows up after flying a full lap (flight time, collisions,
//! emergency stops). The crate also ships a desk-scale 2-D planner
//! simulator so the whole framework can be exercised end to end.

pub mod bayesopt;
pub mod dual;
pub mod error;
pub mod gp;
pub mod objectives;
pub mod pso;
pub mod rng;
pub mod sim;
pub mod space;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use space::{ParamSpace, ParamVector};
