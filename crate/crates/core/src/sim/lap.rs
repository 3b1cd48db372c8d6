//! Closed-loop lap execution: sense, replan, track, and account for
//! collisions and emergency stops.

use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::objectives::{FlightMetrics, PlanMetrics, TrackSample};
use crate::sim::grid::OccupancyGrid;
use crate::sim::plan::plan;
use crate::sim::traj::Vec2;
use crate::sim::world::{sense_collect, World};
use crate::sim::{PlannerConfig, SimConstants, SimState};

pub use crate::sim::plan::plan_only_eval;

/// Arrival tolerance at mission waypoints, meters.
const ARRIVE_TOL: f64 = 0.8;
/// Minimum wait between planning attempts while stopped, seconds.
const REST_REPLAN_BACKOFF: f64 = 0.2;

/// Fly one lap: start to the goal 24 m ahead and back. Returns the flight
/// record and the metrics of every successful planning call.
///
/// The loop at `dt` is: sense -> replan when the interval elapsed, the
/// horizon ran out, or newly sensed obstacles conflict with the executed
/// trajectory -> track with a saturated PD point-mass law -> account for
/// collisions (penalized, relocated to the last safe point, never
/// terminal) and emergency stops (collision forecast within `tau_c` while
/// planning fails: velocity zeroed, replanned from rest). Hitting the
/// timeout records `t_f = timeout` plus one collision.
pub fn execute_lap(
    world: &World,
    cfg: &PlannerConfig,
    consts: &SimConstants,
    rng: &mut ChaCha12Rng,
) -> Result<(FlightMetrics, Vec<PlanMetrics>)> {
    if world.width < 28.0 {
        return Err(Error::WorldInfeasible(
            "lap needs a 24 m corridor plus margins".into(),
        ));
    }
    let mission = [world.goal_point(), world.start_point()];
    let mut target_idx = 0usize;

    let mut state = SimState::at_rest(world.start_point(), world);
    let mut plans: Vec<PlanMetrics> = Vec::new();
    let mut n_c = 0u32;
    let mut n_e = 0u32;
    let mut tracking: Vec<TrackSample> = Vec::new();
    let mut max_accel: f64 = 0.0;

    let mut last_plan_time = f64::NEG_INFINITY;
    let mut last_attempt_time = f64::NEG_INFINITY;
    let mut last_safe = state.position;
    let mut planning_failed = false;
    let mut timed_out = false;

    loop {
        // --- sense ---
        let newly_sensed = sense_collect(world, state.position, consts.sensing_radius, &mut state);

        // --- decide whether to replan ---
        let target = mission[target_idx];
        let mut need_replan = match &state.trajectory {
            None => state.clock - last_attempt_time >= REST_REPLAN_BACKOFF,
            Some((traj, t0)) => {
                state.clock - last_plan_time >= cfg.t_pl
                    || state.clock - t0 >= traj.duration() - consts.dt
            }
        };
        if !need_replan && !newly_sensed.is_empty() {
            if let Some((traj, t0)) = &state.trajectory {
                if conflicts_with(
                    traj,
                    state.clock - t0,
                    traj.duration(),
                    world,
                    &newly_sensed,
                    consts.robot_radius + 0.05,
                ) {
                    need_replan = true;
                }
            }
        }

        // --- replan ---
        if need_replan {
            last_attempt_time = state.clock;
            let (local_goal, at_rest) = local_goal_toward(world, &state, target, cfg, consts);
            match plan(world, &state, local_goal, cfg, consts, at_rest, rng) {
                Ok(m) => {
                    state.trajectory = Some((m.trajectory.clone(), state.clock));
                    last_plan_time = state.clock;
                    planning_failed = false;
                    plans.push(m);
                }
                Err(_) => {
                    planning_failed = true;
                }
            }
        }

        // --- emergency stop ---
        if planning_failed {
            if let Some((traj, t0)) = &state.trajectory {
                let t_rel = state.clock - t0;
                if conflicts_with_sensed(
                    traj,
                    t_rel,
                    (t_rel + consts.tau_c).min(traj.duration()),
                    world,
                    &state.sensed,
                    consts.robot_radius,
                ) {
                    n_e += 1;
                    state.velocity = Vec2::zeros();
                    state.trajectory = None;
                    planning_failed = false;
                }
            }
        }

        // --- track ---
        let (desired_p, desired_v) = match &state.trajectory {
            Some((traj, t0)) => {
                let t_rel = state.clock - t0;
                (traj.position(t_rel), traj.velocity(t_rel))
            }
            None => (state.position, Vec2::zeros()),
        };
        let mut accel = consts.kp * (desired_p - state.position)
            + consts.kd * (desired_v - state.velocity);
        let a_norm = accel.norm();
        if a_norm > consts.a_max {
            accel *= consts.a_max / a_norm;
        }
        max_accel = max_accel.max(accel.norm());
        state.velocity += accel * consts.dt;
        state.position += state.velocity * consts.dt;
        tracking.push(TrackSample {
            t: state.clock,
            desired: [desired_p.x, desired_p.y],
            actual: [state.position.x, state.position.y],
        });

        // --- collision accounting (against the real world) ---
        match world.nearest_surface(state.position) {
            Some((d, _)) if d < consts.robot_radius => {
                n_c += 1;
                state.position = last_safe;
                state.velocity = Vec2::zeros();
                state.trajectory = None;
            }
            Some((d, _)) if d >= consts.robot_radius + 0.05 => {
                last_safe = state.position;
            }
            None => {
                last_safe = state.position;
            }
            _ => {}
        }

        // --- mission progress ---
        if (state.position - target).norm() <= ARRIVE_TOL {
            target_idx += 1;
            state.trajectory = None;
            if target_idx >= mission.len() {
                break;
            }
        }

        state.clock += consts.dt;
        if state.clock >= consts.timeout {
            n_c += 1;
            timed_out = true;
            state.clock = consts.timeout;
            break;
        }
    }

    Ok((
        FlightMetrics {
            t_f: state.clock,
            n_c,
            n_e,
            tracking,
            max_accel,
            timed_out,
        },
        plans,
    ))
}

/// Local goal at most one horizon ahead toward the mission target, nudged
/// into free sensed space when the direct pick is blocked.
fn local_goal_toward(
    world: &World,
    state: &SimState,
    target: Vec2,
    cfg: &PlannerConfig,
    consts: &SimConstants,
) -> (Vec2, bool) {
    let to_target = target - state.position;
    let dist = to_target.norm();
    let (raw, at_rest) = if dist <= cfg.h_pl {
        (target, true)
    } else {
        (state.position + to_target / dist * (cfg.h_pl * 0.95), false)
    };
    let clamped = Vec2::new(
        raw.x.clamp(0.4, world.width - 0.4),
        raw.y.clamp(0.4, world.height - 0.4),
    );
    let grid = OccupancyGrid::from_sensed(world, &state.sensed, consts.grid_cell, consts.robot_radius);
    if !grid.is_blocked(clamped) {
        return (clamped, at_rest);
    }
    for ring in [0.3, 0.6, 1.0, 1.5, 2.2] {
        for k in 0..8 {
            let angle = k as f64 * std::f64::consts::TAU / 8.0;
            let cand = clamped + Vec2::new(angle.cos(), angle.sin()) * ring;
            if world.contains(cand)
                && !grid.is_blocked(cand)
                && (cand - state.position).norm() <= cfg.h_pl
            {
                return (cand, false);
            }
        }
    }
    (clamped, at_rest)
}

/// Does the trajectory segment `[t_from, t_to]` pass within `clearance` of
/// any of the given obstacle indices?
fn conflicts_with(
    traj: &crate::sim::traj::Trajectory,
    t_from: f64,
    t_to: f64,
    world: &World,
    indices: &[usize],
    clearance: f64,
) -> bool {
    if indices.is_empty() || t_to <= t_from {
        return false;
    }
    let steps = (((t_to - t_from) / 0.05).ceil() as usize).clamp(1, 400);
    for i in 0..=steps {
        let t = t_from + (t_to - t_from) * i as f64 / steps as f64;
        let p = traj.position(t);
        for &idx in indices {
            if world.obstacles[idx].surface_distance(p) < clearance {
                return true;
            }
        }
    }
    false
}

/// Same conflict test against the whole sensed set.
fn conflicts_with_sensed(
    traj: &crate::sim::traj::Trajectory,
    t_from: f64,
    t_to: f64,
    world: &World,
    sensed: &[bool],
    clearance: f64,
) -> bool {
    if t_to <= t_from {
        return false;
    }
    let steps = (((t_to - t_from) / 0.05).ceil() as usize).clamp(1, 400);
    for i in 0..=steps {
        let t = t_from + (t_to - t_from) * i as f64 / steps as f64;
        let p = traj.position(t);
        if let Some((d, _)) = world.nearest_sensed_surface(p, sensed) {
            if d < clearance {
                return true;
            }
        }
    }
    false
}
