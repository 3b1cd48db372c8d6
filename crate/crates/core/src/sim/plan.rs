//! Receding-horizon planning: grid search, quintic fitting, and
//! coordinate-descent refinement of piece waypoints.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::objectives::PlanMetrics;
use crate::sim::grid::{shortcut, OccupancyGrid};
use crate::sim::traj::{fit_through_waypoints, Trajectory, Vec2};
use crate::sim::world::World;
use crate::sim::{PlannerConfig, SimConstants, SimState};

/// Seconds charged per refinement iteration in the deterministic t_c proxy.
pub const TC_PER_REFINE_ITER: f64 = 20e-6;
/// Seconds charged per A* expansion in the deterministic t_c proxy.
pub const TC_PER_EXPANSION: f64 = 1e-6;

/// Clearance margin targeted during refinement, on top of the robot radius.
const REFINE_MARGIN: f64 = 0.05;
/// Retry budget after failed refinements.
const MAX_RETRIES: u32 = 5;

struct CostTerms {
    total: f64,
    penetration: f64,
    feasibility: f64,
}

/// Refinement cost of a candidate trajectory: smoothness plus weighted
/// penetration into sensed inflated obstacles plus weighted dynamical
/// infeasibility (speed above v_des, acceleration above a_max).
fn trajectory_cost(
    traj: &Trajectory,
    world: &World,
    sensed: &[bool],
    cfg: &PlannerConfig,
    consts: &SimConstants,
    samples_per_piece: usize,
) -> CostTerms {
    let inflation = consts.robot_radius + REFINE_MARGIN;
    let mut penetration = 0.0;
    let mut feasibility = 0.0;
    let mut n_samples = 0usize;
    for piece in &traj.pieces {
        let m = samples_per_piece.max(2);
        for i in 0..=m {
            let t = piece.duration * i as f64 / m as f64;
            let p = piece.position(t);
            if let Some((d, _)) = world.nearest_sensed_surface(p, sensed) {
                let depth = (inflation - d).max(0.0);
                penetration += depth * depth + 0.1 * depth;
            }
            let speed = piece.velocity(t).norm();
            let accel = piece.acceleration(t).norm();
            let v_over = (speed - 1.3 * cfg.v_des).max(0.0);
            let a_over = (accel - consts.a_max).max(0.0);
            feasibility += v_over * v_over + a_over * a_over;
            n_samples += 1;
        }
    }
    let dt_weight = traj.duration() / n_samples.max(1) as f64;
    penetration *= dt_weight * 100.0;
    feasibility *= dt_weight;
    let smooth = 0.01 * traj.squared_jerk_integral();
    CostTerms {
        total: smooth + cfg.w_col * penetration + cfg.w_dyn * feasibility,
        penetration,
        feasibility,
    }
}

/// Strict post-check: minimum surface distance over a dense sweep of the
/// whole trajectory against the sensed set.
fn min_sensed_clearance(traj: &Trajectory, world: &World, sensed: &[bool]) -> f64 {
    let n = 1000usize;
    let total = traj.duration();
    let mut min_d = f64::INFINITY;
    for i in 0..=n {
        let p = traj.position(total * i as f64 / n as f64);
        if let Some((d, _)) = world.nearest_sensed_surface(p, sensed) {
            min_d = min_d.min(d);
        }
    }
    min_d
}

/// Resample a polyline to exactly `n + 1` points, uniformly by arc length.
fn resample_polyline(points: &[Vec2], n: usize) -> Vec<Vec2> {
    debug_assert!(points.len() >= 2 && n >= 1);
    let mut cumulative = vec![0.0];
    for w in points.windows(2) {
        let last = *cumulative.last().expect("non-empty");
        cumulative.push(last + (w[1] - w[0]).norm());
    }
    let total = *cumulative.last().expect("non-empty");
    if total <= 1e-9 {
        return vec![points[0]; n + 1];
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0usize;
    for i in 0..=n {
        let target = total * i as f64 / n as f64;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = (cumulative[seg + 1] - cumulative[seg]).max(1e-12);
        let f = ((target - cumulative[seg]) / span).clamp(0.0, 1.0);
        out.push(points[seg] + (points[seg + 1] - points[seg]) * f);
    }
    out
}

fn build_trajectory(
    waypoints: &[Vec2],
    state: &SimState,
    cfg: &PlannerConfig,
    consts: &SimConstants,
    arrive_at_rest: bool,
) -> Trajectory {
    let n = waypoints.len();
    // Waypoint speeds: current speed at the start, v_des at junctions,
    // rest or v_des at the end. Durations then match the average speed of
    // each piece's endpoints, floored so the velocity change stays within
    // the acceleration limit.
    let mut speeds = vec![cfg.v_des; n];
    speeds[0] = state.velocity.norm();
    if arrive_at_rest {
        speeds[n - 1] = 0.0;
    }
    let mut durations = Vec::with_capacity(n - 1);
    for (i, w) in waypoints.windows(2).enumerate() {
        let len = (w[1] - w[0]).norm();
        let avg_speed = (0.5 * (speeds[i] + speeds[i + 1])).max(0.15 * cfg.v_des);
        let ramp_floor = 1.9 * (speeds[i + 1] - speeds[i]).abs() / consts.a_max;
        durations.push((len / avg_speed).max(ramp_floor).max(0.05));
    }
    let v_end = if arrive_at_rest {
        Vec2::zeros()
    } else {
        let tangent = waypoints[n - 1] - waypoints[n - 2];
        let norm = tangent.norm();
        if norm > 1e-9 {
            tangent / norm * cfg.v_des
        } else {
            Vec2::zeros()
        }
    };
    fit_through_waypoints(waypoints, &durations, state.velocity, v_end, cfg.v_des)
}

/// Plan a trajectory from the current state to `local_goal` through the
/// sensed obstacle map.
///
/// Pipeline: grid A* over inflated sensed obstacles, line-of-sight
/// shortcutting, quintic fit through `n_pol + 1` arc-length waypoints, and
/// bounded coordinate descent on the interior waypoints. Success requires
/// zero penetration on a dense sweep and a feasibility residual below
/// tolerance; each failed attempt increments `n_s`, reseeds the waypoints,
/// and retries (up to five). The computing-time proxy charges refinement
/// iterations and A* expansions.
pub fn plan(
    world: &World,
    state: &SimState,
    local_goal: Vec2,
    cfg: &PlannerConfig,
    consts: &SimConstants,
    arrive_at_rest: bool,
    rng: &mut ChaCha12Rng,
) -> Result<PlanMetrics> {
    let wall_start = std::time::Instant::now();
    if (local_goal - state.position).norm() > cfg.h_pl * 1.05 + 0.5 {
        return Err(Error::PlanFailed(format!(
            "local goal {:.2?} beyond the planning horizon",
            (local_goal.x, local_goal.y)
        )));
    }

    let grid = OccupancyGrid::from_sensed(world, &state.sensed, consts.grid_cell, consts.robot_radius);

    // The drone may legitimately sit inside a blocked cell (cell centers
    // are conservative); search a small ring for a free cell to anchor A*.
    let astar_start = if grid.is_blocked(state.position) {
        match nearest_free(&grid, state.position, consts.grid_cell) {
            Some(p) => p,
            None => return Err(Error::PlanFailed("start region fully blocked".into())),
        }
    } else {
        state.position
    };

    let path = grid
        .astar(astar_start, local_goal)
        .ok_or_else(|| Error::PlanFailed("no path in the sensed map".into()))?;
    let expansions = path.expansions;
    let mut corner_points = shortcut(world, &state.sensed, &path.points, consts.robot_radius + 0.1);
    if corner_points.len() < 2 {
        corner_points = vec![state.position, local_goal];
    }
    // Anchor the true start.
    corner_points[0] = state.position;

    let n_pol = cfg.n_pol as usize;
    let base_waypoints = resample_polyline(&corner_points, n_pol);

    let mut total_iters = 0u32;
    let mut n_s = 0u32;
    let mut waypoints = base_waypoints.clone();

    for attempt in 0..=MAX_RETRIES {
        if attempt > 0 {
            // Reseed: jitter interior waypoints around the base solution.
            waypoints = base_waypoints.clone();
            for wp in waypoints.iter_mut().take(n_pol).skip(1) {
                wp.x += rng.random_range(-0.4..=0.4);
                wp.y += rng.random_range(-0.4..=0.4);
            }
        }
        let (traj, iters) = refine(
            &mut waypoints,
            world,
            state,
            cfg,
            consts,
            arrive_at_rest,
            consts.refine_max_iters,
        );
        total_iters += iters;

        let clearance = min_sensed_clearance(&traj, world, &state.sensed);
        let feas = trajectory_cost(&traj, world, &state.sensed, cfg, consts, 8).feasibility;
        if clearance >= consts.robot_radius && feas < consts.feas_tol {
            let t_c = if consts.wall_clock_tc {
                wall_start.elapsed().as_secs_f64()
            } else {
                total_iters as f64 * TC_PER_REFINE_ITER + expansions as f64 * TC_PER_EXPANSION
            };
            return Ok(PlanMetrics {
                t_c,
                n_s,
                trajectory: traj,
                refine_iters: total_iters,
                astar_expansions: expansions,
            });
        }
        n_s += 1;
    }
    Err(Error::PlanFailed(format!(
        "refinement failed after {n_s} attempts"
    )))
}

fn nearest_free(grid: &OccupancyGrid, p: Vec2, cell: f64) -> Option<Vec2> {
    for ring in 1..=3 {
        let r = ring as f64 * cell;
        for (dx, dy) in [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (1.0, 1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
            (-1.0, -1.0),
        ] {
            let cand = p + Vec2::new(dx * r, dy * r);
            if !grid.is_blocked(cand) {
                return Some(cand);
            }
        }
    }
    None
}

/// Coordinate descent over interior waypoints with a shrinking step.
/// Returns the refined trajectory and the iterations consumed (one
/// iteration = one waypoint-coordinate trial).
fn refine(
    waypoints: &mut [Vec2],
    world: &World,
    state: &SimState,
    cfg: &PlannerConfig,
    consts: &SimConstants,
    arrive_at_rest: bool,
    max_iters: u32,
) -> (Trajectory, u32) {
    let n = waypoints.len();
    let interior = n.saturating_sub(2);
    let mut traj = build_trajectory(waypoints, state, cfg, consts, arrive_at_rest);
    if interior == 0 || max_iters == 0 {
        return (traj, 0);
    }
    let mut cost = trajectory_cost(&traj, world, &state.sensed, cfg, consts, 6);
    let mut step = 0.15_f64;
    let mut iters = 0u32;
    let mut improved_in_sweep = false;
    let mut sweep_pos = 0usize; // cycles over interior * 2 coordinates

    while iters < max_iters {
        let wp_idx = 1 + (sweep_pos / 2) % interior;
        let axis = sweep_pos % 2;
        sweep_pos += 1;

        let original = waypoints[wp_idx];
        let mut best_local = cost.total;
        let mut best_point = original;
        for dir in [-1.0, 1.0] {
            let mut cand = original;
            if axis == 0 {
                cand.x += dir * step;
            } else {
                cand.y += dir * step;
            }
            waypoints[wp_idx] = cand;
            let cand_traj = build_trajectory(waypoints, state, cfg, consts, arrive_at_rest);
            let cand_cost = trajectory_cost(&cand_traj, world, &state.sensed, cfg, consts, 6);
            if cand_cost.total < best_local {
                best_local = cand_cost.total;
                best_point = cand;
            }
        }
        waypoints[wp_idx] = best_point;
        if best_local < cost.total {
            traj = build_trajectory(waypoints, state, cfg, consts, arrive_at_rest);
            cost = trajectory_cost(&traj, world, &state.sensed, cfg, consts, 6);
            improved_in_sweep = true;
        }
        iters += 1;

        // End of a sweep over every interior coordinate.
        if sweep_pos % (interior * 2) == 0 {
            if !improved_in_sweep {
                if cost.penetration <= 0.0 && cost.feasibility < consts.feas_tol {
                    break;
                }
                step *= 0.5;
                if step < 0.01 {
                    break;
                }
            }
            improved_in_sweep = false;
        }
    }
    (traj, iters)
}

/// One-shot planning evaluation for the short-term loop: a randomized
/// start/goal pair at horizon distance in free space, sensed from the
/// start, then a single `plan` call.
pub fn plan_only_eval(
    world: &World,
    cfg: &PlannerConfig,
    consts: &SimConstants,
    rng: &mut ChaCha12Rng,
) -> Result<PlanMetrics> {
    let margin = consts.robot_radius + 0.2;
    let free = |p: Vec2| -> bool {
        world.contains(p) && world.nearest_surface(p).map_or(true, |(d, _)| d >= margin)
    };

    for _ in 0..200 {
        let start = Vec2::new(
            rng.random_range(0.5..world.width - 0.5),
            rng.random_range(0.5..world.height - 0.5),
        );
        if !free(start) {
            continue;
        }
        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let goal_raw = start + Vec2::new(angle.cos(), angle.sin()) * cfg.h_pl;
        let goal = Vec2::new(
            goal_raw.x.clamp(0.5, world.width - 0.5),
            goal_raw.y.clamp(0.5, world.height - 0.5),
        );
        if !free(goal) || (goal - start).norm() < 0.5 {
            continue;
        }
        let mut state = SimState::at_rest(start, world);
        crate::sim::world::sense(world, start, consts.sensing_radius, &mut state);
        return plan(world, &state, goal, cfg, consts, true, rng);
    }
    Err(Error::WorldInfeasible(
        "no free start/goal pair found".into(),
    ))
}
