//! Randomized obstacle worlds and sensing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sim::traj::Vec2;
use crate::sim::SimState;

/// Grid pitch relative to the requested average spacing. Calibrated so the
/// realized mean nearest-neighbor spacing lands on the request (jitter
/// pulls the mean slightly below the pitch).
const PITCH_FACTOR: f64 = 1.13;
/// Jitter amplitude relative to the requested spacing.
const JITTER_FACTOR: f64 = 0.15;
/// Hard floor on pairwise center distance, relative to spacing.
const MIN_DIST_FACTOR: f64 = 0.6;
/// Start/goal discs of this radius stay obstacle-free.
const CLEAR_RADIUS: f64 = 1.0;

/// A circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Circle {
    pub fn center(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Signed distance from a point to the obstacle surface.
    pub fn surface_distance(&self, p: Vec2) -> f64 {
        (p - self.center()).norm() - self.radius
    }
}

/// An obstacle field with fixed extent. Start and goal (the lap endpoints)
/// are cleared at generation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Circle>,
    pub avg_spacing: f64,
    pub seed: u64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    #[serde(skip)]
    index: SpatialIndex,
}

/// Uniform-grid spatial index over obstacles; rebuilt on deserialization.
#[derive(Debug, Clone, Default, PartialEq)]
struct SpatialIndex {
    cell: f64,
    cols: usize,
    rows: usize,
    bins: Vec<Vec<u32>>,
    max_radius: f64,
}

impl SpatialIndex {
    fn build(width: f64, height: f64, obstacles: &[Circle]) -> SpatialIndex {
        let cell = 1.0;
        let cols = (width / cell).ceil() as usize + 1;
        let rows = (height / cell).ceil() as usize + 1;
        let mut bins = vec![Vec::new(); cols * rows];
        let mut max_radius: f64 = 0.0;
        for (i, o) in obstacles.iter().enumerate() {
            max_radius = max_radius.max(o.radius);
            let cx = (o.x / cell) as usize;
            let cy = (o.y / cell) as usize;
            if cx < cols && cy < rows {
                bins[cy * cols + cx].push(i as u32);
            }
        }
        SpatialIndex {
            cell,
            cols,
            rows,
            bins,
            max_radius,
        }
    }

    /// Indices of obstacles whose center lies within `r + max_radius` of `p`.
    fn nearby(&self, p: Vec2, r: f64) -> impl Iterator<Item = u32> + '_ {
        let reach = r + self.max_radius;
        let x0 = (((p.x - reach) / self.cell).floor().max(0.0)) as usize;
        let y0 = (((p.y - reach) / self.cell).floor().max(0.0)) as usize;
        let x1 = (((p.x + reach) / self.cell).ceil() as usize).min(self.cols.saturating_sub(1));
        let y1 = (((p.y + reach) / self.cell).ceil() as usize).min(self.rows.saturating_sub(1));
        (y0..=y1).flat_map(move |y| {
            (x0..=x1).flat_map(move |x| self.bins[y * self.cols + x].iter().copied())
        })
    }
}

impl World {
    fn with_index(mut self) -> World {
        self.index = SpatialIndex::build(self.width, self.height, &self.obstacles);
        self
    }

    pub fn start_point(&self) -> Vec2 {
        Vec2::new(self.start[0], self.start[1])
    }

    pub fn goal_point(&self) -> Vec2 {
        Vec2::new(self.goal[0], self.goal[1])
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    /// Distance from `p` to the nearest obstacle surface among all
    /// obstacles, with the obstacle index. `None` in an empty world.
    pub fn nearest_surface(&self, p: Vec2) -> Option<(f64, usize)> {
        self.nearest_filtered(p, |_| true)
    }

    /// Distance from `p` to the nearest *sensed* obstacle surface.
    pub fn nearest_sensed_surface(&self, p: Vec2, sensed: &[bool]) -> Option<(f64, usize)> {
        self.nearest_filtered(p, |i| sensed[i])
    }

    /// Expanding-ring nearest query. A hit only counts as final once its
    /// distance is covered by the scanned ring, otherwise a closer obstacle
    /// could hide just outside it.
    fn nearest_filtered<F: Fn(usize) -> bool>(&self, p: Vec2, keep: F) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        let diag = (self.width * self.width + self.height * self.height).sqrt();
        let mut r = 2.0;
        loop {
            for i in self.index.nearby(p, r) {
                let idx = i as usize;
                if !keep(idx) {
                    continue;
                }
                let d = self.obstacles[idx].surface_distance(p);
                if best.map_or(true, |(b, _)| d < b) {
                    best = Some((d, idx));
                }
            }
            if let Some((d, _)) = best {
                if d <= r {
                    return best;
                }
            }
            if r > diag {
                return best;
            }
            r *= 2.0;
        }
    }

    /// Obstacle indices within `radius` of `p` (surface distance).
    pub fn obstacles_within(&self, p: Vec2, radius: f64) -> Vec<usize> {
        self.index
            .nearby(p, radius)
            .filter(|&i| self.obstacles[i as usize].surface_distance(p) <= radius)
            .map(|i| i as usize)
            .collect()
    }

    /// Mean nearest-neighbor spacing between obstacle centers.
    pub fn mean_nearest_spacing(&self) -> Option<f64> {
        if self.obstacles.len() < 2 {
            return None;
        }
        let mut total = 0.0;
        for (i, a) in self.obstacles.iter().enumerate() {
            let mut nn = f64::INFINITY;
            for (j, b) in self.obstacles.iter().enumerate() {
                if i != j {
                    let d = (a.center() - b.center()).norm();
                    nn = nn.min(d);
                }
            }
            total += nn;
        }
        Some(total / self.obstacles.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(s: &str) -> Result<World> {
        let w: World = serde_json::from_str(s)
            .map_err(|e| Error::Config(format!("world JSON: {e}")))?;
        Ok(w.with_index())
    }
}

/// Generate an obstacle field on a jittered hex lattice (a Poisson-disc
/// style arrangement): deterministic per seed, mean nearest-neighbor
/// spacing within 10% of `avg_spacing`, pairwise distance floored, and the
/// start/goal discs cleared.
pub fn gen_world(
    seed: u64,
    extent: (f64, f64),
    avg_spacing: f64,
    radius_range: (f64, f64),
) -> Result<World> {
    let (width, height) = extent;
    let (r_min, r_max) = radius_range;
    if width <= 4.0 || height <= 2.0 {
        return Err(Error::WorldInfeasible(format!(
            "extent {width}x{height} too small"
        )));
    }
    if !(r_min > 0.0 && r_max >= r_min) {
        return Err(Error::WorldInfeasible(format!(
            "bad obstacle radius range [{r_min}, {r_max}]"
        )));
    }
    if avg_spacing <= 2.0 * r_max {
        return Err(Error::WorldInfeasible(format!(
            "spacing {avg_spacing} must exceed twice the max obstacle radius {r_max}"
        )));
    }

    let start = Vec2::new(2.0, height / 2.0);
    let goal = start + Vec2::new(24.0, 0.0);
    if goal.x > width - 1.5 {
        return Err(Error::WorldInfeasible(format!(
            "width {width} cannot hold the 24 m lap"
        )));
    }

    let mut rng = RngStream::new(seed, 0).rng();
    let pitch = avg_spacing * PITCH_FACTOR;
    let jitter = avg_spacing * JITTER_FACTOR;
    let min_dist = avg_spacing * MIN_DIST_FACTOR;
    let row_step = pitch * 0.866;
    let mut obstacles: Vec<Circle> = Vec::new();

    let mut y = 0.5 * row_step;
    let mut row = 0usize;
    while y < height {
        let offset = if row % 2 == 1 { 0.5 * pitch } else { 0.0 };
        let mut x = 0.5 * pitch + offset;
        while x < width {
            // Draw jitter and radius unconditionally to keep the stream
            // layout independent of acceptance decisions.
            let jx: f64 = rng.random_range(-jitter..=jitter);
            let jy: f64 = rng.random_range(-jitter..=jitter);
            let radius = rng.random_range(r_min..=r_max);
            let c = Vec2::new(x + jx, y + jy);
            let margin = radius + 0.1;
            let inside = c.x > margin
                && c.x < width - margin
                && c.y > margin
                && c.y < height - margin;
            let clears_endpoints = (c - start).norm() > CLEAR_RADIUS + radius
                && (c - goal).norm() > CLEAR_RADIUS + radius;
            let spaced = obstacles
                .iter()
                .all(|o| (o.center() - c).norm() >= min_dist);
            if inside && clears_endpoints && spaced {
                obstacles.push(Circle {
                    x: c.x,
                    y: c.y,
                    radius,
                });
            }
            x += pitch;
        }
        y += row_step;
        row += 1;
    }

    Ok(World {
        width,
        height,
        obstacles,
        avg_spacing,
        seed,
        start: [start.x, start.y],
        goal: [goal.x, goal.y],
        index: SpatialIndex::default(),
    }
    .with_index())
}

/// Add every obstacle whose boundary intersects the sensing disc around
/// `pos` to the sensed set. Pure set union: idempotent, never shrinks.
pub fn sense(world: &World, pos: Vec2, radius: f64, state: &mut SimState) {
    let _ = sense_collect(world, pos, radius, state);
}

/// As `sense`, additionally returning the indices added this call.
pub fn sense_collect(world: &World, pos: Vec2, radius: f64, state: &mut SimState) -> Vec<usize> {
    debug_assert!(radius > 0.0);
    let mut added = Vec::new();
    for i in world.index.nearby(pos, radius) {
        let idx = i as usize;
        if !state.sensed[idx] && world.obstacles[idx].surface_distance(pos) <= radius {
            state.sensed[idx] = true;
            state.sensed_count += 1;
            added.push(idx);
        }
    }
    added
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_world(seed: u64, spacing: f64) -> World {
        gen_world(seed, (30.0, 12.0), spacing, (0.15, 0.35)).unwrap()
    }

    #[test]
    fn spacing_request_is_honored() {
        // Spacing 3.0 on 30x12: mean nearest-neighbor spacing in [2.7, 3.3].
        for seed in 0..10 {
            let w = default_world(seed, 3.0);
            let mean = w.mean_nearest_spacing().unwrap();
            assert!(
                (2.7..=3.3).contains(&mean),
                "seed {seed}: mean spacing {mean}, {} obstacles",
                w.obstacles.len()
            );
        }
    }

    #[test]
    fn denser_spacings_also_hold() {
        for &spacing in &[2.1, 1.3, 0.9] {
            let radius = if spacing > 1.0 { (0.15, 0.35) } else { (0.12, 0.28) };
            for seed in 0..5 {
                let w = gen_world(seed, (30.0, 12.0), spacing, radius).unwrap();
                let mean = w.mean_nearest_spacing().unwrap();
                assert!(
                    (spacing * 0.9..=spacing * 1.1).contains(&mean),
                    "spacing {spacing} seed {seed}: mean {mean}"
                );
            }
        }
    }

    #[test]
    fn empty_world_when_spacing_exceeds_diagonal() {
        let w = gen_world(3, (30.0, 12.0), 40.0, (0.15, 0.35)).unwrap();
        assert!(w.obstacles.is_empty());
        assert!(w.mean_nearest_spacing().is_none());
    }

    #[test]
    fn same_seed_is_identical() {
        let a = default_world(42, 2.1);
        let b = default_world(42, 2.1);
        assert_eq!(a, b);
        let c = default_world(43, 2.1);
        assert_ne!(a.obstacles, c.obstacles);
    }

    #[test]
    fn start_and_goal_discs_are_clear() {
        for seed in 0..20 {
            let w = default_world(seed, 1.3);
            for o in &w.obstacles {
                assert!(o.surface_distance(w.start_point()) > CLEAR_RADIUS);
                assert!(o.surface_distance(w.goal_point()) > CLEAR_RADIUS);
            }
        }
    }

    #[test]
    fn pairwise_distance_respects_floor() {
        let w = default_world(7, 1.3);
        let floor = 1.3 * MIN_DIST_FACTOR;
        for (i, a) in w.obstacles.iter().enumerate() {
            for b in w.obstacles.iter().skip(i + 1) {
                assert!((a.center() - b.center()).norm() >= floor - 1e-9);
            }
        }
    }

    #[test]
    fn obstacles_stay_inside_extent() {
        let w = default_world(5, 2.1);
        for o in &w.obstacles {
            assert!(o.x - o.radius >= 0.0 && o.x + o.radius <= w.width);
            assert!(o.y - o.radius >= 0.0 && o.y + o.radius <= w.height);
        }
    }

    #[test]
    fn infeasible_requests_error() {
        assert!(gen_world(1, (30.0, 12.0), 0.5, (0.15, 0.35)).is_err());
        assert!(gen_world(1, (10.0, 12.0), 2.0, (0.15, 0.35)).is_err());
        assert!(gen_world(1, (30.0, 12.0), 2.0, (0.35, 0.15)).is_err());
    }

    #[test]
    fn sensing_radius_covering_world_sees_everything() {
        let w = default_world(9, 2.1);
        let mut state = SimState::at_rest(w.start_point(), &w);
        sense(&w, w.start_point(), 100.0, &mut state);
        assert_eq!(state.sensed_count, w.obstacles.len());
    }

    #[test]
    fn tiny_radius_far_from_obstacles_sees_nothing() {
        let w = default_world(9, 3.0);
        let mut state = SimState::at_rest(w.start_point(), &w);
        // The start disc is clear by construction.
        sense(&w, w.start_point(), 0.05, &mut state);
        assert_eq!(state.sensed_count, 0);
    }

    #[test]
    fn sensing_is_idempotent_and_monotone() {
        let w = default_world(9, 2.1);
        let mut state = SimState::at_rest(w.start_point(), &w);
        sense(&w, w.start_point(), 5.0, &mut state);
        let after_first = state.sensed_count;
        assert!(after_first > 0);
        sense(&w, w.start_point(), 5.0, &mut state);
        assert_eq!(state.sensed_count, after_first);
        // Sensing elsewhere only grows the set.
        sense(&w, w.goal_point(), 5.0, &mut state);
        assert!(state.sensed_count >= after_first);
    }

    #[test]
    fn boundary_intersection_rule() {
        let mut w = default_world(1, 3.0);
        w.obstacles = vec![Circle {
            x: 10.0,
            y: 6.0,
            radius: 0.5,
        }];
        let w = w.clone().with_index();
        // Distance to center 2.0, to surface 1.5: radius 1.4 misses...
        let mut miss = SimState::at_rest(Vec2::new(8.0, 6.0), &w);
        sense(&w, miss.position, 1.4, &mut miss);
        assert_eq!(miss.sensed_count, 0);
        // ...radius 1.6 reaches the boundary.
        let mut hit = SimState::at_rest(Vec2::new(8.0, 6.0), &w);
        sense(&w, hit.position, 1.6, &mut hit);
        assert_eq!(hit.sensed_count, 1);
    }

    #[test]
    fn json_round_trip() {
        let w = default_world(12, 2.1);
        let s = w.to_json();
        let back = World::from_json(&s).unwrap();
        assert_eq!(w, back);
        // The rebuilt index answers queries identically.
        let p = Vec2::new(14.0, 6.0);
        assert_eq!(
            w.nearest_surface(p).map(|(d, _)| d),
            back.nearest_surface(p).map(|(d, _)| d)
        );
    }

    #[test]
    fn nearest_surface_matches_brute_force() {
        let w = default_world(3, 1.3);
        for k in 0..50 {
            let p = Vec2::new(
                (k as f64 * 0.61) % w.width,
                (k as f64 * 0.37) % w.height,
            );
            let brute = w
                .obstacles
                .iter()
                .map(|o| o.surface_distance(p))
                .fold(f64::INFINITY, f64::min);
            let (d, _) = w.nearest_surface(p).unwrap();
            assert!((d - brute).abs() < 1e-12, "point {p:?}: {d} vs {brute}");
        }
    }
}
