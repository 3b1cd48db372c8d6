//! Grid A* over the sensed obstacle set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::sim::traj::Vec2;
use crate::sim::world::World;

/// Result of a grid search: waypoints in world coordinates (start and goal
/// included) plus the number of node expansions.
pub struct GridPath {
    pub points: Vec<Vec2>,
    pub expansions: u32,
}

struct Node {
    f: f64,
    tie: u64,
    idx: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.tie == other.tie
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Min-heap on f with FIFO tie break for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.tie.cmp(&self.tie))
    }
}

/// Occupancy view of the sensed world at a fixed cell size.
pub struct OccupancyGrid {
    cols: usize,
    rows: usize,
    cell: f64,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    /// Cells whose center lies within `inflation` of a sensed obstacle
    /// surface are blocked.
    pub fn from_sensed(world: &World, sensed: &[bool], cell: f64, inflation: f64) -> Self {
        let cols = (world.width / cell).ceil() as usize;
        let rows = (world.height / cell).ceil() as usize;
        let mut blocked = vec![false; cols * rows];
        for (i, o) in world.obstacles.iter().enumerate() {
            if !sensed[i] {
                continue;
            }
            let reach = o.radius + inflation;
            let x0 = (((o.x - reach) / cell).floor().max(0.0)) as usize;
            let x1 = ((((o.x + reach) / cell).ceil()) as usize).min(cols.saturating_sub(1));
            let y0 = (((o.y - reach) / cell).floor().max(0.0)) as usize;
            let y1 = ((((o.y + reach) / cell).ceil()) as usize).min(rows.saturating_sub(1));
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    let center = Vec2::new((cx as f64 + 0.5) * cell, (cy as f64 + 0.5) * cell);
                    if o.surface_distance(center) <= inflation {
                        blocked[cy * cols + cx] = true;
                    }
                }
            }
        }
        Self {
            cols,
            rows,
            cell,
            blocked,
        }
    }

    fn cell_of(&self, p: Vec2) -> Option<usize> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let cx = (p.x / self.cell) as usize;
        let cy = (p.y / self.cell) as usize;
        if cx >= self.cols || cy >= self.rows {
            return None;
        }
        Some(cy * self.cols + cx)
    }

    fn center(&self, idx: usize) -> Vec2 {
        let cx = idx % self.cols;
        let cy = idx / self.cols;
        Vec2::new((cx as f64 + 0.5) * self.cell, (cy as f64 + 0.5) * self.cell)
    }

    pub fn is_blocked(&self, p: Vec2) -> bool {
        self.cell_of(p).map_or(true, |i| self.blocked[i])
    }

    /// 8-connected A* from `start` to `goal` (octile heuristic, no corner
    /// cutting). `None` when no path exists in the sensed map.
    pub fn astar(&self, start: Vec2, goal: Vec2) -> Option<GridPath> {
        let s = self.cell_of(start)?;
        let g = self.cell_of(goal)?;
        if self.blocked[s] || self.blocked[g] {
            return None;
        }
        let n = self.cols * self.rows;
        let mut g_cost = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        let mut tie = 0u64;
        let mut expansions = 0u32;

        let h = |idx: usize| -> f64 {
            let a = self.center(idx);
            let b = self.center(g);
            let dx = ((a.x - b.x) / self.cell).abs();
            let dy = ((a.y - b.y) / self.cell).abs();
            // Octile distance in cell units.
            (dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)) * self.cell
        };

        g_cost[s] = 0.0;
        heap.push(Node {
            f: h(s),
            tie,
            idx: s,
        });

        const DIRS: [(i64, i64, f64); 8] = [
            (1, 0, 1.0),
            (-1, 0, 1.0),
            (0, 1, 1.0),
            (0, -1, 1.0),
            (1, 1, std::f64::consts::SQRT_2),
            (1, -1, std::f64::consts::SQRT_2),
            (-1, 1, std::f64::consts::SQRT_2),
            (-1, -1, std::f64::consts::SQRT_2),
        ];

        while let Some(Node { idx, .. }) = heap.pop() {
            if closed[idx] {
                continue;
            }
            closed[idx] = true;
            expansions += 1;
            if idx == g {
                let mut points = vec![goal];
                let mut cur = g;
                while cur != s {
                    cur = parent[cur];
                    points.push(self.center(cur));
                }
                points.push(start);
                points.reverse();
                // First/last grid centers are redundant next to the exact
                // endpoints when they share a cell.
                return Some(GridPath { points, expansions });
            }
            let cx = (idx % self.cols) as i64;
            let cy = (idx / self.cols) as i64;
            for (dx, dy, step) in DIRS {
                let nx = cx + dx;
                let ny = cy + dy;
                if nx < 0 || ny < 0 || nx >= self.cols as i64 || ny >= self.rows as i64 {
                    continue;
                }
                let nidx = ny as usize * self.cols + nx as usize;
                if self.blocked[nidx] || closed[nidx] {
                    continue;
                }
                // No corner cutting on diagonal moves.
                if dx != 0 && dy != 0 {
                    let side_a = cy as usize * self.cols + nx as usize;
                    let side_b = ny as usize * self.cols + cx as usize;
                    if self.blocked[side_a] || self.blocked[side_b] {
                        continue;
                    }
                }
                let cand = g_cost[idx] + step * self.cell;
                if cand < g_cost[nidx] {
                    g_cost[nidx] = cand;
                    parent[nidx] = idx;
                    tie += 1;
                    heap.push(Node {
                        f: cand + h(nidx),
                        tie,
                        idx: nidx,
                    });
                }
            }
        }
        None
    }
}

/// Greedy line-of-sight shortcutting of a grid path: from each kept point,
/// jump to the farthest later point whose connecting segment keeps
/// `clearance` to the sensed obstacles.
pub fn shortcut(
    world: &World,
    sensed: &[bool],
    points: &[Vec2],
    clearance: f64,
) -> Vec<Vec2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let free = |a: Vec2, b: Vec2| -> bool {
        let len = (b - a).norm();
        let steps = (len / 0.1).ceil().max(1.0) as usize;
        (0..=steps).all(|i| {
            let p = a + (b - a) * (i as f64 / steps as f64);
            world
                .nearest_sensed_surface(p, sensed)
                .map_or(true, |(d, _)| d >= clearance)
        })
    };
    let mut kept = vec![points[0]];
    let mut i = 0;
    while i < points.len() - 1 {
        let mut j = points.len() - 1;
        while j > i + 1 && !free(points[i], points[j]) {
            j -= 1;
        }
        kept.push(points[j]);
        i = j;
    }
    kept
}
