//! Piecewise-quintic 2-D trajectories.
//!
//! Each piece is a degree-5 polynomial per axis built from endpoint
//! position/velocity/acceleration constraints, so chained pieces are C2
//! continuous by construction.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;

/// One quintic segment: coefficient `c[i]` multiplies `t^i`, local time
/// `t` runs over `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub coeffs_x: [f64; 6],
    pub coeffs_y: [f64; 6],
    pub duration: f64,
}

fn poly_eval(c: &[f64; 6], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * t + k)
}

fn poly_deriv(c: &[f64; 6]) -> [f64; 6] {
    let mut d = [0.0; 6];
    for i in 1..6 {
        d[i - 1] = c[i] * i as f64;
    }
    d
}

/// Quintic from boundary conditions (position, velocity, acceleration at
/// both ends) over duration `tau`.
fn quintic(p0: f64, v0: f64, a0: f64, p1: f64, v1: f64, a1: f64, tau: f64) -> [f64; 6] {
    let t = tau;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let c0 = p0;
    let c1 = v0;
    let c2 = 0.5 * a0;
    let dp = p1 - p0 - v0 * t - 0.5 * a0 * t2;
    let dv = v1 - v0 - a0 * t;
    let da = a1 - a0;
    let c3 = (10.0 * dp - 4.0 * dv * t + 0.5 * da * t2) / t3;
    let c4 = (-15.0 * dp + 7.0 * dv * t - da * t2) / t4;
    let c5 = (6.0 * dp - 3.0 * dv * t + 0.5 * da * t2) / t5;
    [c0, c1, c2, c3, c4, c5]
}

impl Piece {
    /// Build a piece from endpoint constraints.
    pub fn from_boundary(
        p0: Vec2,
        v0: Vec2,
        a0: Vec2,
        p1: Vec2,
        v1: Vec2,
        a1: Vec2,
        duration: f64,
    ) -> Piece {
        debug_assert!(duration > 0.0);
        Piece {
            coeffs_x: quintic(p0.x, v0.x, a0.x, p1.x, v1.x, a1.x, duration),
            coeffs_y: quintic(p0.y, v0.y, a0.y, p1.y, v1.y, a1.y, duration),
            duration,
        }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        Vec2::new(poly_eval(&self.coeffs_x, t), poly_eval(&self.coeffs_y, t))
    }

    pub fn velocity(&self, t: f64) -> Vec2 {
        let dx = poly_deriv(&self.coeffs_x);
        let dy = poly_deriv(&self.coeffs_y);
        Vec2::new(poly_eval(&dx, t), poly_eval(&dy, t))
    }

    pub fn acceleration(&self, t: f64) -> Vec2 {
        let ax = poly_deriv(&poly_deriv(&self.coeffs_x));
        let ay = poly_deriv(&poly_deriv(&self.coeffs_y));
        Vec2::new(poly_eval(&ax, t), poly_eval(&ay, t))
    }

    /// Exact integral over the piece of the squared jerk on both axes.
    /// Pieces of degree < 3 contribute zero.
    pub fn squared_jerk_integral(&self) -> f64 {
        let mut total = 0.0;
        for c in [&self.coeffs_x, &self.coeffs_y] {
            // Jerk coefficients: j_k = c_{k+3} * (k+1)(k+2)(k+3), k = 0..2.
            let j: [f64; 3] = [
                c[3] * 6.0,
                c[4] * 24.0,
                c[5] * 60.0,
            ];
            for (k, jk) in j.iter().enumerate() {
                for (l, jl) in j.iter().enumerate() {
                    let p = (k + l + 1) as f64;
                    total += jk * jl * self.duration.powf(p) / p;
                }
            }
        }
        total
    }
}

/// A time-parameterized 2-D trajectory made of quintic pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub pieces: Vec<Piece>,
}

impl Trajectory {
    pub fn new(pieces: Vec<Piece>) -> Trajectory {
        debug_assert!(!pieces.is_empty());
        Trajectory { pieces }
    }

    /// Total duration `T_m`.
    pub fn duration(&self) -> f64 {
        self.pieces.iter().map(|p| p.duration).sum()
    }

    fn locate(&self, t: f64) -> (&Piece, f64) {
        let mut remaining = t.max(0.0);
        for piece in &self.pieces {
            if remaining <= piece.duration {
                return (piece, remaining);
            }
            remaining -= piece.duration;
        }
        let last = self.pieces.last().expect("non-empty");
        (last, last.duration)
    }

    /// Position at global time `t`, clamped to `[0, T_m]`.
    pub fn position(&self, t: f64) -> Vec2 {
        let (piece, local) = self.locate(t);
        piece.position(local)
    }

    pub fn velocity(&self, t: f64) -> Vec2 {
        let (piece, local) = self.locate(t);
        piece.velocity(local)
    }

    pub fn acceleration(&self, t: f64) -> Vec2 {
        let (piece, local) = self.locate(t);
        piece.acceleration(local)
    }

    /// Sum of per-piece squared-jerk integrals.
    pub fn squared_jerk_integral(&self) -> f64 {
        self.pieces.iter().map(|p| p.squared_jerk_integral()).sum()
    }

    /// Worst position/velocity mismatch across piece boundaries.
    pub fn continuity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.pieces.windows(2) {
            let end_p = w[0].position(w[0].duration);
            let start_p = w[1].position(0.0);
            let end_v = w[0].velocity(w[0].duration);
            let start_v = w[1].velocity(0.0);
            worst = worst
                .max((end_p - start_p).norm())
                .max((end_v - start_v).norm());
        }
        worst
    }

    /// Time at which the arc length from `t0` first reaches `s`, walked at
    /// 1 cm resolution; `None` when the remaining trajectory is shorter.
    pub fn time_at_arc_length(&self, t0: f64, s: f64) -> Option<f64> {
        let total = self.duration();
        let mut t = t0.max(0.0);
        let mut acc = 0.0;
        let mut prev = self.position(t);
        let dt = 0.005;
        while t < total {
            t = (t + dt).min(total);
            let p = self.position(t);
            acc += (p - prev).norm();
            prev = p;
            if acc >= s {
                return Some(t);
            }
        }
        None
    }

    /// Polyline arc length sampled at the given time step.
    pub fn arc_length(&self, dt: f64) -> f64 {
        let total = self.duration();
        let mut acc = 0.0;
        let mut t = 0.0;
        let mut prev = self.position(0.0);
        while t < total {
            t = (t + dt).min(total);
            let p = self.position(t);
            acc += (p - prev).norm();
            prev = p;
        }
        acc
    }
}

/// Fit a chain of quintic pieces through `waypoints` with per-piece
/// durations and endpoint velocities; interior junction velocities follow
/// the finite-difference tangent scaled to `junction_speed`, accelerations
/// are zero at every junction.
pub fn fit_through_waypoints(
    waypoints: &[Vec2],
    durations: &[f64],
    v_start: Vec2,
    v_end: Vec2,
    junction_speed: f64,
) -> Trajectory {
    let n = waypoints.len();
    debug_assert!(n >= 2 && durations.len() == n - 1);
    let mut velocities = Vec::with_capacity(n);
    velocities.push(v_start);
    for i in 1..n - 1 {
        let tangent = waypoints[i + 1] - waypoints[i - 1];
        let norm = tangent.norm();
        let v = if norm > 1e-9 {
            tangent / norm * junction_speed
        } else {
            Vec2::zeros()
        };
        velocities.push(v);
    }
    velocities.push(v_end);

    let zero = Vec2::zeros();
    let pieces = (0..n - 1)
        .map(|i| {
            Piece::from_boundary(
                waypoints[i],
                velocities[i],
                zero,
                waypoints[i + 1],
                velocities[i + 1],
                zero,
                durations[i].max(1e-3),
            )
        })
        .collect();
    Trajectory::new(pieces)
}
