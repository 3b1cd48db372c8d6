use plantune_core::sim::traj::{fit_through_waypoints, Vec2};

fn main() {
    // Reproduce the empty-world fit: straight 5.4 m, 6 pieces, v_des = 2.
    let v_des = 2.0f64;
    let n_pol = 6usize;
    let len = 5.4f64;
    let waypoints: Vec<Vec2> = (0..=n_pol)
        .map(|i| Vec2::new(2.0 + len * i as f64 / n_pol as f64, 6.0))
        .collect();
    let durations: Vec<f64> = waypoints
        .windows(2)
        .map(|w| ((w[1] - w[0]).norm() / v_des).max(0.05))
        .collect();
    let traj = fit_through_waypoints(&waypoints, &durations, Vec2::zeros(), Vec2::zeros(), 0.85 * v_des);
    let mut max_a: f64 = 0.0;
    let mut max_v: f64 = 0.0;
    let mut feas = 0.0;
    let mut n = 0;
    for piece in &traj.pieces {
        for i in 0..=20 {
            let t = piece.duration * i as f64 / 20.0;
            let sp = piece.velocity(t).norm();
            let ac = piece.acceleration(t).norm();
            max_a = max_a.max(ac);
            max_v = max_v.max(sp);
            let vo = (sp - 1.3 * v_des).max(0.0);
            let ao = (ac - 6.0).max(0.0);
            feas += vo * vo + ao * ao;
            n += 1;
        }
    }
    feas *= traj.duration() / n as f64;
    println!("max speed {max_v:.3} (cap {:.2}) max accel {max_a:.3} feas {feas:.4}", 1.3 * v_des);
    println!("durations: {:?}", traj.pieces.iter().map(|p| p.duration).collect::<Vec<_>>());
}
