use plantune_core::rng::RngStream;
use plantune_core::sim::world::{gen_world, sense};
use plantune_core::sim::{plan, PlannerConfig, SimConstants, SimState};
use plantune_core::sim::traj::Vec2;
use plantune_core::sim::plan_only_eval;

fn main() {
    let consts = SimConstants::default();
    // empty world near-straight case
    let w = gen_world(1, (30.0, 12.0), 40.0, (0.15, 0.35)).unwrap();
    let state = SimState::at_rest(w.start_point(), &w);
    let cfg = PlannerConfig::default();
    let mut rng = RngStream::new(2, 0).rng();
    let goal = w.start_point() + Vec2::new(cfg.h_pl * 0.9, 0.0);
    match plan(&w, &state, goal, &cfg, &consts, true, &mut rng) {
        Ok(m) => {
            let arc = m.trajectory.arc_length(0.01);
            let direct = (goal - w.start_point()).norm();
            println!("empty: arc {arc:.4} direct {direct:.4} ratio {:.4} iters {} n_s {} pieces {}",
                arc/direct, m.refine_iters, m.n_s, m.trajectory.pieces.len());
            for (i, p) in m.trajectory.pieces.iter().enumerate() {
                println!("  piece {i}: dur {:.3} start {:?} end {:?} vel_start {:?} vel_end {:?}",
                    p.duration, (p.position(0.0).x, p.position(0.0).y),
                    (p.position(p.duration).x, p.position(p.duration).y),
                    (p.velocity(0.0).x, p.velocity(0.0).y),
                    (p.velocity(p.duration).x, p.velocity(p.duration).y));
            }
        }
        Err(e) => println!("empty world plan FAILED: {e}"),
    }

    // cluttered case
    let w = gen_world(11, (30.0, 12.0), 2.1, (0.15, 0.35)).unwrap();
    let mut state = SimState::at_rest(w.start_point(), &w);
    sense(&w, w.start_point(), consts.sensing_radius, &mut state);
    let mut rng = RngStream::new(4, 0).rng();
    let goal = w.start_point() + Vec2::new(cfg.h_pl * 0.9, 0.0);
    match plan(&w, &state, goal, &cfg, &consts, true, &mut rng) {
        Ok(m) => println!("clutter: ok n_s {} iters {}", m.n_s, m.refine_iters),
        Err(e) => println!("clutter plan FAILED: {e}"),
    }

    // plan_only_eval determinism case
    let w = gen_world(21, (30.0, 12.0), 2.1, (0.15, 0.35)).unwrap();
    match plan_only_eval(&w, &cfg, &consts, &mut RngStream::new(9, 1).rng()) {
        Ok(m) => println!("poe: ok n_s {} iters {}", m.n_s, m.refine_iters),
        Err(e) => println!("poe FAILED: {e}"),
    }
}
