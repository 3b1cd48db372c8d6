use plantune_core::rng::RngStream;
use plantune_core::sim::world::gen_world;
use plantune_core::sim::{plan_only_eval, PlannerConfig, SimConstants};

fn main() {
    let c = SimConstants::default();
    for seed in [31u64, 32, 33, 34, 35] {
        let w = gen_world(seed, (30.0, 12.0), 1.3, (0.15, 0.35)).unwrap();
        print!("seed {seed}: ");
        for w_col in [0.1, 1.0, 10.0] {
            let cfg = PlannerConfig { w_col, v_des: 2.0, ..PlannerConfig::default() };
            let mut rng = RngStream::new(6, 0).rng();
            let mut total = 0u64;
            let mut fails = 0;
            for _ in 0..5 {
                match plan_only_eval(&w, &cfg, &c, &mut rng) {
                    Ok(m) => total += m.refine_iters as u64,
                    Err(_) => fails += 1,
                }
            }
            print!("w_col {w_col}: iters {total} fails {fails} | ");
        }
        println!();
    }
}
