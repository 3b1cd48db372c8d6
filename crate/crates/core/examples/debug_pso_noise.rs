use plantune_core::pso::{PsoHyper, Swarm};
use plantune_core::rng::RngStream;
use plantune_core::space::{ParamSpace, ParamVector};
use rand_distr::{Distribution, Normal};
use std::sync::Mutex;

fn sphere(t: &ParamVector) -> f64 {
    t.values.iter().map(|x| x * x).sum()
}

fn main() {
    let space = ParamSpace::from_bounds(&[(-5.0, 5.0); 3]).unwrap();
    for steps in [8usize, 10, 12, 15, 20, 25] {
        let run = |seed: u64, noisy: bool| -> f64 {
            let mut rng = RngStream::new(seed, 0).rng();
            let noise_rng = Mutex::new(RngStream::new(seed, 99).rng());
            let gauss = Normal::new(0.0, 0.1).unwrap();
            let mut s = Swarm::init(&space, 20, PsoHyper::default(), &mut rng).unwrap();
            for _ in 0..steps {
                s.step(
                    |t| {
                        let v = sphere(t);
                        Ok(if noisy { v + gauss.sample(&mut *noise_rng.lock().unwrap()) } else { v })
                    },
                    &mut rng,
                ).unwrap();
            }
            let (theta, _) = s.best().unwrap();
            sphere(&theta)
        };
        let mut clean: Vec<f64> = (0..20).map(|s| run(600 + s, false)).collect();
        let mut noisy: Vec<f64> = (0..20).map(|s| run(600 + s, true)).collect();
        clean.sort_by(f64::total_cmp);
        noisy.sort_by(f64::total_cmp);
        let cm = 0.5 * (clean[9] + clean[10]);
        let nm = 0.5 * (noisy[9] + noisy[10]);
        println!("steps {steps}: clean {cm:.5} noisy {nm:.5} ratio {:.2}", nm / cm);
    }
}
