use plantune_core::sim::world::gen_world;

fn main() {
    for spacing in [3.0f64, 2.1, 1.3, 0.9] {
        let radius = if spacing > 1.0 { (0.15, 0.35) } else { (0.12, 0.28) };
        let mut means = Vec::new();
        for seed in 0..10 {
            let w = gen_world(seed, (30.0, 12.0), spacing, radius).unwrap();
            if let Some(m) = w.mean_nearest_spacing() {
                means.push(m / spacing);
            }
        }
        let avg: f64 = means.iter().sum::<f64>() / means.len() as f64;
        let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("spacing {spacing}: mean ratio {avg:.3} range [{min:.3}, {max:.3}]");
    }
}
