//! Measure worst-case displacement of the sphere quantizer.
//!
//! Rounds random unit vectors onto the coordinate grid of step
//! `eps/sqrt(d)`, projects back to the sphere, and reports the largest
//! observed distance; every value stays below its epsilon.
//!
//! ```bash
//! cargo run --release -p scaling-frontier --example quantize_sphere
//! ```

use rand_distr::{Distribution, StandardNormal};
use scaling_frontier::constrained::quantize_to_cover;
use scaling_frontier::rng::substream;

fn main() {
    println!("{:>4} {:>8} {:>14} {:>14}", "d", "eps", "max distance", "mean distance");
    for &d in &[2usize, 10, 50] {
        for &eps in &[0.5f64, 0.1, 0.01] {
            let mut rng = substream(7, (d as u64) << 16 | (eps * 1000.0) as u64);
            let trials = 20_000;
            let mut max_dist = 0.0f64;
            let mut sum = 0.0;
            for _ in 0..trials {
                let mut w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.iter_mut().for_each(|x| *x /= norm);
                let q = quantize_to_cover(&w, eps).expect("unit input");
                let dist =
                    w.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                max_dist = max_dist.max(dist);
                sum += dist;
            }
            println!(
                "{d:>4} {eps:>8} {max_dist:>14.6} {:>14.6}   (bound {eps})",
                sum / trials as f64
            );
            assert!(max_dist <= eps);
        }
    }
    println!("\nall displacements within their quantization radius");
}
