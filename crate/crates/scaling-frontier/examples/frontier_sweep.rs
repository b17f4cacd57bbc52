//! The compute-optimal frontier: optimal width per budget and the log-log
//! slopes of parameter count against budget and against token count.
//!
//! ```bash
//! cargo run --release -p scaling-frontier --example frontier_sweep
//! ```

use scaling_frontier::frontier::{frontier_sweep, slope_estimate, SlopeAxis};
use scaling_frontier::plot::LogLogPlot;

fn main() {
    let (d, k) = (10u64, 100u64);
    let budgets: Vec<f64> = (0..13).map(|i| 1e10 * 10f64.powf(i as f64 / 2.0)).collect();
    let points = frontier_sweep(&budgets, d, k).expect("valid sweep");

    println!("{:>12} {:>10} {:>14} {:>12} {:>12}", "C", "n*", "T*", "d*n", "bound");
    for p in &points {
        println!(
            "{:>12.3e} {:>10} {:>14.4e} {:>12} {:>12.5}",
            p.c,
            p.n_star,
            p.t_star,
            p.param_count(),
            p.bound_total_nats
        );
        assert!(p.param_count() <= (3.0 * p.c).sqrt() + p.d as f64);
    }

    let slope_c = slope_estimate(&points, SlopeAxis::Budget).expect("fit");
    let slope_t = slope_estimate(&points, SlopeAxis::Tokens).expect("fit");
    println!("\nslope of ln(d n*) vs ln C:  {slope_c:.4}  (sqrt-C growth up to log factors)");
    println!("slope of ln(d n*) vs ln T*: {slope_t:.4}  (approaches 1 as budgets grow)");
    println!("every point satisfies d n* <= sqrt(3C) + d");

    let mut plot = LogLogPlot::new(
        "compute-optimal allocation",
        "token count T*",
        "parameter count d*n",
    );
    let vs_t: Vec<(f64, f64)> = points.iter().map(|p| (p.t_star, p.param_count())).collect();
    let reference =
        vec![vs_t[0], (vs_t.last().unwrap().0, vs_t[0].1 * vs_t.last().unwrap().0 / vs_t[0].0)];
    plot.add_series(&format!("optimal allocation (slope {slope_t:.3})"), vs_t, false);
    plot.add_series("slope-1 reference", reference, true);

    let dir = std::env::temp_dir().join("scaling-frontier-examples");
    std::fs::create_dir_all(&dir).expect("create output dir");
    let path = dir.join("frontier.svg");
    std::fs::write(&path, plot.render()).expect("write svg");
    println!("\nwrote {}", path.display());
}
