//! Bound-vs-width curves at fixed compute budgets (the U-shaped trade-off).
//!
//! For each budget C, widths n span [1, C/d] and tokens are T = C/(d n).
//! The curves expose the compute tension: too narrow wastes the budget on
//! misspecification, too wide on estimation, and a lopsided allocation at a
//! large budget can lose to a balanced small one.
//!
//! ```bash
//! cargo run --release -p scaling-frontier --example bound_curves
//! ```

use scaling_frontier::frontier::{budget_curve, log_grid, optimal_width};
use scaling_frontier::plot::LogLogPlot;

fn main() {
    let (d, k) = (10u64, 100u64);
    let budgets = [1e8, 1e10, 1e12];

    let mut plot = LogLogPlot::new(
        &format!("error bound vs width (d={d}, K={k})"),
        "hidden width n",
        "bound total (nats)",
    );
    for &c in &budgets {
        let grid = log_grid(1, (c / d as f64) as u64, 64);
        let rows = budget_curve(c, d, k, &grid).expect("feasible grid");
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|(n, r)| r.as_ref().map(|r| (*n as f64, r.total_nats)))
            .collect();
        let best = optimal_width(c, d, k).expect("feasible budget");
        println!(
            "C = {c:>6e}: optimal n* = {:>6}, T* = {:>12.1}, bound = {:.4} nats",
            best.n_star, best.t_star, best.bound_total_nats
        );
        plot.markers.push((best.n_star as f64, best.bound_total_nats));
        plot.add_series(&format!("C={c:e}"), points, false);
    }

    let dir = std::env::temp_dir().join("scaling-frontier-examples");
    std::fs::create_dir_all(&dir).expect("create output dir");
    let path = dir.join("bound_curves.svg");
    std::fs::write(&path, plot.render()).expect("write svg");
    println!("\nwrote {}", path.display());
}
