//! Evaluate both closed-form bounds at one configuration and show the
//! estimation/misspecification decomposition.
//!
//! ```bash
//! cargo run --release -p scaling-frontier --example bound_report
//! ```

use scaling_frontier::bounds::{bound_corollary, bound_theorem2, optimal_epsilon};

fn main() {
    let (n, k, d) = (100u64, 100u64, 10u64);
    let t = 1e6;

    println!("configuration: n = {n}, K = {k}, d = {d}, T = {t:e}\n");
    let eps_star = optimal_epsilon(n, k, t).expect("valid arguments");
    println!("optimal quantization radius: {eps_star:.6}\n");

    println!(
        "{:>10} {:>12} {:>14} {:>18} {:>14}",
        "form", "epsilon", "estimation", "misspecification", "total"
    );
    for eps in [3.0, 1.0, 0.1, eps_star] {
        let r = bound_theorem2(n, k, d, t, eps).expect("valid arguments");
        println!(
            "{:>10} {:>12.6} {:>14.6} {:>18.6} {:>14.6}",
            r.form.to_string(),
            eps,
            r.estimation_nats,
            r.misspecification_nats,
            r.total_nats
        );
    }
    let c = bound_corollary(n, k, d, t).expect("valid arguments");
    println!(
        "{:>10} {:>12} {:>14.6} {:>18.6} {:>14.6}",
        c.form.to_string(),
        "-",
        c.estimation_nats,
        c.misspecification_nats,
        c.total_nats
    );

    println!("\nhorizon scaling (epsilon-optimized form):");
    for t in [1e4, 1e5, 1e6, 1e7, 1e8] {
        let r = bound_corollary(n, k, d, t).expect("valid arguments");
        println!("  T = {t:>9e}: total = {:.6} nats", r.total_nats);
    }
}
