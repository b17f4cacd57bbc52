//! Sample a ground-truth network, inspect it, and export the artifacts.
//!
//! ```bash
//! cargo run --release -p scaling-frontier --example sample_network
//! ```

use scaling_frontier::dgp::{sample_batch, sample_ground_truth};
use scaling_frontier::rng::substream;

fn main() {
    let (d, k, tau, seed) = (10usize, 100u64, 1e-6, 42u64);
    let mut rng = substream(seed, 0);
    let net = sample_ground_truth(d, k, tau, &mut rng).expect("valid parameters");

    println!("sampled ground truth: d = {d}, K = {k}, tau = {tau:e}");
    println!("  atoms retained:      {}", net.atom_count());
    println!("  discarded mass:      {:.3e}", net.truncation_residual());
    println!("  mass sum:            {:.15}", net.masses().iter().sum::<f64>());
    println!("  largest mass:        {:.5}", net.masses().iter().cloned().fold(0.0, f64::max));
    let plus = net.signs().iter().filter(|&&s| s > 0).count();
    println!("  sign split:          {plus} plus / {} minus", net.atom_count() - plus);

    let batch = sample_batch(&net, 8, &mut rng);
    println!("\nfirst labels from the stream (logit -> label):");
    for t in 0..batch.len() {
        println!("  {:+8.4} -> {}", batch.logits()[t], batch.labels()[t]);
    }

    let dir = std::env::temp_dir().join("scaling-frontier-examples");
    std::fs::create_dir_all(&dir).expect("create output dir");
    let json_path = dir.join("network.json");
    std::fs::write(&json_path, format!("{:#}\n", net.to_json(seed))).expect("write json");
    let csv_path = dir.join("batch.csv");
    std::fs::write(&csv_path, sample_batch(&net, 1000, &mut rng).to_csv()).expect("write csv");
    println!("\nwrote {}", json_path.display());
    println!("wrote {}", csv_path.display());
}
