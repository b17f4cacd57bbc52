//! Exact-Bayes sequential prediction over a 36-hypothesis space.
//!
//! Three runs: an omniscient singleton (zero loss, exactly), a truth drawn
//! from the prior (loss below the entropy rate H/T), and the jointly drawn
//! (truth, resampling) pair (loss below H/T plus the misspecification KL).
//!
//! ```bash
//! cargo run --release -p scaling-frontier --example posterior_simulation
//! ```

use scaling_frontier::constrained::eval_constrained;
use scaling_frontier::posterior::{
    build_tiny_space, default_codebook, estimate_reducible_loss, exact_entropy,
    run_coupled_scenario, run_trajectory_tracked, HypothesisSpace, PriorSpec, TruthMode,
};
use scaling_frontier::rng::substream;

fn main() {
    let codebook = default_codebook();
    let space = build_tiny_space(2, &codebook, 2, 1, PriorSpec::Uniform).expect("small space");
    let horizon = 50;
    println!(
        "hypothesis space: {} networks over a {}-codeword codebook, H(prior) = {:.4} nats",
        space.len(),
        codebook.len(),
        exact_entropy(space.prior())
    );

    // Omniscient singleton.
    let mut prior = vec![0.0; space.len()];
    prior[4] = 1.0;
    let singleton = HypothesisSpace::from_hypotheses(
        (0..space.len()).map(|j| space.hypothesis(j).clone()).collect(),
        prior,
        Some(4),
    )
    .expect("valid singleton");
    let truth = |x: &[f64]| eval_constrained(singleton.hypothesis(4), x).unwrap();
    let traj =
        run_trajectory_tracked(&singleton, &truth, Some(4), horizon, &mut substream(1, 0))
            .expect("trajectory");
    println!(
        "\nsingleton (omniscient): cumulative loss = {} nats over {horizon} steps",
        traj.cumulative_mean_nats
    );

    // Truth drawn from the prior.
    let est = estimate_reducible_loss(&space, TruthMode::DrawnFromPrior, horizon, 5_000, 2)
        .expect("entropy-rate bound holds");
    let bound = exact_entropy(space.prior()) / horizon as f64;
    println!(
        "prior-drawn truth:      loss = {:.5} +- {:.5} nats/step vs H/T = {bound:.5}",
        est.mean, est.stderr
    );

    // Jointly drawn truth and resampled network.
    let coupled =
        run_coupled_scenario(2, &codebook, 2, 2, 25, 2_000, 200, 3).expect("coupled scenario");
    println!(
        "coupled pair:           loss = {:.5} +- {:.5} nats/step vs H/T + misspec = {:.5} (pass = {})",
        coupled.loss.mean, coupled.loss.stderr, coupled.bound_nats, coupled.pass
    );
}
