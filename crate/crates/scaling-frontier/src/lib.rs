//! Information-theoretic scaling laws for resampled two-layer networks.
//!
//! The crate samples a Dirichlet-process ground-truth network, builds its
//! width-n quantized resampling, evaluates the closed-form error bounds that
//! govern the estimation/misspecification trade-off, verifies each bound by
//! Monte Carlo, and computes the compute-optimal width frontier under a
//! `d * n * T <= C` FLOP constraint.
//!
//! Modules:
//! - [`dgp`]: ground-truth sampling, evaluation, and data streams.
//! - [`constrained`]: resampled width-n networks and sphere quantization.
//! - [`bounds`]: closed-form bound evaluation and decomposition.
//! - [`frontier`]: budget-constrained width optimization and slope fits.
//! - [`verify`]: Monte Carlo checks of every inequality.
//! - [`posterior`]: exact-Bayes sequential prediction at desk scale.
//! - [`plot`]: native SVG rendering for the log-log figures.
//! - [`cli`]: the `scaling-frontier` binary's command surface.
//!
//! Every stochastic routine takes an explicit seed or RNG handle; identical
//! seeds give bit-identical results regardless of thread count. Runnable
//! walkthroughs live in `examples/`.

pub mod bounds;
pub mod cli;
pub mod constrained;
pub mod dgp;
pub mod frontier;
pub mod plot;
pub mod posterior;
pub mod rng;
pub mod verify;

mod numeric;

pub use bounds::{BoundForm, BoundReport};
pub use constrained::ConstrainedNetwork;
pub use dgp::{DataBatch, GroundTruthNetwork};
pub use frontier::FrontierPoint;
pub use posterior::HypothesisSpace;
pub use verify::McEstimate;
