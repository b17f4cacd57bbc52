//! Monte Carlo verification of the bound lemmas.
//!
//! Each check estimates the left-hand side of one inequality and tests it
//! against the closed-form right-hand side at the 3-sigma level. The bounds
//! are provable facts, so a violation indicates a bug (with one documented
//! exception: the distinct-class integral bound, see [`mc_distinct_atoms`]).
//!
//! Trials run on independent RNG substreams and reduce in a fixed order, so
//! results are identical for any thread count.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constrained::{eval_constrained, sample_constrained};
use crate::dgp::{eval_ground_truth, sample_ground_truth, stick_breaking_masses, DEFAULT_ATOM_CAP, DEFAULT_TAU};
use crate::numeric::{mean_and_stderr, sigmoid, softplus};
use crate::rng::{derive_seed, substream, Substream};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error(
        "{lemma}: estimate {estimate} (stderr {stderr}) exceeds bound {bound} \
         over {samples} samples{witness}"
    )]
    LemmaViolation {
        lemma: String,
        bound: f64,
        estimate: f64,
        stderr: f64,
        samples: u64,
        witness: String,
    },
}

/// A Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Flat iid sample: stderr is the sample standard deviation over
    /// `sqrt(len)`.
    pub fn from_samples(values: &[f64], seed: u64) -> Self {
        let (mean, stderr) = mean_and_stderr(values);
        McEstimate { mean, stderr, samples: values.len() as u64, seed }
    }

    /// Nested sample: one mean per outer draw. The spread of outer means
    /// already carries both variance levels (law of total variance), so the
    /// standard error divides by the number of outer draws while `samples`
    /// records the total draw count.
    pub fn from_outer_means(outer_means: &[f64], total_samples: u64, seed: u64) -> Self {
        let (mean, stderr) = mean_and_stderr(outer_means);
        McEstimate { mean, stderr, samples: total_samples, seed }
    }
}

/// KL divergence between Bernoulli(sigmoid(g)) and Bernoulli(sigmoid(g_tilde))
/// in nats, computed as `softplus(g_tilde) - softplus(g) + sigmoid(g)(g - g_tilde)`.
/// Finite and nonnegative for |g|, |g_tilde| up to ~1e300.
pub fn kl_bernoulli_sigmoid(g: f64, g_tilde: f64) -> f64 {
    (softplus(g_tilde) - softplus(g) + sigmoid(g) * (g - g_tilde)).max(0.0)
}

/// Outcome of a pointwise inequality sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub samples: u64,
    pub violations: u64,
    /// Largest value of `KL - (g - g_tilde)^2` seen; negative when the
    /// inequality held everywhere.
    pub max_excess_nats: f64,
    pub worst_pair: (f64, f64),
    pub seed: u64,
}

const POINTWISE_TOL: f64 = 1e-12;

/// Check `KL(g || g_tilde) <= (g - g_tilde)^2` pointwise over sampled pairs.
///
/// The scalar inequality implies the expectation form, so a single violating
/// pair falsifies the lemma; any violation is returned as an error carrying
/// the witness.
pub fn mc_lemma_kl_vs_sq<F>(
    pair_sampler: F,
    samples: u64,
    seed: u64,
) -> Result<PointwiseReport, VerifyError>
where
    F: Fn(&mut Substream) -> (f64, f64) + Sync,
{
    mc_lemma_kl_vs_sq_impl(pair_sampler, samples, seed, 1.0)
}

fn mc_lemma_kl_vs_sq_impl<F>(
    pair_sampler: F,
    samples: u64,
    seed: u64,
    inflation: f64,
) -> Result<PointwiseReport, VerifyError>
where
    F: Fn(&mut Substream) -> (f64, f64) + Sync,
{
    if samples == 0 {
        return Err(VerifyError::InvalidArguments("samples must be >= 1".into()));
    }
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<(u64, f64, (f64, f64))> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut violations = 0u64;
            let mut max_excess = f64::NEG_INFINITY;
            let mut worst = (f64::NAN, f64::NAN);
            for _ in 0..count {
                let (g, gt) = pair_sampler(&mut rng);
                let excess = inflation * kl_bernoulli_sigmoid(g, gt) - (g - gt) * (g - gt);
                if excess > max_excess {
                    max_excess = excess;
                    worst = (g, gt);
                }
                if excess > POINTWISE_TOL {
                    violations += 1;
                }
            }
            (violations, max_excess, worst)
        })
        .collect();
    let mut report = PointwiseReport {
        samples,
        violations: 0,
        max_excess_nats: f64::NEG_INFINITY,
        worst_pair: (f64::NAN, f64::NAN),
        seed,
    };
    for (v, m, w) in partials {
        report.violations += v;
        if m > report.max_excess_nats {
            report.max_excess_nats = m;
            report.worst_pair = w;
        }
    }
    if report.violations > 0 {
        return Err(VerifyError::LemmaViolation {
            lemma: "pointwise KL <= squared logit gap".into(),
            bound: POINTWISE_TOL,
            estimate: report.max_excess_nats,
            stderr: 0.0,
            samples,
            witness: format!(
                "; worst pair (g, g_tilde) = ({}, {})",
                report.worst_pair.0, report.worst_pair.1
            ),
        });
    }
    Ok(report)
}

fn check_nested_args(outer: u64, inner: u64) -> Result<(), VerifyError> {
    if outer == 0 || inner == 0 || outer * inner < 10_000 {
        return Err(VerifyError::InvalidArguments(format!(
            "need outer * inner >= 10^4 samples, got {outer} x {inner}"
        )));
    }
    Ok(())
}

fn one_sided_check(
    lemma: &str,
    bound: f64,
    est: McEstimate,
    witness: String,
) -> Result<McEstimate, VerifyError> {
    if est.mean <= bound + 3.0 * est.stderr {
        Ok(est)
    } else {
        Err(VerifyError::LemmaViolation {
            lemma: lemma.into(),
            bound,
            estimate: est.mean,
            stderr: est.stderr,
            samples: est.samples,
            witness,
        })
    }
}

/// Gaussian input vector drawn in place.
fn fill_gaussian(x: &mut [f64], rng: &mut Substream) {
    for xi in x {
        *xi = StandardNormal.sample(rng);
    }
}

/// Estimate `E[(F(X) - F_n0(X))^2]` over joint draws of the ground truth,
/// the exact-width resampling and the input; check it against `(K+1)/n`.
pub fn mc_sq_error_n0(
    d: usize,
    k: u64,
    n: usize,
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<McEstimate, VerifyError> {
    check_nested_args(outer, inner)?;
    let means: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|o| {
            let mut rng = substream(seed, o);
            let net = sample_ground_truth(d, k, DEFAULT_TAU, &mut rng).expect("valid dgp args");
            let cnet = sample_constrained(&net, n, 0.0, &mut rng).expect("valid width");
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            for _ in 0..inner {
                fill_gaussian(&mut x, &mut rng);
                let f = eval_ground_truth(&net, &x).expect("dims match");
                let g = eval_constrained(&cnet, &x).expect("dims match");
                acc += (f - g) * (f - g);
            }
            acc / inner as f64
        })
        .collect();
    let est = McEstimate::from_outer_means(&means, outer * inner, seed);
    let bound = (k as f64 + 1.0) / n as f64;
    one_sided_check(
        "exact-width resampling squared error <= (K+1)/n",
        bound,
        est,
        format!("; at (d, K, n) = ({d}, {k}, {n})"),
    )
}

/// Estimate `E[(F_n0(X) - F_n_eps(X))^2]` with both networks built from the
/// same resampled indices; check it against `d (K+1) eps^2 / n`.
pub fn mc_sq_error_quant(
    d: usize,
    k: u64,
    n: usize,
    epsilon: f64,
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<McEstimate, VerifyError> {
    check_nested_args(outer, inner)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(VerifyError::InvalidArguments("epsilon must be > 0".into()));
    }
    let means: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|o| {
            let mut rng = substream(seed, o);
            let net = sample_ground_truth(d, k, DEFAULT_TAU, &mut rng).expect("valid dgp args");
            let exact = sample_constrained(&net, n, 0.0, &mut rng).expect("valid width");
            let quant = exact.requantized(&net, epsilon).expect("same indices requantize");
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            for _ in 0..inner {
                fill_gaussian(&mut x, &mut rng);
                let a = eval_constrained(&exact, &x).expect("dims match");
                let b = eval_constrained(&quant, &x).expect("dims match");
                acc += (a - b) * (a - b);
            }
            acc / inner as f64
        })
        .collect();
    let est = McEstimate::from_outer_means(&means, outer * inner, seed);
    let bound = d as f64 * (k as f64 + 1.0) * epsilon * epsilon / n as f64;
    one_sided_check(
        "quantization squared error <= d(K+1)eps^2/n",
        bound,
        est,
        format!("; at (d, K, n, eps) = ({d}, {k}, {n}, {epsilon})"),
    )
}

/// Estimate the misspecification KL `E[KL(P(Y|F,X) || P(Y|F <- F_n_eps, X))]`
/// and check it against `3K(1 + d eps^2)/n`. `inflation` is a fault-injection
/// hook for the negative-control test; it is 1.0 in every real run.
#[allow(clippy::too_many_arguments)]
fn mc_misspec_kl_impl(
    d: usize,
    k: u64,
    n: usize,
    epsilon: f64,
    outer: u64,
    inner: u64,
    seed: u64,
    inflation: f64,
) -> Result<McEstimate, VerifyError> {
    check_nested_args(outer, inner)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(VerifyError::InvalidArguments("epsilon must be finite and >= 0".into()));
    }
    let means: Vec<f64> = (0..outer)
        .into_par_iter()
        .map(|o| {
            let mut rng = substream(seed, o);
            let net = sample_ground_truth(d, k, DEFAULT_TAU, &mut rng).expect("valid dgp args");
            let cnet = sample_constrained(&net, n, epsilon, &mut rng).expect("valid width");
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            for _ in 0..inner {
                fill_gaussian(&mut x, &mut rng);
                let f = eval_ground_truth(&net, &x).expect("dims match");
                let g = eval_constrained(&cnet, &x).expect("dims match");
                acc += inflation * kl_bernoulli_sigmoid(f, g);
            }
            acc / inner as f64
        })
        .collect();
    let est = McEstimate::from_outer_means(&means, outer * inner, seed);
    let bound = 3.0 * k as f64 * (1.0 + d as f64 * epsilon * epsilon) / n as f64;
    one_sided_check(
        "misspecification KL <= 3K(1+d eps^2)/n",
        bound,
        est,
        format!("; at (d, K, n, eps) = ({d}, {k}, {n}, {epsilon})"),
    )
}

/// See [`mc_misspec_kl_impl`]; the public entry point never inflates.
pub fn mc_misspec_kl(
    d: usize,
    k: u64,
    n: usize,
    epsilon: f64,
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<McEstimate, VerifyError> {
    mc_misspec_kl_impl(d, k, n, epsilon, outer, inner, seed, 1.0)
}

/// Count distinct classes when `n` categorical samples are drawn from a
/// stick-breaking measure of scale `K`, and check the mean against
/// `K ln(1 + n/K)`.
///
/// Caution: the exact mean is the urn sum `sum_{i<n} K/(K+i)`, which sits
/// strictly *above* the integral `K ln(1 + n/K)` (by at most one class), so
/// at high trial counts this check fails by construction; the hard bound
/// would need a `+1`. The check is kept in its stated form and reports the
/// violation honestly.
pub fn mc_distinct_atoms(
    k: u64,
    n: usize,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, VerifyError> {
    if trials < 1_000 {
        return Err(VerifyError::InvalidArguments(format!(
            "need at least 10^3 trials, got {trials}"
        )));
    }
    if n == 0 {
        return Err(VerifyError::InvalidArguments("n must be >= 1".into()));
    }
    const CHUNK: u64 = 256;
    let chunks = trials.div_ceil(CHUNK);
    let counts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut out = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let (masses, _) =
                    stick_breaking_masses(k, DEFAULT_TAU, DEFAULT_ATOM_CAP, &mut rng)
                        .expect("valid stick-breaking args");
                let cat = WeightedIndex::new(&masses).expect("positive masses");
                let mut drawn: Vec<usize> = (0..n).map(|_| cat.sample(&mut rng)).collect();
                drawn.sort_unstable();
                drawn.dedup();
                out.push(drawn.len() as f64);
            }
            out
        })
        .collect();
    let flat: Vec<f64> = counts.into_iter().flatten().collect();
    let est = McEstimate::from_samples(&flat, seed);
    let bound = k as f64 * (1.0 + n as f64 / k as f64).ln();
    one_sided_check(
        "mean distinct classes <= K ln(1+n/K)",
        bound,
        est,
        format!("; at (K, n) = ({k}, {n}); exact urn mean is sum_i K/(K+i)"),
    )
}

/// Estimate the first two moments of `F(X)` over joint draws of the network
/// and the input. Returns `(mean of F, mean of F^2)`.
pub fn mc_dgp_moments(
    d: usize,
    k: u64,
    samples: u64,
    seed: u64,
) -> Result<(McEstimate, McEstimate), VerifyError> {
    if samples < 10_000 {
        return Err(VerifyError::InvalidArguments(format!(
            "need at least 10^4 samples, got {samples}"
        )));
    }
    const NETS: u64 = 256;
    let inner = samples.div_ceil(NETS);
    let means: Vec<(f64, f64)> = (0..NETS)
        .into_par_iter()
        .map(|o| {
            let mut rng = substream(seed, o);
            let net = sample_ground_truth(d, k, DEFAULT_TAU, &mut rng).expect("valid dgp args");
            let mut x = vec![0.0; d];
            let mut acc = 0.0;
            let mut acc_sq = 0.0;
            for _ in 0..inner {
                fill_gaussian(&mut x, &mut rng);
                let f = eval_ground_truth(&net, &x).expect("dims match");
                acc += f;
                acc_sq += f * f;
            }
            (acc / inner as f64, acc_sq / inner as f64)
        })
        .collect();
    let first: Vec<f64> = means.iter().map(|m| m.0).collect();
    let second: Vec<f64> = means.iter().map(|m| m.1).collect();
    let total = NETS * inner;
    Ok((
        McEstimate::from_outer_means(&first, total, seed),
        McEstimate::from_outer_means(&second, total, seed),
    ))
}

/// One line of the verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub name: String,
    pub bound: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl LemmaCheck {
    fn passed(name: &str, bound: f64, est: &McEstimate) -> Self {
        LemmaCheck {
            name: name.into(),
            bound,
            estimate: est.mean,
            stderr: est.stderr,
            samples: est.samples,
            pass: true,
            detail: None,
        }
    }

    fn from_result(name: &str, bound: f64, result: Result<McEstimate, VerifyError>) -> Self {
        match result {
            Ok(est) => LemmaCheck::passed(name, bound, &est),
            Err(VerifyError::LemmaViolation { estimate, stderr, samples, witness, .. }) => {
                LemmaCheck {
                    name: name.into(),
                    bound,
                    estimate,
                    stderr,
                    samples,
                    pass: false,
                    detail: Some(format!("violated{witness}")),
                }
            }
            Err(other) => LemmaCheck {
                name: name.into(),
                bound,
                estimate: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
                pass: false,
                detail: Some(other.to_string()),
            },
        }
    }
}

/// Full verification report; serialized as the `verify` command's JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub checks: Vec<LemmaCheck>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn from_checks(seed: u64, checks: Vec<LemmaCheck>) -> Self {
        let all_pass = checks.iter().all(|c| c.pass);
        VerificationReport { seed, checks, all_pass }
    }
}

/// Configuration for the standard lemma suite.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplies the default per-check sample counts (floored at each
    /// check's documented minimum).
    pub sample_scale: f64,
    /// Fault-injection factor on every KL evaluation the suite makes; 1.0
    /// disables it. A tenfold inflation must trip the pointwise check, whose
    /// slack is at most 8x.
    #[doc(hidden)]
    pub kl_inflation: f64,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        SuiteConfig { seed, sample_scale: 1.0, kl_inflation: 1.0 }
    }

    fn scaled(&self, base: u64, floor: u64) -> u64 {
        ((base as f64 * self.sample_scale) as u64).max(floor)
    }
}

/// Run every lemma and moment check at acceptance scale.
pub fn standard_suite(cfg: &SuiteConfig) -> Vec<LemmaCheck> {
    let mut checks = Vec::new();
    let seed = cfg.seed;

    // Pointwise KL inequality, two sampling regimes.
    let pairs = cfg.scaled(1_000_000, 10_000);
    for (name, width) in [("kl_vs_sq uniform[-10,10]", 10.0), ("kl_vs_sq gaussian(0,25)", 5.0)] {
        let s = derive_seed(seed, name);
        let result = if name.starts_with("kl_vs_sq uniform") {
            mc_lemma_kl_vs_sq_impl(
                |rng: &mut Substream| {
                    (rng.random::<f64>() * 2.0 * width - width,
                     rng.random::<f64>() * 2.0 * width - width)
                },
                pairs,
                s,
                cfg.kl_inflation,
            )
        } else {
            mc_lemma_kl_vs_sq_impl(
                |rng: &mut Substream| {
                    let a: f64 = StandardNormal.sample(rng);
                    let b: f64 = StandardNormal.sample(rng);
                    (width * a, width * b)
                },
                pairs,
                s,
                cfg.kl_inflation,
            )
        };
        checks.push(match result {
            Ok(rep) => LemmaCheck {
                name: name.into(),
                bound: 0.0,
                estimate: rep.violations as f64,
                stderr: 0.0,
                samples: rep.samples,
                pass: true,
                detail: Some(format!("max excess {} nats", rep.max_excess_nats)),
            },
            Err(e) => LemmaCheck {
                name: name.into(),
                bound: 0.0,
                estimate: f64::NAN,
                stderr: 0.0,
                samples: pairs,
                pass: false,
                detail: Some(e.to_string()),
            },
        });
    }

    // Exact-width resampling squared error.
    for (d, k, n, outer, inner) in
        [(2usize, 2u64, 2usize, 10_000u64, 100u64), (10, 100, 10, 2_000, 500), (10, 100, 100, 2_000, 500)]
    {
        let name = format!("sq_error_n0 d={d} K={k} n={n}");
        let s = derive_seed(seed, &name);
        let outer = cfg.scaled(outer, 10_000u64.div_ceil(inner));
        let bound = (k as f64 + 1.0) / n as f64;
        checks.push(LemmaCheck::from_result(
            &name,
            bound,
            mc_sq_error_n0(d, k, n, outer, inner, s),
        ));
    }

    // Quantization squared error and misspecification KL on the same grid.
    let grid = [(3usize, 2u64, 5usize, 0.2f64, 2_000u64, 500u64),
                (3, 2, 5, 0.4, 2_000, 500),
                (10, 100, 1_000, 0.01, 400, 500)];
    for (d, k, n, eps, outer, inner) in grid {
        let outer = cfg.scaled(outer, 10_000u64.div_ceil(inner));
        let name = format!("sq_error_quant d={d} K={k} n={n} eps={eps}");
        let s = derive_seed(seed, &name);
        let bound = d as f64 * (k as f64 + 1.0) * eps * eps / n as f64;
        checks.push(LemmaCheck::from_result(
            &name,
            bound,
            mc_sq_error_quant(d, k, n, eps, outer, inner, s),
        ));
        let name = format!("misspec_kl d={d} K={k} n={n} eps={eps}");
        let s = derive_seed(seed, &name);
        let bound = 3.0 * k as f64 * (1.0 + d as f64 * eps * eps) / n as f64;
        checks.push(LemmaCheck::from_result(
            &name,
            bound,
            mc_misspec_kl_impl(d, k, n, eps, outer, inner, s, cfg.kl_inflation),
        ));
    }

    // Distinct-class counts behind the entropy bound.
    for (k, n, trials) in [(2u64, 10usize, 100_000u64), (100, 100, 10_000)] {
        let name = format!("distinct_atoms K={k} n={n}");
        let s = derive_seed(seed, &name);
        let trials = cfg.scaled(trials, 1_000);
        let bound = k as f64 * (1.0 + n as f64 / k as f64).ln();
        checks.push(LemmaCheck::from_result(&name, bound, mc_distinct_atoms(k, n, trials, s)));
    }

    // Generating-process moments.
    for (d, k) in [(2usize, 2u64), (10, 100), (50, 10)] {
        let name = format!("dgp_moments d={d} K={k}");
        let s = derive_seed(seed, &name);
        let samples = cfg.scaled(1_000_000, 10_000);
        match mc_dgp_moments(d, k, samples, s) {
            Ok((first, second)) => {
                let pass1 = first.mean.abs() <= 3.0 * first.stderr;
                checks.push(LemmaCheck {
                    name: format!("{name} mean(F)=0"),
                    bound: 0.0,
                    estimate: first.mean,
                    stderr: first.stderr,
                    samples: first.samples,
                    pass: pass1,
                    detail: Some("two-sided at 3 sigma".into()),
                });
                let pass2 = (second.mean - 0.5).abs() <= 3.0 * second.stderr;
                checks.push(LemmaCheck {
                    name: format!("{name} mean(F^2)=1/2"),
                    bound: 0.5,
                    estimate: second.mean,
                    stderr: second.stderr,
                    samples: second.samples,
                    pass: pass2,
                    detail: Some("two-sided at 3 sigma".into()),
                });
            }
            Err(e) => checks.push(LemmaCheck {
                name,
                bound: 0.0,
                estimate: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
                pass: false,
                detail: Some(e.to_string()),
            }),
        }
    }

    checks
}
