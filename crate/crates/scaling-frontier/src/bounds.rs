//! Closed-form error bounds for the constrained predictor.
//!
//! Two bound forms are evaluated: the explicit-epsilon form (estimation term
//! `entropy_bound / T` plus misspecification `3K(1+d eps^2)/n`) and the
//! epsilon-optimized form whose estimation term absorbs the optimal radius.
//! All arithmetic is plain f64; the formulas only take logs of moderate
//! arguments. `T` is accepted as a positive real so budget-constrained
//! callers can substitute `T = C/(d n)` exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("entropy bound requires epsilon > 0 (the exact-representation entropy is infinite)")]
    NonPositiveEpsilon,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Which bound a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundForm {
    Theorem2,
    Corollary1,
}

impl std::fmt::Display for BoundForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundForm::Theorem2 => write!(f, "Theorem2"),
            BoundForm::Corollary1 => write!(f, "Corollary1"),
        }
    }
}

/// Decomposed bound evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub form: BoundForm,
    pub d: u64,
    #[serde(rename = "K")]
    pub k: u64,
    pub n: u64,
    #[serde(rename = "T")]
    pub t: f64,
    pub epsilon: Option<f64>,
    pub estimation_nats: f64,
    pub misspecification_nats: f64,
    pub total_nats: f64,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "form,d,K,n,T,epsilon,estimation,misspecification,total";

    pub fn csv_row(&self) -> String {
        let eps = self.epsilon.map(|e| e.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.form,
            self.d,
            self.k,
            self.n,
            self.t,
            eps,
            self.estimation_nats,
            self.misspecification_nats,
            self.total_nats
        )
    }
}

fn check_positive(n: u64, k: u64, d: u64) -> Result<(), BoundsError> {
    if n == 0 || k == 0 || d == 0 {
        return Err(BoundsError::InvalidArgument("n, K and d must be >= 1".into()));
    }
    Ok(())
}

fn check_horizon(t: f64) -> Result<(), BoundsError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(BoundsError::InvalidArgument(format!("T must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Entropy of the resampled quantized network, in nats:
/// `K ln(1 + n/K) (ln(2n) + d ln(3/eps))`.
///
/// For `eps > 3` the cover-size factor goes negative; the value is returned
/// as-is and flagged by [`bound_theorem2`].
pub fn entropy_bound(n: u64, k: u64, d: u64, epsilon: f64) -> Result<f64, BoundsError> {
    check_positive(n, k, d)?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(BoundsError::NonPositiveEpsilon);
    }
    let (nf, kf, df) = (n as f64, k as f64, d as f64);
    Ok(kf * (1.0 + nf / kf).ln() * ((2.0 * nf).ln() + df * (3.0 / epsilon).ln()))
}

/// Misspecification bound `3K(1 + d eps^2)/n` in nats.
pub fn misspec_bound(n: u64, k: u64, d: u64, epsilon: f64) -> Result<f64, BoundsError> {
    check_positive(n, k, d)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(BoundsError::InvalidArgument(format!(
            "epsilon must be finite and >= 0, got {epsilon}"
        )));
    }
    let (nf, kf, df) = (n as f64, k as f64, d as f64);
    Ok(3.0 * kf * (1.0 + df * epsilon * epsilon) / nf)
}

/// Explicit-epsilon bound: `entropy_bound / T + misspec_bound`.
pub fn bound_theorem2(
    n: u64,
    k: u64,
    d: u64,
    t: f64,
    epsilon: f64,
) -> Result<BoundReport, BoundsError> {
    check_horizon(t)?;
    let entropy = entropy_bound(n, k, d, epsilon)?;
    let estimation = entropy / t;
    let misspecification = misspec_bound(n, k, d, epsilon)?;
    let mut warnings = Vec::new();
    if epsilon > 3.0 {
        warnings.push(format!(
            "epsilon = {epsilon} exceeds 3, so the cover-size term d ln(3/eps) is negative \
             (entropy term evaluates to {entropy} nats)"
        ));
    }
    Ok(BoundReport {
        form: BoundForm::Theorem2,
        d,
        k,
        n,
        t,
        epsilon: Some(epsilon),
        estimation_nats: estimation,
        misspecification_nats: misspecification,
        total_nats: estimation + misspecification,
        warnings,
    })
}

/// Quantization radius minimizing the explicit-epsilon bound:
/// `sqrt(n K ln(1 + n/K) / (4 T (K+1)))`.
pub fn optimal_epsilon(n: u64, k: u64, t: f64) -> Result<f64, BoundsError> {
    check_positive(n, k, 1)?;
    check_horizon(t)?;
    let (nf, kf) = (n as f64, k as f64);
    Ok((nf * kf * (1.0 + nf / kf).ln() / (4.0 * t * (kf + 1.0))).sqrt())
}

/// Estimation and misspecification terms of the epsilon-optimized bound at a
/// real-valued width. Shared by the integer report below and the continuous
/// relaxation used for budget optimization.
pub(crate) fn corollary_terms(n: f64, k: f64, d: f64, t: f64) -> (f64, f64) {
    let log_term = 1.0 + (36.0 * t * k).ln() + (2.0 / d) * (2.0 * n).ln();
    let estimation = d * k * (1.0 + n / k).ln() * log_term / (2.0 * t);
    let misspecification = 3.0 * k / n;
    (estimation, misspecification)
}

/// Epsilon-optimized bound:
/// `d K ln(1 + n/K) (ln(e 36 T K) + (2/d) ln(2n)) / (2T) + 3K/n`,
/// with `ln(e 36 T K)` read as `1 + ln(36 T K)`.
///
/// Stated for `n >= 3`, `K >= 2`; smaller values still evaluate but the
/// report carries a validity warning.
pub fn bound_corollary(n: u64, k: u64, d: u64, t: f64) -> Result<BoundReport, BoundsError> {
    check_positive(n, k, d)?;
    check_horizon(t)?;
    let (estimation, misspecification) = corollary_terms(n as f64, k as f64, d as f64, t);
    let mut warnings = Vec::new();
    if n < 3 || k < 2 {
        warnings.push(format!(
            "evaluated outside the stated hypotheses n >= 3, K >= 2 (n = {n}, K = {k})"
        ));
    }
    Ok(BoundReport {
        form: BoundForm::Corollary1,
        d,
        k,
        n,
        t,
        epsilon: None,
        estimation_nats: estimation,
        misspecification_nats: misspecification,
        total_nats: estimation + misspecification,
        warnings,
    })
}
