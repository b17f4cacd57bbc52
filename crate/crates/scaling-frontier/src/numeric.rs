//! Small numeric kernels shared across modules.

/// Logistic sigmoid, stable for the full f64 range.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow; `softplus(700.0)` is exactly 700 + tiny.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Pairwise (cascade) summation: reduction error grows like O(log n) and the
/// result is independent of how callers chunked the work.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error (sd / sqrt(n)).
pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 1, "mean of empty sample");
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Dot product over equal-length slices.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_limits() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(700.0) <= 1.0 && sigmoid(700.0) > 1.0 - 1e-12);
        assert!(sigmoid(-700.0) >= 0.0 && sigmoid(-700.0) < 1e-12);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for i in -40..=40 {
            let x = i as f64 * 0.5;
            let naive = (1.0 + x.exp()).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
        assert!(softplus(700.0).is_finite());
    }

    #[test]
    fn pairwise_sum_is_chunk_invariant() {
        let xs: Vec<f64> = (0..10_000).map(|i| (i as f64).sin()).collect();
        let total = pairwise_sum(&xs);
        let halves = pairwise_sum(&xs[..5_000]) + pairwise_sum(&xs[5_000..]);
        assert!((total - halves).abs() < 1e-12);
    }

    #[test]
    fn stderr_of_constant_sample_is_zero() {
        let (m, se) = mean_and_stderr(&[2.0; 100]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
