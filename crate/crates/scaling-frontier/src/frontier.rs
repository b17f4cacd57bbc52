//! Compute-optimal allocation under the FLOP constraint `d * n * T <= C`.
//!
//! For each budget the epsilon-optimized bound is minimized over the hidden
//! width: golden-section search on `ln n` over the continuous relaxation,
//! an exhaustive check of the nearby integers, and a coarse log-grid scan
//! that acts as a unimodality guard. Sweeps across budgets produce the
//! frontier whose log-log slopes are fitted by least squares.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{bound_corollary, corollary_terms, BoundReport};

#[derive(Debug, Error)]
pub enum FrontierError {
    #[error("budget {c} cannot fund a single unit: need C >= d = {d}")]
    InfeasibleBudget { c: f64, d: u64 },
    #[error("width {n} is infeasible at budget {c}: maximum is floor(C/d) = {max}")]
    InfeasibleWidth { n: u64, c: f64, max: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate slope fit: {0}")]
    DegenerateFit(String),
    #[error("sweep produced a decreasing optimal width at index {index}")]
    NonMonotonicSweep { index: usize },
}

/// One budget on the compute-optimal frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    #[serde(rename = "C")]
    pub c: f64,
    pub d: u64,
    #[serde(rename = "K")]
    pub k: u64,
    pub n_star: u64,
    pub t_star: f64,
    pub bound_total_nats: f64,
}

impl FrontierPoint {
    pub const CSV_HEADER: &'static str = "C,d,K,n_star,T_star,param_count,bound_total";

    pub fn param_count(&self) -> f64 {
        self.d as f64 * self.n_star as f64
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.c,
            self.d,
            self.k,
            self.n_star,
            self.t_star,
            self.param_count(),
            self.bound_total_nats
        )
    }
}

fn check_env(c: f64, d: u64, k: u64) -> Result<(), FrontierError> {
    if d == 0 || k == 0 {
        return Err(FrontierError::InvalidArgument("d and K must be >= 1".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(FrontierError::InvalidArgument(format!(
            "budget must be positive and finite, got {c}"
        )));
    }
    Ok(())
}

/// Epsilon-optimized bound total at real-valued width `n` under budget `c`.
fn bound_at_budget_real(c: f64, d: u64, k: u64, n: f64) -> f64 {
    let t = c / (d as f64 * n);
    let (est, mis) = corollary_terms(n, k as f64, d as f64, t);
    est + mis
}

/// Bound total at integer width `n` with the token count `T = C/(d n)`
/// treated as a positive real.
pub fn bound_at_budget(c: f64, d: u64, k: u64, n: u64) -> Result<f64, FrontierError> {
    check_env(c, d, k)?;
    let max = max_width(c, d);
    if n == 0 || n > max {
        return Err(FrontierError::InfeasibleWidth { n, c, max });
    }
    Ok(bound_at_budget_real(c, d, k, n as f64))
}

/// Largest width the budget can fund at one token: `floor(C/d)`.
fn max_width(c: f64, d: u64) -> u64 {
    (c / d as f64).floor() as u64
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Evaluate candidate widths and keep the smallest-width minimizer.
fn best_of(c: f64, d: u64, k: u64, candidates: impl IntoIterator<Item = u64>) -> (u64, f64) {
    let mut sorted: Vec<u64> = candidates.into_iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut best_n = 0u64;
    let mut best_v = f64::INFINITY;
    for n in sorted {
        let v = bound_at_budget_real(c, d, k, n as f64);
        if v < best_v {
            best_v = v;
            best_n = n;
        }
    }
    (best_n, best_v)
}

/// Minimize the bound over integer widths in `[1, floor(C/d)]`.
///
/// Runs golden-section on `ln n` (tolerance 1e-6) followed by an exhaustive
/// check of the five nearest integers. A 128-point log-grid scan guards the
/// unimodality assumption: if it finds a strictly better width the scan
/// result wins and the event is logged.
pub fn optimal_width(c: f64, d: u64, k: u64) -> Result<FrontierPoint, FrontierError> {
    check_env(c, d, k)?;
    if c < d as f64 {
        return Err(FrontierError::InfeasibleBudget { c, d });
    }
    let n_max = max_width(c, d).max(1);
    let hi = (n_max as f64).ln();
    let u = golden_section_min(|u| bound_at_budget_real(c, d, k, u.exp()), 0.0, hi, 1e-6);
    let center = u.exp().round() as i64;
    let golden_cands = (-2..=2)
        .map(|off| (center + off).clamp(1, n_max as i64) as u64)
        .chain([1, n_max]);
    let (gn, gv) = best_of(c, d, k, golden_cands);

    // Unimodality guard: coarse log grid plus local refinement of its argmin.
    let grid = log_grid(1, n_max, 128);
    let (scan_n, _) = best_of(c, d, k, grid);
    let local = (-2..=2).map(|off| (scan_n as i64 + off).clamp(1, n_max as i64) as u64);
    let (sn, sv) = best_of(c, d, k, local);

    let (n_star, bound_total) = if sv < gv {
        log::warn!(
            "golden-section missed the optimum at C = {c}: grid scan found n = {sn} \
             (bound {sv}) below n = {gn} (bound {gv}); using the scan result"
        );
        (sn, sv)
    } else {
        (gn, gv)
    };
    let t_star = c / (d as f64 * n_star as f64);
    Ok(FrontierPoint { c, d, k, n_star, t_star, bound_total_nats: bound_total })
}

/// Log-spaced integer grid over `[lo, hi]`, deduplicated and inclusive of
/// both endpoints.
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    assert!(lo >= 1 && hi >= lo && points >= 1);
    if points == 1 || lo == hi {
        return if lo == hi { vec![lo] } else { vec![lo, hi] };
    }
    let (llo, lhi) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<u64> = (0..points)
        .map(|i| {
            let u = llo + (lhi - llo) * i as f64 / (points - 1) as f64;
            (u.exp().round() as u64).clamp(lo, hi)
        })
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Optimal allocation for each budget of an ascending sweep.
pub fn frontier_sweep(
    c_values: &[f64],
    d: u64,
    k: u64,
) -> Result<Vec<FrontierPoint>, FrontierError> {
    if c_values.is_empty() {
        return Err(FrontierError::InvalidArgument("budget sweep must be nonempty".into()));
    }
    if c_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(FrontierError::InvalidArgument("budgets must be sorted ascending".into()));
    }
    let points: Vec<FrontierPoint> = c_values
        .par_iter()
        .map(|&c| optimal_width(c, d, k))
        .collect::<Result<_, _>>()?;
    if let Some(i) = (1..points.len()).find(|&i| points[i].n_star < points[i - 1].n_star) {
        return Err(FrontierError::NonMonotonicSweep { index: i });
    }
    Ok(points)
}

/// X-axis choice for frontier slope fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeAxis {
    /// Fit parameter count against the FLOP budget C.
    Budget,
    /// Fit parameter count against the implied token count T*.
    Tokens,
}

/// Least-squares slope of `ln(d n*)` against the chosen `ln x`.
pub fn slope_estimate(points: &[FrontierPoint], axis: SlopeAxis) -> Result<f64, FrontierError> {
    if points.len() < 3 {
        return Err(FrontierError::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points
        .iter()
        .map(|p| match axis {
            SlopeAxis::Budget => p.c,
            SlopeAxis::Tokens => p.t_star,
        })
        .collect();
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FrontierError::DegenerateFit("x values must be strictly increasing".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.param_count().ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(FrontierError::DegenerateFit("zero variance in x".into()));
    }
    Ok(sxy / sxx)
}

/// Bound decomposition at every width of `n_grid` under budget `c`; grid
/// entries beyond `floor(C/d)` are reported as infeasible.
pub fn budget_curve(
    c: f64,
    d: u64,
    k: u64,
    n_grid: &[u64],
) -> Result<Vec<(u64, Option<BoundReport>)>, FrontierError> {
    check_env(c, d, k)?;
    let max = max_width(c, d);
    n_grid
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(FrontierError::InvalidArgument("width 0 in grid".into()));
            }
            if n > max {
                return Ok((n, None));
            }
            let t = c / (d as f64 * n as f64);
            let report = bound_corollary(n, k, d, t)
                .map_err(|e| FrontierError::InvalidArgument(e.to_string()))?;
            Ok((n, Some(report)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: u64 = 10;
    const K: u64 = 100;

    #[test]
    fn substitution_identity_with_corollary() {
        // C = d n T makes the budget form collapse onto the direct bound.
        let (n, t) = (100u64, 1_000_000.0);
        let c = D as f64 * n as f64 * t;
        let via_budget = bound_at_budget(c, D, K, n).unwrap();
        let direct = bound_corollary(n, K, D, t).unwrap().total_nats;
        assert_eq!(via_budget, direct);
    }

    #[test]
    fn minimum_budget_forces_width_one() {
        let p = optimal_width(10.0, 10, 3).unwrap();
        assert_eq!(p.n_star, 1);
        assert_eq!(p.t_star, 1.0);
        assert!(matches!(
            optimal_width(9.0, 10, 3),
            Err(FrontierError::InfeasibleBudget { .. })
        ));
    }

    #[test]
    fn infeasible_width_is_rejected() {
        assert!(matches!(
            bound_at_budget(100.0, 10, 5, 11),
            Err(FrontierError::InfeasibleWidth { max: 10, .. })
        ));
        assert!(bound_at_budget(100.0, 10, 5, 10).is_ok());
    }

    #[test]
    fn optimal_width_matches_brute_force_scan() {
        // Oracle: 10^4-point log grid over the full feasible range plus
        // exhaustive refinement around the grid argmin.
        let c = 1e12;
        let grid = log_grid(1, (c / D as f64) as u64, 10_000);
        let mut best = (0u64, f64::INFINITY);
        for n in grid {
            let v = bound_at_budget(c, D, K, n).unwrap();
            if v < best.1 {
                best = (n, v);
            }
        }
        for off in -50i64..=50 {
            let n = (best.0 as i64 + off).max(1) as u64;
            let v = bound_at_budget(c, D, K, n).unwrap();
            if v < best.1 {
                best = (n, v);
            }
        }
        let p = optimal_width(c, D, K).unwrap();
        assert_eq!(p.n_star, best.0);
        assert_eq!(p.bound_total_nats, best.1);
    }

    #[test]
    fn curve_is_u_shaped_at_fixed_budget() {
        let grid = log_grid(1, 1e10 as u64 / D, 64);
        let values: Vec<f64> =
            grid.iter().map(|&n| bound_at_budget(1e10, D, K, n).unwrap()).collect();
        let mut descents_after_rise = 0;
        let mut rising = false;
        for w in values.windows(2) {
            if w[1] > w[0] {
                rising = true;
            } else if rising {
                descents_after_rise += 1;
            }
        }
        assert_eq!(descents_after_rise, 0, "curve is not unimodal: {values:?}");
        assert!(values[0] > values[values.len() / 2]);
        assert!(*values.last().unwrap() > values[values.len() / 2]);
    }

    #[test]
    fn doubling_budget_tracks_arithmetic_oracle() {
        // At fixed n, doubling C doubles T; the estimation term halves up to
        // the ln(36TK) drift. Compare against a direct re-evaluation.
        let n = 500u64;
        let c1 = 1e10;
        let c2 = 2e10;
        let t1 = c1 / (D as f64 * n as f64);
        let t2 = c2 / (D as f64 * n as f64);
        let r1 = bound_corollary(n, K, D, t1).unwrap();
        let r2 = bound_corollary(n, K, D, t2).unwrap();
        let drift = (1.0 + (36.0 * t2 * K as f64).ln() + 0.2 * (2.0 * n as f64).ln())
            / (1.0 + (36.0 * t1 * K as f64).ln() + 0.2 * (2.0 * n as f64).ln());
        let expected_ratio = 0.5 * drift;
        let got = r2.estimation_nats / r1.estimation_nats;
        assert!((got - expected_ratio).abs() < 1e-12);
        assert_eq!(r1.misspecification_nats, r2.misspecification_nats);
    }

    #[test]
    fn sweep_is_monotone_and_deterministic() {
        let budgets = [1e8, 1e9, 1e9, 1e10, 1e11];
        let points = frontier_sweep(&budgets, D, K).unwrap();
        assert_eq!(points.len(), 5);
        assert_eq!(points[1], points[2], "repeated budgets must give identical points");
        for w in points.windows(2) {
            assert!(w[1].n_star >= w[0].n_star);
        }
        for p in &points {
            let product = p.d as f64 * p.n_star as f64 * p.t_star;
            assert!((product - p.c).abs() <= 1e-9 * p.c);
        }
        assert!(matches!(frontier_sweep(&[], D, K), Err(FrontierError::InvalidArgument(_))));
        assert!(matches!(
            frontier_sweep(&[1e10, 1e8], D, K),
            Err(FrontierError::InvalidArgument(_))
        ));
    }

    #[test]
    fn singleton_sweep_is_singleton() {
        let points = frontier_sweep(&[1e9], D, K).unwrap();
        assert_eq!(points.len(), 1);
    }

    #[test]
    fn envelope_holds_across_sweep() {
        let budgets: Vec<f64> = (0..13).map(|i| 1e8 * 10f64.powf(i as f64 / 2.0)).collect();
        for p in frontier_sweep(&budgets, D, K).unwrap() {
            assert!(
                p.param_count() <= (3.0 * p.c).sqrt() + p.d as f64,
                "d n* = {} exceeds sqrt(3C) + d at C = {}",
                p.param_count(),
                p.c
            );
        }
    }

    #[test]
    fn waste_detection_pair_exists_per_budget() {
        // A lopsided allocation at a big budget loses to the balanced
        // optimum of a budget 100x smaller.
        let small = optimal_width(1e10, D, K).unwrap();
        let lopsided = bound_at_budget(1e12, D, K, 1).unwrap();
        assert!(lopsided > small.bound_total_nats);
        let other_extreme = bound_at_budget(1e12, D, K, 1e11 as u64).unwrap();
        assert!(other_extreme > small.bound_total_nats);
    }

    #[test]
    fn slope_recovers_exact_power_laws() {
        // Points laid exactly on y = x^(1/2) using powers of two so the
        // integer width field stores y exactly.
        let points: Vec<FrontierPoint> = (1..=6)
            .map(|i| {
                let c = (1u64 << (10 * i)) as f64;
                FrontierPoint {
                    c,
                    d: 1,
                    k: 1,
                    n_star: 1u64 << (5 * i),
                    t_star: c / (1u64 << (5 * i)) as f64,
                    bound_total_nats: 0.0,
                }
            })
            .collect();
        let s_c = slope_estimate(&points, SlopeAxis::Budget).unwrap();
        assert!((s_c - 0.5).abs() < 1e-9);
        let s_t = slope_estimate(&points, SlopeAxis::Tokens).unwrap();
        assert!((s_t - 1.0).abs() < 1e-9);
    }

    #[test]
    fn slope_rejects_degenerate_inputs() {
        let p = optimal_width(1e10, D, K).unwrap();
        assert!(matches!(
            slope_estimate(&[p.clone(), p.clone()], SlopeAxis::Budget),
            Err(FrontierError::DegenerateFit(_))
        ));
        let q = optimal_width(1e11, D, K).unwrap();
        let r = optimal_width(1e12, D, K).unwrap();
        let repeated = vec![p.clone(), p, q, r];
        assert!(matches!(
            slope_estimate(&repeated, SlopeAxis::Budget),
            Err(FrontierError::DegenerateFit(_))
        ));
    }

    #[test]
    fn budget_curve_marks_infeasible_points() {
        let rows = budget_curve(100.0, 10, 5, &[1, 5, 10, 11, 50]).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows[2].1.is_some());
        assert!(rows[3].1.is_none());
        assert!(rows[4].1.is_none());
        let report = rows[0].1.as_ref().unwrap();
        assert_eq!(report.t, 10.0);
    }
}
