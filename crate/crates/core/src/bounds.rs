//! Closed-form accuracy bounds and estimates for uniform bins.
//!
//! - [`empty_bin_prob_exact`] / [`empty_bin_prob_bound`]: chance a bin gets no
//!   training data, exactly and via `e^{-m/|B|}`.
//! - [`old_overall_bound`]: the combined empty-bin / twice-optimal-error bound.
//! - [`ea_uniform`]: exact expected accuracy, `1 - p + (2p - 1) G(m, 1/|B|, p)`.
//! - [`g_lower_bound`]: a lower bound on `G` that never touches `m!`.
//! - [`min_training_size`]: smallest `m` reaching a target accuracy.

use crate::error::{check_closed, domain, Error, Result};
use crate::math::{self, AccuracyEstimate, Method};

/// Truncation tolerance used when callers do not pick one.
pub const DEFAULT_TRUNC_EPS: f64 = 1e-12;

/// Largest training size [`min_training_size`] will bracket up to.
pub const MAX_SEARCH_M: u64 = 1 << 40;

/// Chance that a bin of probability `bin_prob` receives none of `m` draws.
pub fn empty_bin_prob_exact(bin_prob: f64, m: u64) -> Result<f64> {
    if bin_prob.is_nan() || bin_prob <= 0.0 || bin_prob >= 1.0 {
        return Err(domain(format!(
            "bin_prob must be in (0, 1), got {bin_prob}"
        )));
    }
    Ok(ln_empty_bin_prob_exact(bin_prob, m)?.exp())
}

/// Natural log of [`empty_bin_prob_exact`]; finite where the probability
/// itself underflows.
pub fn ln_empty_bin_prob_exact(bin_prob: f64, m: u64) -> Result<f64> {
    if bin_prob.is_nan() || bin_prob <= 0.0 || bin_prob >= 1.0 {
        return Err(domain(format!(
            "bin_prob must be in (0, 1), got {bin_prob}"
        )));
    }
    Ok(m as f64 * (-bin_prob).ln_1p())
}

/// Natural log of [`empty_bin_prob_bound`], i.e. `-m/|B|`.
pub fn ln_empty_bin_prob_bound(num_bins: u64, m: u64) -> f64 {
    assert!(num_bins >= 1, "num_bins must be at least 1");
    -(m as f64) / num_bins as f64
}

/// Upper bound `e^{-m/|B|}` on the empty-bin probability under uniform bins.
pub fn empty_bin_prob_bound(num_bins: u64, m: u64) -> f64 {
    ln_empty_bin_prob_bound(num_bins, m).exp()
}

/// Accuracy floor when every bin is non-empty: error at most twice optimal.
pub fn nonempty_ea_bound(oa: f64) -> Result<f64> {
    check_closed("optimal accuracy", oa, 0.5, 1.0)?;
    Ok(1.0 - 2.0 * (1.0 - oa))
}

/// `(1 - e^{-m/|B|})(2p - 1) + e^{-m/|B|} / 2`.
pub fn old_overall_bound(m: u64, num_bins: u64, p: f64) -> f64 {
    let empty = empty_bin_prob_bound(num_bins, m);
    (1.0 - empty) * (2.0 * p - 1.0) + 0.5 * empty
}

/// Exact expected accuracy of the mode-based learner with `num_bins`
/// equiprobable bins. Absolute error is at most `(2p - 1) * trunc_eps`.
pub fn ea_uniform(m: u64, num_bins: u64, p: f64, trunc_eps: f64) -> Result<AccuracyEstimate> {
    if num_bins == 0 {
        return Err(domain("num_bins must be at least 1"));
    }
    check_closed("p", p, 0.5, 1.0)?;
    let g = math::g_exact(m, 1.0 / num_bins as f64, p, trunc_eps)?;
    let value = (1.0 - p + (2.0 * p - 1.0) * g).clamp(0.0, 1.0);
    AccuracyEstimate::new(value, Method::Exact, format!("trunc_eps={trunc_eps:e}"))
}

/// How many outer terms the lower bound keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterTerms {
    /// Stop once an outer term drops below `term_eps` times the running sum.
    Adaptive,
    Fixed(u64),
}

/// Truncation knobs for [`g_lower_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GApproxParams {
    pub outer_terms: OuterTerms,
    /// Width, in standard deviations of Binomial(m, r), kept above the mean
    /// by each inner sum.
    pub k_margin: f64,
    pub term_eps: f64,
    /// Count exact ties (including empty bins) as half a win. Without them
    /// the bound only covers strict majorities.
    pub tie_terms: bool,
}

impl Default for GApproxParams {
    fn default() -> Self {
        GApproxParams {
            outer_terms: OuterTerms::Adaptive,
            k_margin: 12.0,
            term_eps: 1e-12,
            tie_terms: true,
        }
    }
}

impl GApproxParams {
    pub fn validate(&self) -> Result<()> {
        if !self.k_margin.is_finite() || self.k_margin <= 0.0 {
            return Err(Error::Parameter(format!(
                "k_margin must be positive, got {}",
                self.k_margin
            )));
        }
        if !(self.term_eps > 0.0 && self.term_eps <= 1e-3) {
            return Err(Error::Parameter(format!(
                "term_eps must be in (0, 1e-3], got {}",
                self.term_eps
            )));
        }
        Ok(())
    }
}

/// Outer index cutoff `g` and inner cutoffs `k_0..=k_g`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub outer_terms: u64,
    pub k: Vec<u64>,
}

/// Largest outer index with a non-empty inner sum.
fn max_outer_index(m: u64, tie_terms: bool) -> Option<u64> {
    if tie_terms {
        Some(m / 2)
    } else if m == 0 {
        None
    } else {
        Some((m - 1) / 2)
    }
}

fn check_rp(r: f64, p: f64) -> Result<()> {
    if r.is_nan() || r <= 0.0 || r >= 1.0 {
        return Err(domain(format!("r must be in (0, 1), got {r}")));
    }
    if p.is_nan() || p <= 0.5 || p > 1.0 {
        return Err(domain(format!("p must be in (0.5, 1], got {p}")));
    }
    Ok(())
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Natural log of the `j`-th outer term:
/// `(1-r)^m ((1-p)/p)^j sum_{n=start}^{k} w_n C(n, j) x^n / n!`
/// with `x = r p (m - k) / (1 - r)`, `start = 2j` (ties, `w_{2j} = 1/2`) or
/// `2j + 1`.
fn log_outer_term(m: u64, r: f64, p: f64, j: u64, k: u64, tie_terms: bool) -> f64 {
    let start = if tie_terms { 2 * j } else { 2 * j + 1 };
    if k < start {
        return f64::NEG_INFINITY;
    }
    let x = r * p * (m - k) as f64 / (1.0 - r);
    let ln_x = x.ln();
    let ln_odds = if p == 1.0 {
        if j == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        j as f64 * ((1.0 - p) / p).ln()
    };
    let prefix = m as f64 * (-r).ln_1p() + ln_odds;
    if prefix == f64::NEG_INFINITY {
        return prefix;
    }

    // C(n, j) x^n / n! at n = start; later terms by the ratio x / (n + 1 - j).
    let mut log_term = if start == 0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        math::ln_factorial(start) - math::ln_factorial(j) - math::ln_factorial(start - j)
            + start as f64 * ln_x
            - math::ln_factorial(start)
    };
    let mut inner = if tie_terms {
        log_term + 0.5_f64.ln()
    } else {
        log_term
    };
    if x > 0.0 {
        for n in start..k {
            log_term += ln_x - ((n + 1 - j) as f64).ln();
            inner = log_add_exp(inner, log_term);
        }
    }
    prefix + inner
}

fn inner_cutoff(m: u64, r: f64, k_margin: f64, j: u64) -> u64 {
    let mean = m as f64 * r;
    let spread = k_margin * (mean * (1.0 - r)).sqrt();
    let base = (mean + spread).ceil();
    let k = if base >= m as f64 {
        m
    } else {
        (base as u64).saturating_add(2 * j + 1)
    };
    k.min(m)
}

/// Picks `g` and the `k_j` for [`g_lower_bound`].
///
/// `k_j = min(m, ceil(m r + c sqrt(m r (1 - r))) + 2j + 1)`. With
/// [`OuterTerms::Adaptive`], `g` is the first `j >= 1` whose term is below
/// `term_eps` times the sum so far, or the last admissible index.
pub fn choose_truncation(m: u64, r: f64, p: f64, params: &GApproxParams) -> Result<Truncation> {
    params.validate()?;
    check_rp(r, p)?;
    let Some(j_max) = max_outer_index(m, params.tie_terms) else {
        return Ok(Truncation {
            outer_terms: 0,
            k: Vec::new(),
        });
    };
    let g = match params.outer_terms {
        OuterTerms::Fixed(g) => {
            if g > j_max {
                return Err(Error::Parameter(format!(
                    "outer_terms g = {g} exceeds the largest admissible index {j_max}"
                )));
            }
            g
        }
        OuterTerms::Adaptive => {
            let mut log_sum = f64::NEG_INFINITY;
            let mut g = j_max;
            for j in 0..=j_max {
                let k = inner_cutoff(m, r, params.k_margin, j);
                let log_term = log_outer_term(m, r, p, j, k, params.tie_terms);
                log_sum = log_add_exp(log_sum, log_term);
                if j >= 1 && log_term <= params.term_eps.ln() + log_sum {
                    g = j;
                    break;
                }
            }
            g
        }
    };
    let k = (0..=g)
        .map(|j| inner_cutoff(m, r, params.k_margin, j))
        .collect();
    Ok(Truncation { outer_terms: g, k })
}

/// Evaluates the lower bound on `G(m, r, p)` for an explicit truncation.
pub fn g_lower_bound_with(
    m: u64,
    r: f64,
    p: f64,
    trunc: &Truncation,
    tie_terms: bool,
) -> Result<f64> {
    check_rp(r, p)?;
    let Some(j_max) = max_outer_index(m, tie_terms) else {
        return Ok(0.0);
    };
    if trunc.k.len() as u64 != trunc.outer_terms + 1 {
        return Err(Error::Parameter(format!(
            "expected {} inner cutoffs, got {}",
            trunc.outer_terms + 1,
            trunc.k.len()
        )));
    }
    if trunc.outer_terms > j_max {
        return Err(Error::Parameter(format!(
            "outer_terms g = {} exceeds the largest admissible index {j_max}",
            trunc.outer_terms
        )));
    }
    if let Some((j, k)) = trunc.k.iter().enumerate().find(|(_, &k)| k > m) {
        return Err(Error::Parameter(format!("k_{j} = {k} exceeds m = {m}")));
    }
    let total: f64 = trunc
        .k
        .iter()
        .enumerate()
        .map(|(j, &k)| log_outer_term(m, r, p, j as u64, k, tie_terms).exp())
        .sum();
    Ok(total.clamp(0.0, 1.0))
}

/// Cheap lower bound on `G(m, r, p)`, replacing `m!/(m-n)!` by `(m - k_j)^n`
/// and truncating both sums.
pub fn g_lower_bound(m: u64, r: f64, p: f64, params: &GApproxParams) -> Result<f64> {
    let trunc = choose_truncation(m, r, p, params)?;
    g_lower_bound_with(m, r, p, &trunc, params.tie_terms)
}

/// Expected accuracy with the lower bound substituted for `G`.
pub fn ea_g_lower_bound(
    m: u64,
    num_bins: u64,
    p: f64,
    params: &GApproxParams,
) -> Result<AccuracyEstimate> {
    if num_bins < 2 {
        return Err(domain("the lower bound needs at least 2 bins"));
    }
    check_closed("p", p, 0.5, 1.0)?;
    if p == 0.5 {
        return AccuracyEstimate::new(0.5, Method::GLowerBound, "p=0.5");
    }
    let trunc = choose_truncation(m, 1.0 / num_bins as f64, p, params)?;
    let g = g_lower_bound_with(m, 1.0 / num_bins as f64, p, &trunc, params.tie_terms)?;
    let value = (1.0 - p + (2.0 * p - 1.0) * g).clamp(0.0, 1.0);
    AccuracyEstimate::new(
        value,
        Method::GLowerBound,
        format!("g={} k_margin={}", trunc.outer_terms, params.k_margin),
    )
}

/// The combined bound wrapped as an estimate.
pub fn old_bound_estimate(m: u64, num_bins: u64, p: f64) -> Result<AccuracyEstimate> {
    if num_bins == 0 {
        return Err(domain("num_bins must be at least 1"));
    }
    check_closed("p", p, 0.5, 1.0)?;
    AccuracyEstimate::new(
        old_overall_bound(m, num_bins, p).clamp(0.0, 1.0),
        Method::OldBound,
        "",
    )
}

/// Smallest `m` whose exact uniform-bin expected accuracy reaches
/// `target_ea`. Relies on expected accuracy being non-decreasing in `m`.
pub fn min_training_size(target_ea: f64, num_bins: u64, p: f64) -> Result<u64> {
    check_closed("target", target_ea, 0.0, 1.0)?;
    check_closed("p", p, 0.5, 1.0)?;
    if target_ea >= p {
        return Err(Error::Unreachable {
            target: target_ea,
            asymptote: p,
        });
    }
    let ea = |m: u64| ea_uniform(m, num_bins, p, DEFAULT_TRUNC_EPS).map(|e| e.value);
    if ea(0)? >= target_ea {
        return Ok(0);
    }
    let mut lo = 0;
    let mut hi = num_bins.max(1);
    while ea(hi)? < target_ea {
        lo = hi;
        if hi >= MAX_SEARCH_M {
            return Err(Error::Unreachable {
                target: target_ea,
                asymptote: p,
            });
        }
        hi = hi.saturating_mul(2).min(MAX_SEARCH_M);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ea(mid)? >= target_ea {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::g_exact;

    #[test]
    fn empty_bin_examples() {
        assert_eq!(empty_bin_prob_exact(0.5, 0).unwrap(), 1.0);
        assert!((empty_bin_prob_exact(0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        // 0.9999^10000 evaluated with 30-digit arithmetic.
        let v = empty_bin_prob_exact(1e-4, 10_000).unwrap();
        assert!((v - 0.367_861_046_432_929_9).abs() < 1e-12, "{v}");
        assert!(empty_bin_prob_exact(0.0, 3).is_err());
        assert!(empty_bin_prob_exact(1.0, 3).is_err());

        assert_eq!(empty_bin_prob_bound(10_000, 0), 1.0);
        assert!((empty_bin_prob_bound(10_000, 10_000) - (-1.0_f64).exp()).abs() < 1e-16);
        for &b in &[2u64, 3, 10, 100, 10_000] {
            for &m in &[1u64, 2, 10, 1000, 10_000] {
                let exact = ln_empty_bin_prob_exact(1.0 / b as f64, m).unwrap();
                assert!(exact < ln_empty_bin_prob_bound(b, m), "B={b} m={m}");
            }
        }
    }

    #[test]
    fn nonempty_bound() {
        assert!((nonempty_ea_bound(0.9).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(nonempty_ea_bound(1.0).unwrap(), 1.0);
        assert_eq!(nonempty_ea_bound(0.75).unwrap(), 0.5);
        assert!(nonempty_ea_bound(0.4).is_err());
    }

    #[test]
    fn old_bound_values() {
        assert_eq!(old_overall_bound(0, 10_000, 0.9), 0.5);
        let e = (-1.0_f64).exp();
        let v = old_overall_bound(10_000, 10_000, 0.9);
        assert!((v - ((1.0 - e) * 0.8 + 0.5 * e)).abs() < 1e-15);
        assert!((v - 0.689_636_167_648_567_3).abs() < 1e-12, "{v}");
        assert!((old_overall_bound(10_000_000, 10_000, 0.9) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ea_uniform_values() {
        assert_eq!(ea_uniform(0, 10_000, 0.9, 1e-12).unwrap().value, 0.5);
        for &m in &[0u64, 3, 1000, 40_000] {
            assert_eq!(ea_uniform(m, 100, 0.5, 1e-12).unwrap().value, 0.5);
        }
        let e = ea_uniform(40_000, 10_000, 0.9, 1e-12).unwrap();
        assert_eq!(e.method, Method::Exact);
        assert!(
            e.value >= 0.85 && (e.value - 0.868).abs() <= 0.015,
            "{}",
            e.value
        );
        assert!(ea_uniform(10, 0, 0.9, 1e-12).is_err());
        assert!(ea_uniform(10, 10, 0.3, 1e-12).is_err());
    }

    #[test]
    fn ea_uniform_below_optimal_and_monotone() {
        for &b in &[10u64, 100] {
            for &p in &[0.6, 0.9] {
                let mut prev = 0.0;
                for m in 0..=200 {
                    let v = ea_uniform(m, b, p, 1e-12).unwrap().value;
                    assert!(v >= prev - 1e-12, "B={b} p={p} m={m}");
                    assert!(v < p);
                    assert!(old_overall_bound(m, b, p) <= v + 1e-9);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn truncation_choice() {
        let params = GApproxParams::default();
        let t = choose_truncation(10_000, 1e-4, 0.9, &params).unwrap();
        assert_eq!(t.k[0], 14);
        assert_eq!(t.k.len() as u64, t.outer_terms + 1);
        for (j, &k) in t.k.iter().enumerate() {
            assert_eq!(k, 14 + 2 * j as u64);
        }
        assert!(
            t.outer_terms >= 3 && t.outer_terms <= 20,
            "g = {}",
            t.outer_terms
        );

        let wide = GApproxParams {
            k_margin: 1e9,
            ..params
        };
        let t = choose_truncation(5000, 0.5, 0.9, &wide).unwrap();
        assert!(t.k.iter().all(|&k| k == 5000));

        let fixed = GApproxParams {
            outer_terms: OuterTerms::Fixed(3),
            ..params
        };
        assert_eq!(
            choose_truncation(100, 0.1, 0.9, &fixed)
                .unwrap()
                .outer_terms,
            3
        );
        let too_many = GApproxParams {
            outer_terms: OuterTerms::Fixed(60),
            ..params
        };
        assert!(choose_truncation(100, 0.1, 0.9, &too_many).is_err());
        let bad_eps = GApproxParams {
            term_eps: 0.1,
            ..params
        };
        assert!(choose_truncation(100, 0.1, 0.9, &bad_eps).is_err());
        let bad_c = GApproxParams {
            k_margin: 0.0,
            ..params
        };
        assert!(choose_truncation(100, 0.1, 0.9, &bad_c).is_err());
    }

    #[test]
    fn single_term_expansion() {
        let trunc = Truncation {
            outer_terms: 0,
            k: vec![1],
        };
        // Strict majorities only: x_0 = 0 kills the n = 1 term.
        assert_eq!(g_lower_bound_with(1, 0.5, 0.9, &trunc, false).unwrap(), 0.0);
        // With ties the empty-bin half remains: (1 - r) / 2.
        let v = g_lower_bound_with(1, 0.5, 0.9, &trunc, true).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!(v <= g_exact(1, 0.5, 0.9, 1e-12).unwrap());

        let over = Truncation {
            outer_terms: 0,
            k: vec![2],
        };
        assert!(g_lower_bound_with(1, 0.5, 0.9, &over, true).is_err());
        let ragged = Truncation {
            outer_terms: 1,
            k: vec![1],
        };
        assert!(g_lower_bound_with(5, 0.5, 0.9, &ragged, true).is_err());
    }

    #[test]
    fn lower_bound_is_below_and_close() {
        let params = GApproxParams::default();
        for &(m, r) in &[
            (0u64, 0.5),
            (1, 0.5),
            (2, 0.3),
            (10, 0.1),
            (200, 0.01),
            (500, 0.2),
        ] {
            for &p in &[0.6, 0.75, 0.9, 1.0] {
                let lb = g_lower_bound(m, r, p, &params).unwrap();
                let g = g_exact(m, r, p, 1e-14).unwrap();
                assert!(lb <= g + 1e-12, "m={m} r={r} p={p}: {lb} > {g}");
            }
        }
        let lb = g_lower_bound(10_000, 1e-4, 0.9, &params).unwrap();
        let g = g_exact(10_000, 1e-4, 0.9, 1e-12).unwrap();
        assert!(g - lb <= 0.005 && lb <= g, "{g} vs {lb}");
    }

    #[test]
    fn lower_bound_at_zero_training() {
        let params = GApproxParams::default();
        assert_eq!(g_lower_bound(0, 1e-4, 0.9, &params).unwrap(), 0.5);
        let strict = GApproxParams {
            tie_terms: false,
            ..params
        };
        assert_eq!(g_lower_bound(0, 1e-4, 0.9, &strict).unwrap(), 0.0);
    }

    #[test]
    fn inverse_queries() {
        assert_eq!(min_training_size(0.5, 10_000, 0.9).unwrap(), 0);
        let m = min_training_size(0.85, 10_000, 0.9).unwrap();
        assert!((30_000..=40_000).contains(&m), "{m}");
        assert!(ea_uniform(m, 10_000, 0.9, 1e-12).unwrap().value >= 0.85);
        assert!(ea_uniform(m - 1, 10_000, 0.9, 1e-12).unwrap().value < 0.85);
        match min_training_size(0.9, 10_000, 0.9) {
            Err(Error::Unreachable { asymptote, .. }) => assert_eq!(asymptote, 0.9),
            other => panic!("expected unreachable, got {other:?}"),
        }
        assert_eq!(min_training_size(0.7, 1, 0.9).unwrap(), 1);
    }
}
