//! Exact probability kernels for the mode-based learner.
//!
//! Everything binomial is evaluated in natural-log space. Log-factorials come
//! from a shared cumulative table (compensated summation) for arguments up to
//! [`TABLE_LIMIT`]; beyond that the pmf switches to the saddle-point form
//! (Stirling remainder plus `bd0` deviance), which stays accurate for any `n`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{check_closed, domain, validation, Result};

/// Largest argument served from the cumulative log-factorial table.
pub const TABLE_LIMIT: u64 = 1 << 20;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Relative size below which tail terms of a binomial sum are dropped.
const TAIL_REL_EPS: f64 = 1e-18;

/// Cumulative table of `ln(k!)` for `k = 0..len`.
#[derive(Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    fn build(len: usize) -> Self {
        let mut table = Vec::with_capacity(len);
        // Neumaier-compensated running sum of ln(k).
        let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
        table.push(0.0);
        for k in 1..len {
            let term = (k as f64).ln();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            table.push(sum + comp);
        }
        LogFactorials { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// `ln(n!)`; panics if `n` is outside the table.
    pub fn ln_factorial(&self, n: u64) -> f64 {
        self.table[n as usize]
    }

    /// `ln C(n, k)` for `k <= n < len`.
    pub fn ln_choose(&self, n: u64, k: u64) -> f64 {
        self.ln_factorial(n) - self.ln_factorial(k) - self.ln_factorial(n - k)
    }
}

fn table_cell() -> &'static RwLock<Arc<LogFactorials>> {
    static CELL: OnceLock<RwLock<Arc<LogFactorials>>> = OnceLock::new();
    CELL.get_or_init(|| RwLock::new(Arc::new(LogFactorials::build(1024))))
}

/// Returns a shared table covering at least `0..=max_n` (capped at
/// [`TABLE_LIMIT`]). A table is never mutated once published; growth swaps in
/// a larger one.
pub fn log_factorials(max_n: u64) -> Arc<LogFactorials> {
    let want = max_n.min(TABLE_LIMIT) as usize + 1;
    {
        let current = table_cell().read().unwrap_or_else(|e| e.into_inner());
        if current.len() >= want {
            return Arc::clone(&current);
        }
    }
    let mut slot = table_cell().write().unwrap_or_else(|e| e.into_inner());
    if slot.len() < want {
        let len = want.max(slot.len() * 2).min(TABLE_LIMIT as usize + 1);
        *slot = Arc::new(LogFactorials::build(len));
    }
    Arc::clone(&slot)
}

/// Stirling remainder `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]`.
fn stirling_remainder(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let lnf = log_factorials(15).ln_factorial(n as u64);
        return lnf - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x / np) + np - x`, stable when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1.0;
        loop {
            ej *= v2;
            let s1 = s + ej / (2.0 * j + 1.0);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1.0;
        }
    }
    x * (x / np).ln() + np - x
}

/// `ln(n!)` for any `n`, from the table when possible.
pub fn ln_factorial(n: u64) -> f64 {
    if n <= TABLE_LIMIT {
        log_factorials(n).ln_factorial(n)
    } else {
        let x = n as f64;
        (x + 0.5) * x.ln() - x + LN_SQRT_2PI + stirling_remainder(x)
    }
}

fn check_prob(name: &str, q: f64) -> Result<()> {
    check_closed(name, q, 0.0, 1.0)
}

/// `ln[C(n,k) q^k (1-q)^(n-k)]`, with `0^0 = 1`.
pub fn log_binomial_pmf(k: u64, n: u64, q: f64) -> Result<f64> {
    if k > n {
        return Err(domain(format!("k = {k} exceeds n = {n}")));
    }
    check_prob("q", q)?;
    Ok(log_pmf_unchecked(k, n, q))
}

fn log_pmf_unchecked(k: u64, n: u64, q: f64) -> f64 {
    if q == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let (kf, nf) = (k as f64, n as f64);
    if n <= TABLE_LIMIT {
        let lf = log_factorials(n);
        return lf.ln_choose(n, k) + kf * q.ln() + (nf - kf) * (-q).ln_1p();
    }
    if k == 0 {
        return nf * (-q).ln_1p();
    }
    if k == n {
        return nf * q.ln();
    }
    let rest = nf - kf;
    let lc = stirling_remainder(nf)
        - stirling_remainder(kf)
        - stirling_remainder(rest)
        - bd0(kf, nf * q)
        - bd0(rest, nf * (1.0 - q));
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    lc - 0.5 * lf
}

fn pmf(k: u64, n: u64, q: f64) -> f64 {
    log_pmf_unchecked(k, n, q).exp()
}

/// Mode of Binomial(n, q).
fn binomial_mode(n: u64, q: f64) -> u64 {
    (((n + 1) as f64 * q).floor() as u64).min(n)
}

/// Sum of Binomial(n, q) mass over `lo..=hi`, scanning outward from the
/// point of the interval nearest the mode until terms become negligible.
fn binomial_interval_mass(n: u64, q: f64, lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    let start = binomial_mode(n, q).clamp(lo, hi);
    let mut sum = pmf(start, n, q);
    let mut i = start;
    while i < hi {
        i += 1;
        let t = pmf(i, n, q);
        sum += t;
        if t == 0.0 || t < sum * TAIL_REL_EPS {
            break;
        }
    }
    let mut i = start;
    while i > lo {
        i -= 1;
        let t = pmf(i, n, q);
        sum += t;
        if t == 0.0 || t < sum * TAIL_REL_EPS {
            break;
        }
    }
    sum
}

/// Probability that the value with per-instance probability `p` wins the
/// majority vote among `n` instances; exact ties count one half.
///
/// `T(0, p) = 0.5` for every `p`: an empty bin is a fair guess.
pub fn majority_win_prob(n: u64, p: f64) -> Result<f64> {
    check_prob("p", p)?;
    Ok(majority_win_unchecked(n, p))
}

fn majority_win_unchecked(n: u64, p: f64) -> f64 {
    let mut t = binomial_interval_mass(n, p, n / 2 + 1, n);
    if n.is_multiple_of(2) {
        t += 0.5 * pmf(n / 2, n, p);
    }
    t.clamp(0.0, 1.0)
}

/// Probability that a fresh test instance from a bin with `n` training
/// instances matches the learned mode.
pub fn bin_accuracy(n: u64, p: f64) -> Result<f64> {
    let t = majority_win_prob(n, p)?;
    Ok((p * t + (1.0 - p) * (1.0 - t)).clamp(0.0, 1.0))
}

/// The window `lo..=hi` of Binomial(m, r) holding at least `1 - eps` of the
/// mass, grown one index at a time toward the heavier neighbour.
pub(crate) fn binomial_window(m: u64, r: f64, eps: f64) -> (u64, u64) {
    let mode = binomial_mode(m, r);
    let (mut lo, mut hi) = (mode, mode);
    let mut mass = pmf(mode, m, r);
    while mass < 1.0 - eps {
        let below = if lo > 0 { pmf(lo - 1, m, r) } else { -1.0 };
        let above = if hi < m { pmf(hi + 1, m, r) } else { -1.0 };
        if below <= 0.0 && above <= 0.0 {
            break;
        }
        if above >= below {
            hi += 1;
            mass += above;
        } else {
            lo -= 1;
            mass += below;
        }
    }
    (lo, hi)
}

/// `G(m, r, p) = sum_n Binomial(n; m, r) T(n, p)`: the probability that a bin
/// hit with probability `r` by each of `m` draws ends up predicting the value
/// of probability `p`.
///
/// The outer sum is restricted to the smallest window around the mode of
/// Binomial(m, r) carrying `1 - trunc_eps` of its mass, so the result is
/// within `trunc_eps` of the full sum.
pub fn g_exact(m: u64, r: f64, p: f64, trunc_eps: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 || r > 1.0 {
        return Err(domain(format!("r must be in (0, 1], got {r}")));
    }
    check_prob("p", p)?;
    if trunc_eps.is_nan() || trunc_eps <= 0.0 || trunc_eps > 1e-6 {
        return Err(domain(format!(
            "trunc_eps must be in (0, 1e-6], got {trunc_eps}"
        )));
    }
    let (lo, hi) = binomial_window(m, r, trunc_eps);
    let g: f64 = (lo..=hi)
        .map(|n| pmf(n, m, r) * majority_win_unchecked(n, p))
        .sum();
    Ok(g.clamp(0.0, 1.0))
}

/// Number of bins, majority probability and training size of one problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub num_bins: u64,
    pub majority_prob: f64,
    pub training_size: u64,
}

impl ProblemSpec {
    pub fn new(num_bins: u64, majority_prob: f64, training_size: u64) -> Result<Self> {
        if num_bins == 0 {
            return Err(validation("num_bins must be at least 1"));
        }
        check_closed("p", majority_prob, 0.5, 1.0)?;
        Ok(ProblemSpec {
            num_bins,
            majority_prob,
            training_size,
        })
    }

    /// Probability mass of a single bin under uniform bins.
    pub fn bin_prob(&self) -> f64 {
        1.0 / self.num_bins as f64
    }
}

/// Per-bin probabilities `Pr(b)` and majority probabilities `Pr(v_b | b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    bin_probs: Vec<f64>,
    majority_probs: Vec<f64>,
}

impl BinTable {
    pub fn new(bin_probs: Vec<f64>, majority_probs: Vec<f64>) -> Result<Self> {
        if bin_probs.len() != majority_probs.len() {
            return Err(validation(format!(
                "bin_probs has {} entries but majority_probs has {}",
                bin_probs.len(),
                majority_probs.len()
            )));
        }
        if bin_probs.is_empty() {
            return Err(validation("a bin table needs at least one bin"));
        }
        if let Some(bad) = bin_probs.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(validation(format!(
                "bin probability {bad} is negative or not finite"
            )));
        }
        let total: f64 = bin_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(validation(format!(
                "bin probabilities sum to {total}, not 1"
            )));
        }
        if let Some(bad) = majority_probs.iter().find(|q| !(0.5..=1.0).contains(*q)) {
            return Err(validation(format!(
                "majority probability {bad} is outside [0.5, 1]"
            )));
        }
        Ok(BinTable {
            bin_probs,
            majority_probs,
        })
    }

    /// `num_bins` equiprobable bins sharing one majority probability.
    pub fn uniform(num_bins: usize, p: f64) -> Result<Self> {
        if num_bins == 0 {
            return Err(validation("a bin table needs at least one bin"));
        }
        Self::new(vec![1.0 / num_bins as f64; num_bins], vec![p; num_bins])
    }

    pub fn len(&self) -> usize {
        self.bin_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_probs.is_empty()
    }

    pub fn bin_probs(&self) -> &[f64] {
        &self.bin_probs
    }

    pub fn majority_probs(&self) -> &[f64] {
        &self.majority_probs
    }
}

/// Accuracy of always predicting each bin's true majority value.
pub fn optimal_accuracy(table: &BinTable) -> f64 {
    table
        .bin_probs
        .iter()
        .zip(&table.majority_probs)
        .map(|(w, q)| w * q)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Expected accuracy of a learner that outputs bin `b`'s majority value with
/// probability `learn_probs[b]` (and the other value otherwise).
pub fn expected_accuracy_table(table: &BinTable, learn_probs: &[f64]) -> Result<f64> {
    if learn_probs.len() != table.len() {
        return Err(validation(format!(
            "learn_probs has {} entries for a table of {} bins",
            learn_probs.len(),
            table.len()
        )));
    }
    for &l in learn_probs {
        check_prob("learn probability", l)?;
    }
    let ea = table
        .bin_probs
        .iter()
        .zip(&table.majority_probs)
        .zip(learn_probs)
        .map(|((w, q), l)| w * (l * q + (1.0 - l) * (1.0 - q)))
        .sum::<f64>();
    Ok(ea.clamp(0.0, 1.0))
}

/// Which procedure produced an [`AccuracyEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    OldBound,
    GLowerBound,
    Simulated,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::OldBound => "old_bound",
            Method::GLowerBound => "g_lower_bound",
            Method::Simulated => "simulated",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// An accuracy in `[0, 1]` tagged with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyEstimate {
    pub value: f64,
    pub method: Method,
    pub detail: String,
}

impl AccuracyEstimate {
    pub fn new(value: f64, method: Method, detail: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(validation(format!("accuracy {value} is outside [0, 1]")));
        }
        Ok(AccuracyEstimate {
            value,
            method,
            detail: detail.into(),
        })
    }
}

impl fmt::Display for AccuracyEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.method)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}
