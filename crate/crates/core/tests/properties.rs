use num_bigint::BigUint;
use proptest::prelude::*;

use datareq::bounds::{ea_uniform, g_lower_bound, old_overall_bound, GApproxParams};
use datareq::distributions::BinDistribution;
use datareq::math::{bin_accuracy, g_exact, log_binomial_pmf, majority_win_prob};

/// Natural log of a positive big integer from its leading 64 bits.
fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64_digits().first().copied().unwrap_or(0) as f64).ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    (top.to_u64_digits()[0] as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

fn choose_big(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// `ln pmf(k; n, a/d)` computed exactly over the integers.
fn exact_log_pmf(k: u64, n: u64, a: u64, d: u64) -> f64 {
    let num = choose_big(n, k)
        * BigUint::from(a).pow(k as u32)
        * BigUint::from(d - a).pow((n - k) as u32);
    ln_big(&num) - n as f64 * (d as f64).ln()
}

#[test]
fn pmf_matches_integer_oracle_at_the_centre() {
    let got = log_binomial_pmf(5000, 10_000, 0.5).unwrap();
    let want = exact_log_pmf(5000, 10_000, 1, 2);
    assert!(((got - want) / want).abs() < 1e-10, "{got} vs {want}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_matches_integer_oracle(n in 1u64..600, frac in 0.0f64..=1.0, a in 1u64..10) {
        let d = 10;
        let k = ((n as f64) * frac).round() as u64;
        let got = log_binomial_pmf(k, n, a as f64 / d as f64).unwrap();
        let want = exact_log_pmf(k, n, a, d);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn win_probabilities_are_complementary(n in 0u64..2000, p in 0.0f64..=1.0) {
        let t = majority_win_prob(n, p).unwrap();
        let t_rev = majority_win_prob(n, 1.0 - p).unwrap();
        prop_assert!((t + t_rev - 1.0).abs() < 1e-12);
        let a = bin_accuracy(n, p).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn g_complement_identity(m in 0u64..3000, r in 0.001f64..0.999, p in 0.0f64..=1.0) {
        let a = g_exact(m, r, p, 1e-12).unwrap();
        let b = g_exact(m, r, 1.0 - p, 1e-12).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn lower_bound_never_exceeds_g(m in 0u64..3000, r in 0.0005f64..0.95, p in 0.5001f64..=1.0) {
        let lb = g_lower_bound(m, r, p, &GApproxParams::default()).unwrap();
        let g = g_exact(m, r, p, 1e-13).unwrap();
        prop_assert!(lb <= g + 1e-12, "lb {} > g {}", lb, g);
        prop_assert!(lb >= 0.0);
    }

    #[test]
    fn expected_accuracy_sits_between_bounds(
        m in 0u64..50_000,
        bins in 1u64..20_000,
        p in 0.5f64..=1.0,
    ) {
        let ea = ea_uniform(m, bins, p, 1e-12).unwrap().value;
        prop_assert!(ea <= p + 1e-12);
        prop_assert!(ea >= 0.5 - 1e-12);
        prop_assert!(old_overall_bound(m, bins, p) <= ea + 1e-12);
    }

    #[test]
    fn distributions_are_normalised(bins in 1usize..5000) {
        for d in [BinDistribution::uniform(bins).unwrap(), BinDistribution::zipf(bins).unwrap()] {
            let total: f64 = d.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(d.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn relevant_instances_are_linear_in_m(bins in 1usize..3000, m in 0u64..1_000_000) {
        for d in [BinDistribution::uniform(bins).unwrap(), BinDistribution::zipf(bins).unwrap()] {
            prop_assert_eq!(d.expected_relevant_instances(2 * m), 2.0 * d.expected_relevant_instances(m));
        }
    }

    #[test]
    fn zipf_dominates_uniform(bins in 2usize..5000, m in 1u64..100_000) {
        let u = BinDistribution::uniform(bins).unwrap();
        let z = BinDistribution::zipf(bins).unwrap();
        prop_assert!(z.expected_relevant_instances(m) > u.expected_relevant_instances(m));
        prop_assert!((u.summed_collision_prob() - 1.0 / bins as f64).abs() < 1e-12);
    }
}
