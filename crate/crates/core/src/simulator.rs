//! Monte Carlo check of the theory.
//!
//! One trial assigns every bin a random majority value, drops `m` training
//! instances into bins, trains the mode-based learner and scores it on fresh
//! test instances. Each trial owns an RNG seeded from
//! `(master_seed, m, trial_index)`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bounds::{self, GApproxParams, DEFAULT_TRUNC_EPS};
use crate::distributions::BinDistribution;
use crate::error::{check_closed, validation, Error, Result};

pub const DEFAULT_NUM_BINS: usize = 10_000;
pub const DEFAULT_MAJORITY_PROB: f64 = 0.9;
pub const DEFAULT_REPETITIONS: u32 = 30;
pub const DEFAULT_TEST_SIZE: u32 = 1000;
pub const DEFAULT_SEED: u64 = 1995;
pub const DEFAULT_M_GRID: [u64; 11] = [
    0, 1250, 2500, 5000, 10_000, 20_000, 30_000, 40_000, 50_000, 60_000, 70_000,
];

/// Full description of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub distribution: BinDistribution,
    pub majority_prob: f64,
    pub m_grid: Vec<u64>,
    pub repetitions: u32,
    pub test_size: u32,
    pub master_seed: u64,
}

impl SimulationConfig {
    /// 10 000 bins, `p = 0.9`, 30 repetitions of 1000 test instances over the
    /// default grid, with the given bin distribution.
    pub fn with_distribution(distribution: BinDistribution) -> Self {
        SimulationConfig {
            distribution,
            majority_prob: DEFAULT_MAJORITY_PROB,
            m_grid: DEFAULT_M_GRID.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            test_size: DEFAULT_TEST_SIZE,
            master_seed: DEFAULT_SEED,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.distribution.num_bins()
    }

    pub fn validate(&self) -> Result<()> {
        check_closed("p", self.majority_prob, 0.5, 1.0)?;
        if self.m_grid.is_empty() {
            return Err(validation("m grid must not be empty"));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(validation("m grid must be strictly increasing"));
        }
        if self.repetitions < 2 {
            return Err(validation(
                "repetitions must be at least 2 for a confidence interval",
            ));
        }
        if self.test_size == 0 {
            return Err(validation("test size must be at least 1"));
        }
        Ok(())
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self::with_distribution(
            BinDistribution::uniform(DEFAULT_NUM_BINS).expect("non-zero bin count"),
        )
    }
}

/// Aggregate over the repetitions at one training size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationPoint {
    pub m: u64,
    pub mean_accuracy: f64,
    pub std_dev: f64,
    pub ci_half_width: f64,
}

impl SimulationPoint {
    /// Mean, sample standard deviation and two-sided 95% t half-width.
    pub fn from_trials(m: u64, accuracies: &[f64]) -> Result<Self> {
        let n = accuracies.len();
        if n < 2 {
            return Err(validation("need at least 2 trials"));
        }
        let mean = accuracies.iter().sum::<f64>() / n as f64;
        let ss: f64 = accuracies.iter().map(|a| (a - mean).powi(2)).sum();
        let std_dev = (ss / (n - 1) as f64).sqrt();
        let ci_half_width = t_quantile_975(n as u64 - 1) * std_dev / (n as f64).sqrt();
        Ok(SimulationPoint {
            m,
            mean_accuracy: mean,
            std_dev,
            ci_half_width,
        })
    }

    pub fn std_error(&self, repetitions: u32) -> f64 {
        self.std_dev / (repetitions as f64).sqrt()
    }
}

/// Upper 97.5% quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: u64) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial, mixed from the master seed, training size and index.
pub fn trial_seed(master_seed: u64, m: u64, trial_index: u32) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ m) ^ trial_index as u64)
}

/// A validated config with its alias table built once.
pub struct Simulator {
    config: SimulationConfig,
    sampler: WeightedAliasIndex<f64>,
}

impl Simulator {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let sampler = WeightedAliasIndex::new(config.distribution.weights().to_vec())
            .map_err(|e| Error::Validation(format!("cannot build alias table: {e}")))?;
        Ok(Simulator { config, sampler })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// Accuracy of one train/test cycle with `m` training instances.
    pub fn run_trial(&self, m: u64, trial_index: u32) -> f64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(trial_seed(self.config.master_seed, m, trial_index));
        let p = self.config.majority_prob;
        let num_bins = self.config.num_bins();

        let majority: Vec<bool> = (0..num_bins).map(|_| rng.random()).collect();
        let draw = |rng: &mut ChaCha8Rng| {
            let bin = self.sampler.sample(rng);
            let value = if rng.random_bool(p) {
                majority[bin]
            } else {
                !majority[bin]
            };
            (bin, value)
        };

        let mut seen = vec![0u32; num_bins];
        let mut ones = vec![0u32; num_bins];
        for _ in 0..m {
            let (bin, value) = draw(&mut rng);
            seen[bin] += 1;
            ones[bin] += value as u32;
        }

        // None marks an empty bin.
        let learned: Vec<Option<bool>> = seen
            .iter()
            .zip(&ones)
            .map(|(&n, &k)| match n {
                0 => None,
                _ if 2 * k > n => Some(true),
                _ if 2 * k < n => Some(false),
                _ => Some(rng.random()),
            })
            .collect();

        let mut correct = 0u32;
        for _ in 0..self.config.test_size {
            let (bin, value) = draw(&mut rng);
            let guess = learned[bin].unwrap_or_else(|| rng.random());
            correct += (guess == value) as u32;
        }
        correct as f64 / self.config.test_size as f64
    }

    /// All trials at one training size, ordered by trial index.
    pub fn trials(&self, m: u64) -> Vec<f64> {
        (0..self.config.repetitions)
            .into_par_iter()
            .map(|i| self.run_trial(m, i))
            .collect()
    }

    pub fn run(&self) -> Vec<SimulationPoint> {
        self.config
            .m_grid
            .iter()
            .map(|&m| {
                SimulationPoint::from_trials(m, &self.trials(m))
                    .expect("validated config has at least 2 repetitions")
            })
            .collect()
    }
}

/// Closed-form curves that can be evaluated over an `m` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Exact,
    OldBound,
    GLowerBound,
    Optimal,
}

impl CurveKind {
    pub const ALL: [CurveKind; 4] = [
        CurveKind::Exact,
        CurveKind::OldBound,
        CurveKind::GLowerBound,
        CurveKind::Optimal,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CurveKind::Exact => "exact",
            CurveKind::OldBound => "old_bound",
            CurveKind::GLowerBound => "g_lower_bound",
            CurveKind::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(CurveKind::Exact),
            "old" | "old_bound" => Some(CurveKind::OldBound),
            "glb" | "g_lower_bound" => Some(CurveKind::GLowerBound),
            "optimal" => Some(CurveKind::Optimal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: u64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_half_width: Option<f64>,
}

/// A labelled accuracy curve, sorted by `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub label: String,
    pub method: String,
    pub points: Vec<CurvePoint>,
}

impl CurveSeries {
    pub fn from_simulation(label: impl Into<String>, points: &[SimulationPoint]) -> Self {
        CurveSeries {
            label: label.into(),
            method: "simulated".to_string(),
            points: points
                .iter()
                .map(|p| CurvePoint {
                    m: p.m,
                    value: p.mean_accuracy,
                    ci_half_width: Some(p.ci_half_width),
                })
                .collect(),
        }
    }
}

/// Evaluates the requested closed forms at every `m` in `m_grid`.
pub fn theoretical_curves(
    num_bins: u64,
    p: f64,
    m_grid: &[u64],
    which: &[CurveKind],
) -> Result<Vec<CurveSeries>> {
    if num_bins == 0 {
        return Err(validation("num_bins must be at least 1"));
    }
    check_closed("p", p, 0.5, 1.0)?;
    if m_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(validation("m grid must be strictly increasing"));
    }
    let params = GApproxParams::default();
    which
        .iter()
        .map(|&kind| {
            let points = m_grid
                .iter()
                .map(|&m| {
                    let value = match kind {
                        CurveKind::Exact => {
                            bounds::ea_uniform(m, num_bins, p, DEFAULT_TRUNC_EPS)?.value
                        }
                        CurveKind::OldBound => bounds::old_overall_bound(m, num_bins, p),
                        CurveKind::GLowerBound => {
                            bounds::ea_g_lower_bound(m, num_bins, p, &params)?.value
                        }
                        CurveKind::Optimal => p,
                    };
                    Ok(CurvePoint {
                        m,
                        value,
                        ci_half_width: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CurveSeries {
                label: kind.label().to_string(),
                method: kind.label().to_string(),
                points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(distribution: BinDistribution) -> SimulationConfig {
        SimulationConfig {
            m_grid: vec![0, 50, 400],
            repetitions: 8,
            test_size: 200,
            ..SimulationConfig::with_distribution(distribution)
        }
    }

    #[test]
    fn t_quantile() {
        assert!((t_quantile_975(29) - 2.0452).abs() < 5e-5);
        assert!((t_quantile_975(1) - 12.7062).abs() < 1e-3);
        assert!((t_quantile_975(1000) - 1.962_339).abs() < 1e-5);
    }

    #[test]
    fn point_statistics() {
        let p = SimulationPoint::from_trials(5, &[0.7, 0.7]).unwrap();
        assert_eq!(p.std_dev, 0.0);
        assert_eq!(p.ci_half_width, 0.0);
        let p = SimulationPoint::from_trials(5, &[0.0, 1.0]).unwrap();
        assert!((p.mean_accuracy - 0.5).abs() < 1e-15);
        assert!((p.std_dev - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!((p.ci_half_width - 12.706_2 * 0.5).abs() < 1e-3);
        assert!(SimulationPoint::from_trials(5, &[0.3]).is_err());
    }

    #[test]
    fn config_validation() {
        let base = small(BinDistribution::uniform(10).unwrap());
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.repetitions = 1;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.m_grid = vec![5, 5];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.m_grid.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.majority_prob = 0.2;
        assert!(c.validate().is_err());
        let mut c = base;
        c.test_size = 0;
        assert!(Simulator::new(c).is_err());
    }

    #[test]
    fn deterministic_bins_are_learned_perfectly() {
        let mut c = small(BinDistribution::uniform(1).unwrap());
        c.majority_prob = 1.0;
        let sim = Simulator::new(c).unwrap();
        for i in 0..4 {
            assert_eq!(sim.run_trial(1, i), 1.0);
            assert_eq!(sim.run_trial(17, i), 1.0);
        }
    }

    #[test]
    fn seeds_control_everything() {
        let c = small(BinDistribution::zipf(100).unwrap());
        let a = Simulator::new(c.clone()).unwrap().run();
        let b = Simulator::new(c.clone()).unwrap().run();
        assert_eq!(a, b);
        let other = Simulator::new(SimulationConfig {
            master_seed: 7,
            ..c
        })
        .unwrap()
        .run();
        assert_ne!(a, other);
        assert_ne!(trial_seed(1, 0, 0), trial_seed(1, 0, 1));
        assert_ne!(trial_seed(1, 0, 0), trial_seed(1, 1, 0));
    }

    #[test]
    fn accuracies_are_probabilities() {
        let sim = Simulator::new(small(BinDistribution::uniform(50).unwrap())).unwrap();
        for point in sim.run() {
            assert!((0.0..=1.0).contains(&point.mean_accuracy));
            assert!(point.std_dev >= 0.0 && point.ci_half_width >= 0.0);
        }
    }

    #[test]
    fn small_uniform_run_tracks_theory() {
        let c = SimulationConfig {
            m_grid: vec![0, 20, 100, 400],
            repetitions: 40,
            test_size: 2000,
            ..SimulationConfig::with_distribution(BinDistribution::uniform(50).unwrap())
        };
        let sim = Simulator::new(c).unwrap();
        for point in sim.run() {
            let theory = bounds::ea_uniform(point.m, 50, 0.9, 1e-12).unwrap().value;
            let se = point.std_error(40).max(1e-3);
            assert!(
                (point.mean_accuracy - theory).abs() < 4.0 * se,
                "m={} sim={} theory={theory}",
                point.m,
                point.mean_accuracy
            );
        }
    }

    #[test]
    fn curves() {
        let grid = [0, 10_000, 70_000];
        let series = theoretical_curves(10_000, 0.9, &grid, &CurveKind::ALL).unwrap();
        assert_eq!(series.len(), 4);
        let by = |label: &str| series.iter().find(|s| s.label == label).unwrap();
        assert!(by("optimal").points.iter().all(|pt| pt.value == 0.9));
        assert_eq!(by("exact").points[0].value, 0.5);
        assert_eq!(by("g_lower_bound").points[0].value, 0.5);
        let old = by("old_bound").points[2].value;
        assert!((old - 0.799_726_435_410_333_6).abs() < 1e-12, "{old}");
        assert!(theoretical_curves(10_000, 0.9, &[5, 1], &CurveKind::ALL).is_err());
        assert!(theoretical_curves(0, 0.9, &grid, &CurveKind::ALL).is_err());
    }
}
