//! Synthetic sparse-regression benchmarks and accuracy metrics.

use log::warn;
use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::engine::{self, EngineConfig, ThresholdMode};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::sampler::{SamplerConfig, Scheme};
use crate::selector::SelectorSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_obs: usize,
    pub n_features: usize,
    pub support_size: usize,
    /// Lag-one correlation of the Toeplitz design, `Cov(x_i, x_j) = rho^|i-j|`.
    pub rho: f64,
    /// Target `Var(X beta) / Var(eps)` on the generated instance.
    pub snr: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(n_obs: usize, n_features: usize, snr: f64, seed: u64) -> Self {
        Self {
            n_obs,
            n_features,
            support_size: 20,
            rho: 0.95,
            snr,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_obs < 2 {
            return Err(Error::config("N", "need at least two observations"));
        }
        if self.n_features == 0 {
            return Err(Error::config("M", "need at least one feature"));
        }
        if self.support_size == 0 || self.support_size > self.n_features {
            return Err(Error::config(
                "support",
                format!("support size must lie in [1, {}], got {}", self.n_features, self.support_size),
            ));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::config("rho", format!("must lie in (-1, 1), got {}", self.rho)));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::config("snr", format!("must be positive, got {}", self.snr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Sorted indices of the non-zero coefficients.
    pub support: Vec<usize>,
    pub beta: Vec<f64>,
    /// Scale `b`: every non-zero `|beta_j|` lies in `[2/b, 3/b]`.
    pub b_used: f64,
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Toeplitz-correlated Gaussian design with a sparse linear response.
///
/// Rows follow the AR(1) recursion `x_0 ~ N(0,1)`,
/// `x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j`, whose covariance is exactly
/// `rho^|i-j|`. Signs and magnitudes `U[2, 3]` are drawn for the support, then
/// `b` is solved so that the empirical `Var(X beta) / Var(eps)` equals `snr`.
pub fn generate_toeplitz(config: &ScenarioConfig) -> Result<(DataMatrix, GroundTruth)> {
    config.validate()?;
    let (n, m) = (config.n_obs, config.n_features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut support = sample(&mut rng, m, config.support_size).into_vec();
    support.sort_unstable();
    let mut raw_beta = vec![0.0; m];
    for &j in &support {
        let magnitude = rng.random_range(2.0..=3.0);
        raw_beta[j] = if rng.random_bool(0.5) { magnitude } else { -magnitude };
    }

    let innovation = (1.0 - config.rho * config.rho).sqrt();
    let mut x = Array2::<f64>::zeros((n, m));
    for mut row in x.rows_mut() {
        let mut prev: f64 = rng.sample(StandardNormal);
        row[0] = prev;
        for j in 1..m {
            let z: f64 = rng.sample(StandardNormal);
            prev = config.rho * prev + innovation * z;
            row[j] = prev;
        }
    }
    let noise: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    let raw_signal: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|row| support.iter().map(|&j| row[j] * raw_beta[j]).sum())
        .collect();
    // Var(X beta) scales as 1/b^2.
    let b = (sample_variance(&raw_signal) / (config.snr * sample_variance(&noise))).sqrt();
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Data("generated signal has zero variance".into()));
    }
    let beta: Vec<f64> = raw_beta.iter().map(|v| v / b).collect();
    let y: Array1<f64> = raw_signal.iter().zip(&noise).map(|(s, e)| s / b + e).collect();

    let data = DataMatrix::new(y, x, None)?;
    Ok((data, GroundTruth { support, beta, b_used: b }))
}

/// F1 score of an estimated support against the truth. Zero when either
/// precision or recall is zero.
pub fn f1_score(estimated: &[usize], truth: &[usize]) -> f64 {
    if estimated.is_empty() || truth.is_empty() {
        return 0.0;
    }
    let hits = estimated.iter().filter(|j| truth.contains(j)).count() as f64;
    let precision = hits / estimated.len() as f64;
    let recall = hits / truth.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Two binomial standard errors of a rate `p` estimated from `reps` trials.
pub fn binomial_margin(p: f64, reps: usize) -> f64 {
    2.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerConfig {
    pub n_features: usize,
    pub n_obs: usize,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub pi_thr: f64,
    pub replicates: usize,
    /// Minipatches per replicate. `None`: `20 * ceil(M / m)`.
    pub iterations: Option<usize>,
    pub seed: u64,
}

impl FwerConfig {
    pub fn new(n_features: usize, n_obs: usize, n: usize, m: usize, alpha: f64, replicates: usize, seed: u64) -> Self {
        Self {
            n_features,
            n_obs,
            n,
            m,
            alpha,
            pi_thr: 0.5,
            replicates,
            iterations: None,
            seed,
        }
    }

    /// Bonferroni level handed to the thresholded-OLS selector: `alpha * pi_thr / M`.
    pub fn selector_level(&self) -> f64 {
        self.alpha * self.pi_thr / self.n_features as f64
    }

    fn resolved_iterations(&self) -> usize {
        self.iterations
            .unwrap_or_else(|| 20 * self.n_features.div_ceil(self.m.max(1)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerOutcome {
    pub empirical_fwer: f64,
    pub alpha: f64,
    pub margin: f64,
    pub replicates: usize,
    pub false_positive_replicates: usize,
    pub selector_level: f64,
    pub iterations_per_replicate: usize,
    /// Replicates in which some feature was never sampled.
    pub coverage_failures: usize,
    pub warning: Option<String>,
}

pub const MIN_RELIABLE_REPLICATES: usize = 50;

/// Empirical familywise error rate of uniform-sampler selection on pure noise.
///
/// Each replicate draws `X` and `y` as independent standard normals, so every
/// feature is a noise feature, and runs the full selection loop with a
/// thresholded-OLS selector at level `alpha * pi_thr / M`. The estimate is the
/// fraction of replicates whose stable set is non-empty.
pub fn fwer_experiment(config: &FwerConfig) -> Result<FwerOutcome> {
    if config.replicates == 0 {
        return Err(Error::config("reps", "need at least one replicate"));
    }
    if !(config.alpha > 0.0 && config.alpha <= 1.0) {
        return Err(Error::config("alpha", format!("must lie in (0, 1], got {}", config.alpha)));
    }
    let warning = (config.replicates < MIN_RELIABLE_REPLICATES).then(|| {
        let msg = format!(
            "only {} replicates; the FWER estimate is unreliable below {MIN_RELIABLE_REPLICATES}",
            config.replicates
        );
        warn!("{msg}");
        msg
    });

    let iterations = config.resolved_iterations();
    let level = config.selector_level();
    let mut sampler = SamplerConfig::new(config.n, config.m, Scheme::Uniform);
    sampler.seed = config.seed;
    let mut engine_config = EngineConfig::new(sampler, SelectorSpec::ThresholdedOls { alpha_sel: level });
    engine_config.pi_thr = config.pi_thr;
    engine_config.threshold = ThresholdMode::Fixed;
    engine_config.max_iters = Some(iterations);
    engine_config.patience = iterations;
    engine_config.validate(config.n_obs, config.n_features)?;

    let outcomes: Vec<Result<(bool, bool)>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, r as u64, Purpose::Replicate);
            let x = Array2::from_shape_fn((config.n_obs, config.n_features), |_| rng.sample(StandardNormal));
            let y = Array1::from_shape_fn(config.n_obs, |_| rng.sample(StandardNormal));
            let data = DataMatrix::new(y, x, None)?;
            let mut cfg = engine_config.clone();
            cfg.sampler.seed = rng.random();
            let result = engine::run(&data, &cfg)?;
            let covered = result.sampled_counts.iter().all(|&c| c > 0);
            Ok((!result.stable_set.is_empty(), covered))
        })
        .collect();

    let mut false_positive_replicates = 0;
    let mut coverage_failures = 0;
    for outcome in outcomes {
        let (any_selected, covered) = outcome?;
        false_positive_replicates += usize::from(any_selected);
        coverage_failures += usize::from(!covered);
    }
    let alpha = config.alpha.min(1.0);
    Ok(FwerOutcome {
        empirical_fwer: false_positive_replicates as f64 / config.replicates as f64,
        alpha,
        margin: binomial_margin(alpha, config.replicates),
        replicates: config.replicates,
        false_positive_replicates,
        selector_level: level,
        iterations_per_replicate: iterations,
        coverage_failures,
        warning,
    })
}
