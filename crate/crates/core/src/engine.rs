//! The minipatch selection loop.
//!
//! Each iteration draws a minipatch, runs the base selector on it and folds the
//! result into the [`SelectionTracker`]. The loop ends when the ranking of the
//! top features has been unchanged for `patience` consecutive iterations, or at
//! `max_iters`. The final frequencies are then thresholded into a stable set.

use std::time::Instant;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Minipatch, SelectionTracker};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::sampler::{sample_features_uniform, sample_observations, FeatureSampler, SamplerConfig, Scheme};
use crate::selector::{BaseSelector, SelectorSpec};
use crate::threshold::{fixed_select, kde_threshold, oracle_select, rank_features, KdeConfig};

/// Frequency at or above which a feature counts towards `|H|` in the stopping rule.
const HIGH_FREQUENCY: f64 = 0.5;

/// Uniform-sampler patches are generated and fitted in batches of this size.
/// Fixed so that results do not depend on the thread count.
const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ThresholdMode {
    Fixed,
    Kde,
    Oracle { cardinality: usize },
}

impl std::str::FromStr for ThresholdMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(ThresholdMode::Fixed),
            "kde" => Ok(ThresholdMode::Kde),
            _ => match s.strip_prefix("oracle:").map(str::parse::<usize>) {
                Some(Ok(cardinality)) => Ok(ThresholdMode::Oracle { cardinality }),
                _ => Err(format!("unknown threshold `{s}` (expected fixed, kde or oracle:K)")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Fixed,
    Kde,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdUsed {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub sampler: SamplerConfig,
    pub selector: SelectorSpec,
    pub pi_thr: f64,
    pub threshold: ThresholdMode,
    pub kde: KdeConfig,
    pub tau_l: usize,
    pub tau_u: usize,
    pub patience: usize,
    /// `None`: `20 * E * G` for adaptive samplers, 10000 for uniform sampling.
    pub max_iters: Option<usize>,
    /// Worker threads for uniform-sampler batches. Adaptive runs are sequential.
    pub threads: usize,
}

impl EngineConfig {
    pub fn new(sampler: SamplerConfig, selector: SelectorSpec) -> Self {
        Self {
            sampler,
            selector,
            pi_thr: 0.5,
            threshold: ThresholdMode::Fixed,
            kde: KdeConfig::default(),
            tau_l: 30,
            tau_u: 90,
            patience: 100,
            max_iters: None,
            threads: 1,
        }
    }

    pub fn resolved_max_iters(&self, n_features: usize) -> usize {
        self.max_iters.unwrap_or_else(|| match self.sampler.scheme {
            Scheme::Uniform => 10_000,
            _ => 20 * self.sampler.epochs * n_features.div_ceil(self.sampler.m.max(1)),
        })
    }

    pub fn validate(&self, n_obs: usize, n_features: usize) -> Result<()> {
        self.sampler.validate(n_obs, n_features)?;
        if !(self.pi_thr > 0.0 && self.pi_thr < 1.0) {
            return Err(Error::config("pi_thr", format!("must lie in (0, 1), got {}", self.pi_thr)));
        }
        if self.tau_l == 0 {
            return Err(Error::config("tau_l", "must be positive"));
        }
        if self.tau_u < self.tau_l || !self.tau_u.is_multiple_of(self.tau_l) {
            return Err(Error::config(
                "tau_u",
                format!("must be a multiple of tau_l = {}, got {}", self.tau_l, self.tau_u),
            ));
        }
        if self.patience == 0 {
            return Err(Error::config("patience", "must be at least 1"));
        }
        if self.max_iters == Some(0) {
            return Err(Error::config("max_iters", "must be at least 1"));
        }
        if self.threads == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if let ThresholdMode::Oracle { cardinality } = self.threshold {
            if cardinality == 0 || cardinality > n_features {
                return Err(Error::config(
                    "threshold",
                    format!("oracle cardinality must lie in [1, {n_features}], got {cardinality}"),
                ));
            }
        }
        if self.threshold == ThresholdMode::Kde {
            self.kde.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub stable_set: Vec<usize>,
    pub frequencies: Vec<f64>,
    /// Times each feature appeared in a minipatch.
    pub sampled_counts: Vec<u64>,
    pub iterations_run: usize,
    pub threshold: ThresholdUsed,
    pub wall_time_secs: f64,
    pub config: EngineConfig,
}

/// Streak counter for the stopping rule.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopState {
    pub last_top: Vec<usize>,
    pub streak: usize,
}

/// `min(max(|H|, tau_l), tau_u)`, further capped at the number of features.
pub fn top_list_len(frequencies: &[f64], tau_l: usize, tau_u: usize) -> usize {
    let high = frequencies.iter().filter(|&&f| f >= HIGH_FREQUENCY).count();
    high.max(tau_l).min(tau_u).min(frequencies.len())
}

/// The `t` highest-frequency features in rank order (ties by ascending index).
fn top_list(frequencies: &[f64], t: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    let cmp = |a: &usize, b: &usize| frequencies[*b].total_cmp(&frequencies[*a]).then(a.cmp(b));
    if t < order.len() {
        order.select_nth_unstable_by(t, cmp);
        order.truncate(t);
    }
    order.sort_by(cmp);
    order
}

/// Advances the streak with the current frequencies; returns `true` once the
/// ordered top list has matched the previous one on `patience` consecutive checks.
pub fn check_stop(frequencies: &[f64], state: &mut StopState, tau_l: usize, tau_u: usize, patience: usize) -> bool {
    let top = top_list(frequencies, top_list_len(frequencies, tau_l, tau_u));
    if !state.last_top.is_empty() && top == state.last_top {
        state.streak = (state.streak + 1).min(patience);
    } else {
        state.last_top = top;
        state.streak = 0;
    }
    state.streak >= patience
}

/// Runs the configured built-in selector.
pub fn run(data: &DataMatrix, config: &EngineConfig) -> Result<RunResult> {
    let selector = config.selector.build()?;
    run_with_selector(data, config, selector.as_ref())
}

/// Runs with a caller-supplied base selector. `config.selector` is only echoed.
pub fn run_with_selector(data: &DataMatrix, config: &EngineConfig, selector: &dyn BaseSelector) -> Result<RunResult> {
    let started = Instant::now();
    let (n_obs, n_features) = (data.n_obs(), data.n_features());
    config.validate(n_obs, n_features)?;
    selector.check_patch_shape(config.sampler.n, config.sampler.m)?;

    let max_iters = config.resolved_max_iters(n_features);
    let mut tracker = SelectionTracker::new(n_features);
    let mut stop = StopState::default();
    let mut iterations = 0;

    let mut record = |k: usize,
                      patch: &Minipatch,
                      support: &[usize],
                      tracker: &mut SelectionTracker,
                      check: bool,
                      active: Option<usize>|
     -> Result<bool> {
        tracker.update(patch, support).map_err(|e| Error::Selector {
            iteration: k,
            source: Box::new(e),
        })?;
        iterations = k;
        if !check {
            return Ok(false);
        }
        let freqs = tracker.frequencies();
        let done = check_stop(&freqs, &mut stop, config.tau_l, config.tau_u, config.patience);
        debug!(
            "iter {k} active={active:?} top={:?} streak={}",
            &stop.last_top[..stop.last_top.len().min(5)],
            stop.streak
        );
        Ok(done)
    };

    if config.sampler.scheme == Scheme::Uniform {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?;
        let mut next = 1;
        'outer: while next <= max_iters {
            let last = (next + BATCH - 1).min(max_iters);
            let fit = |k: usize| -> Result<(Minipatch, Vec<usize>)> {
                let feats = sample_features_uniform(
                    n_features,
                    config.sampler.m,
                    &mut rng::stream(config.sampler.seed, k as u64, Purpose::Features),
                )?;
                fit_patch(data, config, selector, k, feats)
            };
            let batch: Vec<Result<(Minipatch, Vec<usize>)>> = if config.threads > 1 {
                pool.install(|| (next..=last).into_par_iter().map(fit).collect())
            } else {
                (next..=last).map(fit).collect()
            };
            for (k, outcome) in (next..=last).zip(batch) {
                let (patch, support) = outcome?;
                if record(k, &patch, &support, &mut tracker, true, None)? {
                    break 'outer;
                }
            }
            next = last + 1;
        }
    } else {
        let mut sampler = FeatureSampler::new(&config.sampler, n_features)?;
        for k in 1..=max_iters {
            let feats = sampler.next(
                k,
                &tracker,
                &mut rng::stream(config.sampler.seed, k as u64, Purpose::Features),
            )?;
            let (patch, support) = fit_patch(data, config, selector, k, feats)?;
            // The ranking during burn-in reflects partition order, not signal.
            let check = !sampler.in_burn_in(k);
            if record(k, &patch, &support, &mut tracker, check, sampler.active_size())? {
                break;
            }
        }
    }

    let frequencies = tracker.frequencies();
    let (stable_set, threshold) = apply_threshold(&frequencies, config)?;
    Ok(RunResult {
        stable_set,
        frequencies,
        sampled_counts: tracker.sampled_count().to_vec(),
        iterations_run: iterations,
        threshold,
        wall_time_secs: started.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Draws observations for iteration `k`, fits the selector and maps its local
/// support back to global feature indices.
fn fit_patch(
    data: &DataMatrix,
    config: &EngineConfig,
    selector: &dyn BaseSelector,
    k: usize,
    feats: Vec<usize>,
) -> Result<(Minipatch, Vec<usize>)> {
    let seed = config.sampler.seed;
    let obs = sample_observations(
        data.n_obs(),
        config.sampler.n,
        &mut rng::stream(seed, k as u64, Purpose::Observations),
    )?;
    let patch = Minipatch::new(obs, feats, k)?;
    let (y_sub, x_sub) = data.extract(&patch)?;
    let wrap = |e: Error| Error::Selector {
        iteration: k,
        source: Box::new(e),
    };
    let local = selector
        .select(
            y_sub.view(),
            x_sub.view(),
            &mut rng::stream(seed, k as u64, Purpose::Selector),
        )
        .map_err(wrap)?;
    let m = patch.m();
    let mut support = Vec::with_capacity(local.len());
    for b in local {
        if b >= m {
            return Err(wrap(Error::Contract(format!(
                "selector `{}` returned column {b} for a patch of width {m}",
                selector.name()
            ))));
        }
        support.push(patch.feat_idx[b]);
    }
    Ok((patch, support))
}

fn apply_threshold(frequencies: &[f64], config: &EngineConfig) -> Result<(Vec<usize>, ThresholdUsed)> {
    match config.threshold {
        ThresholdMode::Fixed => Ok((
            fixed_select(frequencies, config.pi_thr),
            ThresholdUsed {
                value: config.pi_thr,
                provenance: Provenance::Fixed,
            },
        )),
        ThresholdMode::Kde => {
            let value = kde_threshold(frequencies, &config.kde)?;
            Ok((
                fixed_select(frequencies, value),
                ThresholdUsed {
                    value,
                    provenance: Provenance::Kde,
                },
            ))
        }
        ThresholdMode::Oracle { cardinality } => {
            let stable = oracle_select(frequencies, cardinality)?;
            // Frequency of the last feature admitted.
            let value = frequencies[rank_features(frequencies)[cardinality - 1]];
            Ok((
                stable,
                ThresholdUsed {
                    value,
                    provenance: Provenance::Oracle,
                },
            ))
        }
    }
}
