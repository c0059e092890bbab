//! Minipatch index generation.
//!
//! Observations are always drawn uniformly without replacement. Features are
//! drawn by one of three schemes:
//!
//! * `Uniform`: `m` features uniformly without replacement.
//! * `Ee`: exploitation/exploration. A burn-in stage walks `E` random
//!   partitions of the feature space, then each patch mixes features from the
//!   active set `A = { j : freq_j >= pi_active }` with features outside it.
//! * `Prob`: the same burn-in, then features are drawn with probability
//!   proportional to their current selection frequency.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::SelectionTracker;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Uniform,
    Ee,
    Prob,
}

impl Scheme {
    pub fn is_adaptive(self) -> bool {
        !matches!(self, Scheme::Uniform)
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Scheme::Uniform),
            "ee" => Ok(Scheme::Ee),
            "prob" => Ok(Scheme::Prob),
            other => Err(format!("unknown sampler `{other}` (expected uniform, ee or prob)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Observations per minipatch.
    pub n: usize,
    /// Features per minipatch.
    pub m: usize,
    pub scheme: Scheme,
    /// Burn-in epochs for the adaptive schemes.
    pub epochs: usize,
    /// Active-set threshold for `Ee`.
    pub pi_active: f64,
    /// Iterations after burn-in for gamma to climb from 0.5 to 1. `None` means `5 * G`.
    pub gamma_ramp_iters: Option<usize>,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(n: usize, m: usize, scheme: Scheme) -> Self {
        Self {
            n,
            m,
            scheme,
            epochs: 10,
            pi_active: 0.1,
            gamma_ramp_iters: None,
            seed: 0,
        }
    }

    pub fn validate(&self, n_obs: usize, n_features: usize) -> Result<()> {
        if self.n == 0 || self.n > n_obs {
            return Err(Error::config(
                "n",
                format!("observations per minipatch must lie in [1, {n_obs}], got {}", self.n),
            ));
        }
        if self.m == 0 || self.m > n_features {
            return Err(Error::config(
                "m",
                format!("features per minipatch must lie in [1, {n_features}], got {}", self.m),
            ));
        }
        if self.scheme.is_adaptive() && self.epochs == 0 {
            return Err(Error::config("epochs", "adaptive samplers need at least one burn-in epoch"));
        }
        if self.scheme == Scheme::Ee && !(self.pi_active > 0.0 && self.pi_active < 1.0) {
            return Err(Error::config(
                "pi_active",
                format!("must lie in (0, 1), got {}", self.pi_active),
            ));
        }
        if self.gamma_ramp_iters == Some(0) {
            return Err(Error::config("gamma_ramp_iters", "must be positive"));
        }
        Ok(())
    }
}

/// `n` distinct indices from `0..total`, sorted; every `n`-subset equally likely.
pub fn sample_observations<R: Rng + ?Sized>(total: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    sample_sorted(total, n, rng, "n")
}

pub fn sample_features_uniform<R: Rng + ?Sized>(total: usize, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    sample_sorted(total, m, rng, "m")
}

fn sample_sorted<R: Rng + ?Sized>(total: usize, k: usize, rng: &mut R, field: &'static str) -> Result<Vec<usize>> {
    if k == 0 || k > total {
        return Err(Error::config(
            field,
            format!("cannot draw {k} distinct indices from {total}"),
        ));
    }
    let mut idx = sample(rng, total, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Exploitation weight for adaptive iteration `k` (1-based, `k > epochs * groups`).
///
/// Geometric ramp `0.5 * 2^((k - E*G) / ramp)`, clamped at 1, so it equals 1
/// exactly at `k = E*G + ramp`.
pub fn gamma_schedule(k: usize, epochs: usize, groups: usize, ramp_iters: usize) -> f64 {
    let burn_in = epochs * groups;
    let steps = k.saturating_sub(burn_in) as f64;
    (0.5 * 2f64.powf(steps / ramp_iters as f64)).min(1.0)
}

/// One exploitation/exploration draw, split into its two parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EeDraw {
    pub exploited: Vec<usize>,
    pub explored: Vec<usize>,
}

impl EeDraw {
    pub fn into_features(self) -> Vec<usize> {
        let mut out = self.exploited;
        out.extend(self.explored);
        out.sort_unstable();
        out
    }
}

/// Draw `min(m, total)` features: `floor(gamma * |active|)` (capped at `m`) from
/// `active`, the rest from its complement. If the complement runs out, the
/// shortfall is taken from the unused part of `active`.
pub fn exploit_explore<R: Rng + ?Sized>(
    active: &[usize],
    total: usize,
    m: usize,
    gamma: f64,
    rng: &mut R,
) -> EeDraw {
    let m = m.min(total);
    let exploit_n = m.min((gamma * active.len() as f64).floor() as usize);

    let mut in_active = vec![false; total];
    for &j in active {
        in_active[j] = true;
    }
    let complement: Vec<usize> = (0..total).filter(|&j| !in_active[j]).collect();

    let mut shuffled_active = active.to_vec();
    shuffled_active.shuffle(rng);
    let exploited = shuffled_active[..exploit_n].to_vec();

    let explore_n = (m - exploit_n).min(complement.len());
    let mut explored: Vec<usize> = sample(rng, complement.len(), explore_n)
        .into_iter()
        .map(|i| complement[i])
        .collect();
    let shortfall = m - exploit_n - explore_n;
    if shortfall > 0 {
        let rest = &shuffled_active[exploit_n..];
        explored.extend(sample(rng, rest.len(), shortfall).into_iter().map(|i| rest[i]));
    }
    EeDraw { exploited, explored }
}

/// Sequential weighted sampling without replacement: each draw picks index `j`
/// with probability `w_j / sum(w)` over the not-yet-drawn indices. When fewer
/// than `m` weights are positive, the remainder is filled uniformly from the
/// indices not drawn yet. Returns indices in draw order.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(weights: &[f64], m: usize, rng: &mut R) -> Vec<usize> {
    let m = m.min(weights.len());
    let mut w: Vec<f64> = weights.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let mut taken = vec![false; w.len()];
    let mut out = Vec::with_capacity(m);

    while out.len() < m {
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (j, &wj) in w.iter().enumerate() {
            if wj > 0.0 {
                acc += wj;
                pick = Some(j);
                if target < acc {
                    break;
                }
            }
        }
        // `pick` is the last positive index if rounding left `target >= acc`.
        let j = pick.expect("positive total implies a positive weight");
        w[j] = 0.0;
        taken[j] = true;
        out.push(j);
    }

    if out.len() < m {
        let rest: Vec<usize> = (0..weights.len()).filter(|&j| !taken[j]).collect();
        out.extend(sample(rng, rest.len(), m - out.len()).into_iter().map(|i| rest[i]));
    }
    out
}

/// Feature-sampling state carried across iterations of one run.
#[derive(Debug, Clone)]
pub struct FeatureSampler {
    config: SamplerConfig,
    n_features: usize,
    groups: usize,
    ramp_iters: usize,
    partition: Vec<usize>,
    active_size: Option<usize>,
    gamma: Option<f64>,
    probabilities: Option<Vec<f64>>,
}

impl FeatureSampler {
    pub fn new(config: &SamplerConfig, n_features: usize) -> Result<Self> {
        if config.m == 0 || config.m > n_features {
            return Err(Error::config(
                "m",
                format!("features per minipatch must lie in [1, {n_features}], got {}", config.m),
            ));
        }
        let groups = n_features.div_ceil(config.m);
        Ok(Self {
            config: config.clone(),
            n_features,
            groups,
            ramp_iters: config.gamma_ramp_iters.unwrap_or(5 * groups),
            partition: (0..n_features).collect(),
            active_size: None,
            gamma: None,
            probabilities: None,
        })
    }

    /// `G = ceil(M / m)`.
    pub fn groups(&self) -> usize {
        self.groups
    }

    /// `E * G` for the adaptive schemes, 0 for uniform sampling.
    pub fn burn_in_iters(&self) -> usize {
        if self.config.scheme.is_adaptive() {
            self.config.epochs * self.groups
        } else {
            0
        }
    }

    pub fn in_burn_in(&self, k: usize) -> bool {
        k <= self.burn_in_iters()
    }

    /// Size of the active set used on the last exploitation/exploration draw.
    pub fn active_size(&self) -> Option<usize> {
        self.active_size
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Sampling probabilities used on the last probabilistic draw, if any.
    pub fn probabilities(&self) -> Option<&[f64]> {
        self.probabilities.as_deref()
    }

    /// Feature set for 1-based iteration `k`, sorted ascending. `tracker` must
    /// hold the counts of iterations `1..k`.
    pub fn next<R: Rng + ?Sized>(&mut self, k: usize, tracker: &SelectionTracker, rng: &mut R) -> Result<Vec<usize>> {
        if k == 0 {
            return Err(Error::Contract("iterations are numbered from 1".into()));
        }
        if tracker.n_features() != self.n_features {
            return Err(Error::Contract(format!(
                "tracker width {} does not match sampler width {}",
                tracker.n_features(),
                self.n_features
            )));
        }
        match self.config.scheme {
            Scheme::Uniform => sample_features_uniform(self.n_features, self.config.m, rng),
            _ if self.in_burn_in(k) => Ok(self.burn_in_block(k, rng)),
            Scheme::Ee => {
                let freqs = tracker.frequencies();
                let active: Vec<usize> = (0..self.n_features)
                    .filter(|&j| freqs[j] >= self.config.pi_active)
                    .collect();
                let gamma = gamma_schedule(k, self.config.epochs, self.groups, self.ramp_iters);
                self.active_size = Some(active.len());
                self.gamma = Some(gamma);
                Ok(exploit_explore(&active, self.n_features, self.config.m, gamma, rng).into_features())
            }
            Scheme::Prob => {
                let freqs = tracker.frequencies();
                let total: f64 = freqs.iter().sum();
                if total <= 0.0 {
                    self.probabilities = None;
                    return sample_features_uniform(self.n_features, self.config.m, rng);
                }
                let probs: Vec<f64> = freqs.iter().map(|f| f / total).collect();
                let mut feats = weighted_sample_without_replacement(&probs, self.config.m, rng);
                self.probabilities = Some(probs);
                feats.sort_unstable();
                Ok(feats)
            }
        }
    }

    fn burn_in_block<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> Vec<usize> {
        let group = (k - 1) % self.groups;
        if group == 0 {
            self.partition.shuffle(rng);
        }
        let start = group * self.config.m;
        let end = (start + self.config.m).min(self.n_features);
        let mut block = self.partition[start..end].to_vec();
        block.sort_unstable();
        block
    }
}
