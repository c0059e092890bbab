//! Turning final selection frequencies into a stable feature set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    /// Evaluation points on `[0, 1]`, endpoints included.
    pub grid_points: usize,
    /// Returned when the density has no interior local minimum.
    pub fallback_thr: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            grid_points: 512,
            fallback_thr: 0.5,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 16 {
            return Err(Error::config("grid_points", format!("need at least 16, got {}", self.grid_points)));
        }
        if !(self.fallback_thr > 0.0 && self.fallback_thr < 1.0) {
            return Err(Error::config("fallback_thr", format!("must lie in (0, 1), got {}", self.fallback_thr)));
        }
        Ok(())
    }
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Unnormalized Gaussian KDE of `values` at `x` with bandwidth `h`.
fn density(values: &[f64], h: f64, x: f64) -> f64 {
    let two_h2 = 2.0 * h * h;
    values.iter().map(|v| (-(x - v).powi(2) / two_h2).exp()).sum::<f64>() / values.len() as f64
}

/// Data-driven threshold: the smallest strict local minimum of a Gaussian KDE
/// of the frequencies (bandwidth = their sample SD) on a uniform grid over
/// `[0, 1]`. Falls back to `config.fallback_thr` when the bandwidth is zero or
/// no interior minimum exists. Only interior grid points qualify, so the
/// result always lies in `(0, 1)`.
pub fn kde_threshold(frequencies: &[f64], config: &KdeConfig) -> Result<f64> {
    if frequencies.len() < 2 {
        return Err(Error::Contract("KDE threshold needs at least two frequencies".into()));
    }
    config.validate()?;
    let h = sample_sd(frequencies);
    // Identical frequencies can leave rounding-level spread in the mean.
    if h.is_nan() || h <= 1e-12 {
        return Ok(config.fallback_thr);
    }
    let last = config.grid_points - 1;
    let grid: Vec<f64> = (0..config.grid_points).map(|i| i as f64 / last as f64).collect();
    let f: Vec<f64> = grid.iter().map(|&x| density(frequencies, h, x)).collect();
    let minimum = (1..last).find(|&i| f[i - 1] > f[i] && f[i + 1] > f[i]);
    Ok(minimum.map_or(config.fallback_thr, |i| grid[i]))
}

/// `{ j : frequencies[j] >= pi_thr }`.
pub fn fixed_select(frequencies: &[f64], pi_thr: f64) -> Vec<usize> {
    frequencies
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= pi_thr)
        .map(|(j, _)| j)
        .collect()
}

/// Feature indices ordered by frequency descending, ties by ascending index.
pub fn rank_features(frequencies: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..frequencies.len()).collect();
    order.sort_by(|&a, &b| frequencies[b].total_cmp(&frequencies[a]).then(a.cmp(&b)));
    order
}

/// The `s` most frequently selected features, returned sorted by index.
pub fn oracle_select(frequencies: &[f64], s: usize) -> Result<Vec<usize>> {
    if s == 0 || s > frequencies.len() {
        return Err(Error::config(
            "threshold",
            format!("oracle cardinality must lie in [1, {}], got {s}", frequencies.len()),
        ));
    }
    let mut top: Vec<usize> = rank_features(frequencies).into_iter().take(s).collect();
    top.sort_unstable();
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_frequencies_use_fallback() {
        assert_eq!(kde_threshold(&[0.3; 10], &KdeConfig::default()).unwrap(), 0.5);
    }

    #[test]
    fn too_few_values_rejected() {
        assert!(kde_threshold(&[0.3], &KdeConfig::default()).is_err());
        let bad = KdeConfig { grid_points: 8, ..KdeConfig::default() };
        assert!(kde_threshold(&[0.1, 0.2], &bad).is_err());
    }

    #[test]
    fn fixed_boundary_is_inclusive() {
        assert_eq!(fixed_select(&[0.5, 0.49], 0.5), vec![0]);
        assert!(fixed_select(&[0.0; 5], 0.5).is_empty());
    }

    #[test]
    fn oracle_small_cases() {
        assert_eq!(oracle_select(&[0.9, 0.1, 0.8], 2).unwrap(), vec![0, 2]);
        assert_eq!(oracle_select(&[0.2, 0.2, 0.2], 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(oracle_select(&[0.2, 0.2, 0.2], 1).unwrap(), vec![0]);
        assert!(oracle_select(&[0.2], 2).is_err());
    }

    #[test]
    fn oracle_agrees_with_sorting_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f: Vec<f64> = (0..40).map(|_| (rng.random_range(0..10) as f64) / 10.0).collect();
        let mut pairs: Vec<(f64, usize)> = f.iter().copied().zip(0..).collect();
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut expect: Vec<usize> = pairs[..5].iter().map(|p| p.1).collect();
        expect.sort_unstable();
        assert_eq!(oracle_select(&f, 5).unwrap(), expect);
    }
}
