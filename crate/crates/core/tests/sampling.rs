use minipatch::rng::{stream, Purpose};
use minipatch::sampler::{exploit_explore, weighted_sample_without_replacement};
use minipatch::{FeatureSampler, Minipatch, SamplerConfig, Scheme, SelectionTracker};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact inclusion probabilities of sequential renormalized draws, by
/// enumerating every ordered draw of `m` distinct indices with positive weight.
fn inclusion_probabilities(weights: &[f64], m: usize) -> Vec<f64> {
    fn walk(weights: &[f64], m: usize, taken: &mut Vec<usize>, prob: f64, out: &mut [f64]) {
        if taken.len() == m {
            for &j in taken.iter() {
                out[j] += prob;
            }
            return;
        }
        let remaining: f64 = (0..weights.len())
            .filter(|j| !taken.contains(j))
            .map(|j| weights[j])
            .sum();
        for j in 0..weights.len() {
            if taken.contains(&j) || weights[j] == 0.0 {
                continue;
            }
            taken.push(j);
            walk(weights, m, taken, prob * weights[j] / remaining, out);
            taken.pop();
        }
    }
    let mut out = vec![0.0; weights.len()];
    walk(weights, m, &mut Vec::new(), 1.0, &mut out);
    out
}

#[test]
fn weighted_draws_match_enumerated_inclusion() {
    let mut weights = vec![0.0; 50];
    weights[0] = 0.8;
    for w in &mut weights[1..5] {
        *w = 0.2;
    }
    let exact = inclusion_probabilities(&weights, 3);
    assert!((exact.iter().sum::<f64>() - 3.0).abs() < 1e-12);

    let draws = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = vec![0usize; 50];
    for _ in 0..draws {
        for j in weighted_sample_without_replacement(&weights, 3, &mut rng) {
            hits[j] += 1;
        }
    }
    for j in 0..50 {
        let observed = hits[j] as f64 / draws as f64;
        assert!(
            (observed - exact[j]).abs() <= 0.02,
            "feature {j}: observed {observed}, exact {}",
            exact[j]
        );
    }
    assert!(hits[5..].iter().all(|&h| h == 0));
}

#[test]
fn prob_sampler_keeps_drawing_after_burn_in() {
    let cfg = SamplerConfig {
        epochs: 1,
        ..SamplerConfig::new(10, 3, Scheme::Prob)
    };
    let mut sampler = FeatureSampler::new(&cfg, 12).unwrap();
    let mut tracker = SelectionTracker::new(12);
    for k in 1..=40 {
        let feats = sampler.next(k, &tracker, &mut stream(5, k as u64, Purpose::Features)).unwrap();
        assert_eq!(feats.len(), 3);
        let patch = Minipatch::new(vec![0], feats.clone(), k).unwrap();
        // Feature 0 is always kept when sampled.
        let support: Vec<usize> = feats.iter().copied().filter(|&j| j == 0).collect();
        tracker.update(&patch, &support).unwrap();
    }
    let probs = sampler.probabilities().expect("post burn-in draw");
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(probs[0], 1.0);
}

/// Runs the sampler through burn-in with empty supports and returns the tracker.
fn burn_in_counts(n_features: usize, m: usize, epochs: usize, scheme: Scheme, seed: u64) -> (SelectionTracker, usize) {
    let cfg = SamplerConfig {
        epochs,
        seed,
        ..SamplerConfig::new(1, m, scheme)
    };
    let mut sampler = FeatureSampler::new(&cfg, n_features).unwrap();
    let mut tracker = SelectionTracker::new(n_features);
    let iters = sampler.burn_in_iters();
    for k in 1..=iters {
        let feats = sampler.next(k, &tracker, &mut stream(seed, k as u64, Purpose::Features)).unwrap();
        let patch = Minipatch::new(vec![0], feats, k).unwrap();
        tracker.update(&patch, &[]).unwrap();
    }
    (tracker, iters)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn burn_in_covers_every_feature_exactly_once_per_epoch(
        n_features in 2usize..200,
        m_frac in 0.01f64..1.0,
        epochs in 1usize..5,
        ee in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let m = ((n_features as f64 * m_frac).ceil() as usize).clamp(1, n_features);
        let scheme = if ee { Scheme::Ee } else { Scheme::Prob };
        let (tracker, iters) = burn_in_counts(n_features, m, epochs, scheme, seed);
        prop_assert_eq!(iters, epochs * n_features.div_ceil(m));
        prop_assert!(tracker.sampled_count().iter().all(|&c| c == epochs as u64));
    }

    #[test]
    fn exploit_explore_draws_are_valid(
        total in 1usize..80,
        active_mask in proptest::collection::vec(any::<bool>(), 80),
        m_frac in 0.0f64..1.0,
        gamma in 0.5f64..=1.0,
        seed in any::<u64>(),
    ) {
        let active: Vec<usize> = (0..total).filter(|&j| active_mask[j]).collect();
        let m = ((total as f64 * m_frac).ceil() as usize).clamp(1, total);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = exploit_explore(&active, total, m, gamma, &mut rng);
        let expected_exploit = m.min((gamma * active.len() as f64).floor() as usize);
        prop_assert_eq!(draw.exploited.len(), expected_exploit);
        prop_assert!(draw.exploited.iter().all(|j| active.contains(j)));
        let feats = draw.into_features();
        prop_assert_eq!(feats.len(), m);
        prop_assert!(feats.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(feats.iter().all(|&j| j < total));
    }

    #[test]
    fn weighted_draws_are_distinct(
        weights in proptest::collection::vec(0.0f64..1.0, 1..60),
        m_frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let m = ((weights.len() as f64 * m_frac).ceil() as usize).clamp(1, weights.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = weighted_sample_without_replacement(&weights, m, &mut rng);
        prop_assert_eq!(draw.len(), m);
        draw.sort_unstable();
        draw.dedup();
        prop_assert_eq!(draw.len(), m);
    }
}
