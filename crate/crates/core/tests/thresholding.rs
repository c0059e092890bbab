use minipatch::threshold::sample_sd;
use minipatch::{fixed_select, kde_threshold, oracle_select, KdeConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normalized Gaussian KDE written out term by term, evaluated on the same grid.
/// Returns the grid position of the first interior strict local minimum.
fn direct_minimum(values: &[f64], grid_points: usize) -> Option<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let h = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..grid_points).map(|i| i as f64 / (grid_points - 1) as f64).collect();
    let f: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let mut s = 0.0;
            for v in values {
                let u = (x - v) / h;
                s += (-0.5 * u * u).exp();
            }
            s * norm
        })
        .collect();
    (1..grid_points - 1)
        .find(|&i| f[i] < f[i - 1] && f[i] < f[i + 1])
        .map(|i| grid[i])
}

#[test]
fn bimodal_threshold_matches_direct_density() {
    let mut freqs = vec![0.9; 10];
    freqs.extend(vec![0.05; 90]);
    let cfg = KdeConfig::default();
    let thr = kde_threshold(&freqs, &cfg).unwrap();
    let expected = direct_minimum(&freqs, cfg.grid_points).expect("bimodal density has a dip");
    assert_eq!(thr, expected);
    assert!(thr > 0.05 && thr < 0.9);
    assert_eq!(fixed_select(&freqs, thr), (0..10).collect::<Vec<_>>());
}

#[test]
fn unimodal_threshold_falls_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let freqs: Vec<f64> = (0..100).map(|_| 0.3 + rng.random_range(-0.02..0.02)).collect();
    let cfg = KdeConfig::default();
    assert_eq!(direct_minimum(&freqs, cfg.grid_points), None);
    assert_eq!(kde_threshold(&freqs, &cfg).unwrap(), 0.5);
}

#[test]
fn identical_frequencies_fall_back() {
    assert_eq!(kde_threshold(&[0.42; 30], &KdeConfig::default()).unwrap(), 0.5);
    let cfg = KdeConfig {
        fallback_thr: 0.7,
        ..KdeConfig::default()
    };
    assert_eq!(kde_threshold(&[0.1; 30], &cfg).unwrap(), 0.7);
}

/// Low and high clusters separated by at least four bandwidths.
fn bimodal_strategy() -> impl Strategy<Value = Vec<f64>> {
    (2usize..30, 30usize..150, 0.0f64..0.01, 0.0f64..0.01, any::<u64>()).prop_filter_map(
        "gap below 4h",
        |(n_high, n_low, spread_low, spread_high, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<f64> = (0..n_low).map(|_| rng.random_range(0.0..=spread_low)).collect();
            v.extend((0..n_high).map(|_| 1.0 - rng.random_range(0.0..=spread_high)));
            let low_max = v[..n_low].iter().cloned().fold(f64::MIN, f64::max);
            let high_min = v[n_low..].iter().cloned().fold(f64::MAX, f64::min);
            (high_min - low_max >= 4.0 * sample_sd(&v)).then_some(v)
        },
    )
}

proptest! {
    #[test]
    fn separated_clusters_are_split(v in bimodal_strategy()) {
        let thr = kde_threshold(&v, &KdeConfig::default()).unwrap();
        let high_min = v.iter().cloned().filter(|&f| f > 0.5).fold(f64::MAX, f64::min);
        let low_max = v.iter().cloned().filter(|&f| f < 0.5).fold(f64::MIN, f64::max);
        prop_assert!(low_max < thr && thr < high_min, "thr {} outside ({}, {})", thr, low_max, high_min);
    }

    #[test]
    fn selection_ignores_feature_order(
        freqs in proptest::collection::vec(0.0f64..=1.0, 1..80),
        pi_thr in 0.01f64..0.99,
        s_frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut perm: Vec<usize> = (0..freqs.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        // permuted[i] = freqs[perm[i]]
        let permuted: Vec<f64> = perm.iter().map(|&j| freqs[j]).collect();
        let map_back = |sel: Vec<usize>| {
            let mut out: Vec<usize> = sel.into_iter().map(|i| perm[i]).collect();
            out.sort_unstable();
            out
        };
        prop_assert_eq!(map_back(fixed_select(&permuted, pi_thr)), fixed_select(&freqs, pi_thr));

        // With ties the oracle breaks by index, so compare frequency multisets.
        let s = ((freqs.len() as f64 * s_frac).ceil() as usize).clamp(1, freqs.len());
        let mut a: Vec<f64> = oracle_select(&freqs, s).unwrap().iter().map(|&j| freqs[j]).collect();
        let mut b: Vec<f64> = map_back(oracle_select(&permuted, s).unwrap()).iter().map(|&j| freqs[j]).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn threshold_lies_inside_unit_interval(freqs in proptest::collection::vec(0.0f64..=1.0, 2..100)) {
        let thr = kde_threshold(&freqs, &KdeConfig::default()).unwrap();
        prop_assert!(thr > 0.0 && thr < 1.0);
    }
}
