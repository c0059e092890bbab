use minipatch::synth::binomial_margin;
use minipatch::{f1_score, fwer_experiment, generate_toeplitz, FwerConfig, ScenarioConfig};
use ndarray::ArrayView1;

fn corr(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn independent_columns_when_rho_is_zero() {
    let cfg = ScenarioConfig {
        rho: 0.0,
        support_size: 5,
        ..ScenarioConfig::new(1000, 20, 5.0, 1)
    };
    let (data, _) = generate_toeplitz(&cfg).unwrap();
    let x = data.x();
    let bound = 4.0 / (1000f64).sqrt();
    for i in 0..20 {
        for j in (i + 1)..20 {
            let r = corr(x.column(i), x.column(j));
            assert!(r.abs() <= bound, "corr({i}, {j}) = {r}");
        }
    }
}

#[test]
fn toeplitz_lag_correlations() {
    let cfg = ScenarioConfig {
        support_size: 5,
        ..ScenarioConfig::new(5000, 30, 5.0, 2)
    };
    let (data, _) = generate_toeplitz(&cfg).unwrap();
    let x = data.x();
    let lag = |d: usize| (0..30 - d).map(|j| corr(x.column(j), x.column(j + d))).sum::<f64>() / (30 - d) as f64;
    assert!((lag(1) - 0.95).abs() <= 0.02, "lag 1: {}", lag(1));
    assert!((lag(2) - 0.9025).abs() <= 0.02, "lag 2: {}", lag(2));
}

#[test]
fn empirical_snr_and_coefficients() {
    let cfg = ScenarioConfig {
        support_size: 10,
        ..ScenarioConfig::new(1000, 200, 5.0, 3)
    };
    let (data, truth) = generate_toeplitz(&cfg).unwrap();
    assert_eq!(truth.support.len(), 10);
    assert!(truth.support.windows(2).all(|w| w[0] < w[1]));
    let x = data.x();
    let signal: Vec<f64> = x.rows().into_iter().map(|r| r.iter().zip(&truth.beta).map(|(a, b)| a * b).sum()).collect();
    let eps: Vec<f64> = data.y().iter().zip(&signal).map(|(y, s)| y - s).collect();
    let snr = var(&signal) / var(&eps);
    assert!((4.95..=5.05).contains(&snr), "snr {snr}");
    for (j, &b) in truth.beta.iter().enumerate() {
        if truth.support.contains(&j) {
            let scaled = b.abs() * truth.b_used;
            assert!((2.0 - 1e-12..=3.0 + 1e-12).contains(&scaled));
        } else {
            assert_eq!(b, 0.0);
        }
    }
}

#[test]
fn generator_is_deterministic() {
    let cfg = ScenarioConfig::new(100, 50, 2.0, 9);
    let (a, ta) = generate_toeplitz(&cfg).unwrap();
    let (b, tb) = generate_toeplitz(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let (c, _) = generate_toeplitz(&ScenarioConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn invalid_scenarios_are_rejected() {
    let base = ScenarioConfig::new(100, 50, 5.0, 0);
    assert!(generate_toeplitz(&ScenarioConfig { rho: 1.0, ..base.clone() }).is_err());
    assert!(generate_toeplitz(&ScenarioConfig { snr: 0.0, ..base.clone() }).is_err());
    assert!(generate_toeplitz(&ScenarioConfig { support_size: 51, ..base.clone() }).is_err());
    assert!(generate_toeplitz(&ScenarioConfig { n_obs: 1, ..base }).is_err());
}

#[test]
fn f1_cases() {
    assert_eq!(f1_score(&[1, 2, 3], &[1, 2, 3]), 1.0);
    assert_eq!(f1_score(&[], &[1]), 0.0);
    assert_eq!(f1_score(&[4, 5], &[1, 2]), 0.0);
    // precision 1/2, recall 1/3
    assert!((f1_score(&[1, 9], &[1, 2, 3]) - 0.4).abs() < 1e-15);
}

#[test]
fn small_fwer_run_reports_warning_and_margin() {
    let cfg = FwerConfig::new(30, 100, 50, 5, 0.05, 10, 4);
    let out = fwer_experiment(&cfg).unwrap();
    assert_eq!(out.replicates, 10);
    assert!(out.warning.is_some());
    assert!((0.0..=1.0).contains(&out.empirical_fwer));
    assert_eq!(out.iterations_per_replicate, 120);
    assert!((out.selector_level - 0.05 * 0.5 / 30.0).abs() < 1e-15);
    assert!((binomial_margin(0.05, 200) - 0.0308).abs() < 1e-4);
    assert_eq!(fwer_experiment(&cfg).unwrap(), out);
}
