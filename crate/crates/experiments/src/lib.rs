//! Selection experiments on synthetic data, one function per acceptance
//! criterion. Each returns whether the criterion held plus a one-line summary.

use minipatch::ols::fit_centered;
use minipatch::rng::{stream, Purpose};
use minipatch::selector::select_thresholded_ols;
use minipatch::threshold::sample_sd;
use minipatch::{
    f1_score, fwer_experiment, generate_toeplitz, kde_threshold, oracle_select, run, DataMatrix, EngineConfig, FeatureSampler,
    FwerConfig, GroundTruth, KdeConfig, Minipatch, SamplerConfig, ScenarioConfig, Scheme, SelectionTracker,
    SelectorSpec,
};
use minipatch_cli::{run_cli, EXIT_OK};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::Value;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// The desk-scale Toeplitz instance: N = 1000, M = 2000, |S| = 10, rho = 0.95, SNR = 5.
fn toeplitz_instance(seed: u64) -> (DataMatrix, GroundTruth) {
    let cfg = ScenarioConfig {
        support_size: 10,
        rho: 0.95,
        ..ScenarioConfig::new(1000, 2000, 5.0, seed)
    };
    generate_toeplitz(&cfg).expect("valid scenario")
}

fn selection_config(scheme: Scheme, n: usize, m: usize, seed: u64) -> EngineConfig {
    let sampler = SamplerConfig {
        n,
        m,
        scheme,
        epochs: 10,
        pi_active: 0.1,
        gamma_ramp_iters: None,
        seed,
    };
    let mut cfg = EngineConfig::new(sampler, SelectorSpec::ThresholdedOls { alpha_sel: 0.05 });
    cfg.pi_thr = 0.5;
    cfg
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn desk_scale_recovery() -> Outcome {
    let scores: Vec<(f64, f64)> = SEEDS
        .par_iter()
        .map(|&seed| {
            let (data, truth) = toeplitz_instance(seed);
            let result = run(&data, &selection_config(Scheme::Ee, 500, 100, seed + 100)).unwrap();
            let oracle = oracle_select(&result.frequencies, truth.support.len()).unwrap();
            (f1_score(&oracle, &truth.support), f1_score(&result.stable_set, &truth.support))
        })
        .collect();
    let oracle = mean(&scores.iter().map(|s| s.0).collect::<Vec<_>>());
    let data_driven = mean(&scores.iter().map(|s| s.1).collect::<Vec<_>>());
    outcome(
        oracle >= 0.9 && data_driven >= 0.8,
        format!("mean oracle F1 {oracle:.3} (need >= 0.9), mean data-driven F1 {data_driven:.3} (need >= 0.8)"),
    )
}

pub fn ee_versus_uniform() -> Outcome {
    let (n, m) = (500, 100);
    // 1000 iterations after the E * G = 200 burn-in iterations, for both samplers.
    let budget = 10 * 2000usize.div_ceil(m) + 1000;
    let jobs: Vec<(u64, Scheme)> = SEEDS
        .iter()
        .flat_map(|&s| [(s, Scheme::Ee), (s, Scheme::Uniform)])
        .collect();
    let scores: Vec<(Scheme, f64)> = jobs
        .par_iter()
        .map(|&(seed, scheme)| {
            let (data, truth) = toeplitz_instance(seed);
            let mut cfg = selection_config(scheme, n, m, seed + 100);
            cfg.max_iters = Some(budget);
            cfg.patience = budget;
            let result = run(&data, &cfg).unwrap();
            assert_eq!(result.iterations_run, budget);
            let oracle = oracle_select(&result.frequencies, truth.support.len()).unwrap();
            (scheme, f1_score(&oracle, &truth.support))
        })
        .collect();
    let of = |scheme| mean(&scores.iter().filter(|s| s.0 == scheme).map(|s| s.1).collect::<Vec<_>>());
    let (ee, uniform) = (of(Scheme::Ee), of(Scheme::Uniform));
    outcome(
        ee - uniform >= -0.02,
        format!("{budget} iterations: EE oracle F1 {ee:.3}, uniform {uniform:.3}, difference {:.3} (need >= -0.02)", ee - uniform),
    )
}

pub fn fwer_bound() -> Outcome {
    let cfg = FwerConfig::new(100, 400, 200, 10, 0.05, 200, 2024);
    let out = fwer_experiment(&cfg).unwrap();
    let bound = 0.05 + 2.0 * (0.05f64 * 0.95 / 200.0).sqrt();
    outcome(
        out.empirical_fwer <= bound,
        format!(
            "empirical FWER {:.3} over {} replicates (need <= {bound:.4}); {} replicates left a feature unsampled",
            out.empirical_fwer, out.replicates, out.coverage_failures
        ),
    )
}

pub fn burn_in_coverage() -> Outcome {
    let mut rng = stream(4, 0, Purpose::Replicate);
    let mut failures = Vec::new();
    let mut non_divisible = 0;
    for t in 0..20 {
        let n_features = rng.random_range(5..400usize);
        // Force a remainder on the first half of the triples.
        let m = loop {
            let m = rng.random_range(1..=n_features);
            if t >= 10 || n_features % m != 0 {
                break m;
            }
        };
        let epochs = rng.random_range(1..=6usize);
        non_divisible += usize::from(n_features % m != 0);
        let scheme = if t % 2 == 0 { Scheme::Ee } else { Scheme::Prob };
        let cfg = SamplerConfig {
            epochs,
            seed: t,
            ..SamplerConfig::new(1, m, scheme)
        };
        let mut sampler = FeatureSampler::new(&cfg, n_features).unwrap();
        let mut tracker = SelectionTracker::new(n_features);
        for k in 1..=epochs * n_features.div_ceil(m) {
            let feats = sampler.next(k, &tracker, &mut stream(t, k as u64, Purpose::Features)).unwrap();
            // Keep the smallest feature so the adaptive state is non-trivial.
            let support = vec![feats[0]];
            tracker.update(&Minipatch::new(vec![0], feats, k).unwrap(), &support).unwrap();
        }
        if tracker.sampled_count().iter().any(|&c| c != epochs as u64) {
            failures.push((n_features, m, epochs));
        }
    }
    outcome(
        failures.is_empty() && non_divisible >= 10,
        format!("20 triples ({non_divisible} with M mod m != 0), violations: {failures:?}"),
    )
}

pub fn tracker_equivalence() -> Outcome {
    let mut rng = stream(5, 0, Purpose::Replicate);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n_features = rng.random_range(1..100usize);
        let patches = rng.random_range(1..200usize);
        let mut tracker = SelectionTracker::new(n_features);
        let mut log: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for k in 1..=patches {
            let m = rng.random_range(1..=n_features);
            let feats = rand::seq::index::sample(&mut rng, n_features, m).into_vec();
            let support: Vec<usize> = feats.iter().copied().filter(|_| rng.random_bool(0.3)).collect();
            tracker.update(&Minipatch::new(vec![0], feats.clone(), k).unwrap(), &support).unwrap();
            log.push((feats, support));
        }
        for j in 0..n_features {
            let sampled = log.iter().filter(|(f, _)| f.contains(&j)).count() as u64;
            let selected = log.iter().filter(|(_, s)| s.contains(&j)).count() as u64;
            let batch = selected as f64 / sampled.max(1) as f64;
            let same = tracker.sampled_count()[j] == sampled
                && tracker.selected_count()[j] == selected
                && tracker.frequency(j) == batch;
            mismatches += usize::from(!same);
        }
    }
    outcome(mismatches == 0, format!("100 traces, {mismatches} mismatched features"))
}

pub fn kde_separation() -> Outcome {
    let mut rng = stream(6, 0, Purpose::Replicate);
    let cfg = KdeConfig::default();
    let (mut cases, mut separated) = (0, 0);
    while cases < 50 {
        let n_low = rng.random_range(40..200usize);
        let n_high = rng.random_range(3..30usize);
        let low_centre: f64 = rng.random_range(0.0..0.15);
        let high_centre: f64 = rng.random_range(0.75..1.0);
        let spread: f64 = rng.random_range(0.0..0.02);
        let mut v: Vec<f64> = (0..n_low)
            .map(|_| (low_centre + rng.random_range(-spread..=spread)).clamp(0.0, 1.0))
            .collect();
        v.extend((0..n_high).map(|_| (high_centre + rng.random_range(-spread..=spread)).clamp(0.0, 1.0)));
        let low_max = v[..n_low].iter().cloned().fold(f64::MIN, f64::max);
        let high_min = v[n_low..].iter().cloned().fold(f64::MAX, f64::min);
        if high_min - low_max < 4.0 * sample_sd(&v) {
            continue;
        }
        cases += 1;
        let thr = kde_threshold(&v, &cfg).unwrap();
        separated += usize::from(low_max < thr && thr < high_min);
    }
    outcome(separated == cases, format!("{separated}/{cases} vectors separated (need all)"))
}

pub fn ols_noise_control() -> Outcome {
    let mut rng = stream(7, 0, Purpose::Replicate);
    let patches = 2000;
    let mut any = 0;
    for _ in 0..patches {
        let x = Array2::from_shape_fn((200, 10), |_| rng.sample(StandardNormal));
        let y = Array1::from_shape_fn(200, |_| rng.sample(StandardNormal));
        debug_assert_eq!(fit_centered(y.view(), x.view()).unwrap().df_resid, 189);
        any += usize::from(!select_thresholded_ols(y.view(), x.view(), 0.05).unwrap().is_empty());
    }
    let rate = any as f64 / patches as f64;
    outcome(rate <= 0.06, format!("any-selection rate {rate:.4} over {patches} patches (need <= 0.06)"))
}

fn cli(args: &[&str]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli(std::iter::once("minipatch").chain(args.iter().copied()), &mut out, &mut err);
    assert_eq!(code, EXIT_OK, "{}", String::from_utf8_lossy(&err));
    out
}

fn cli_json(args: &[&str]) -> Value {
    serde_json::from_slice(&cli(args)).unwrap()
}

pub fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let data = dir.path().join("toeplitz.csv");
    let data = data.to_str().unwrap();
    cli(&["generate", "--N", "400", "--M", "300", "--support", "5", "--seed", "8", "--out", data]);
    let base = ["select", "--data", data, "--n", "150", "--m", "25", "--seed", "17"];

    let a = cli_json(&base);
    let b = cli_json(&base);
    let same_run = ["stable_set", "frequencies", "iterations_run"].iter().all(|k| a[k] == b[k]);

    let uniform = [&base[..], &["--sampler", "uniform", "--max-iters", "2000"]].concat();
    let mut one = cli_json(&[&uniform[..], &["--threads", "1"]].concat());
    let mut eight = cli_json(&[&uniform[..], &["--threads", "8"]].concat());
    for r in [&mut one, &mut eight] {
        r["wall_time_secs"] = Value::Null;
        r["config"]["threads"] = Value::Null;
    }
    let same_threads = one == eight;
    outcome(
        same_run && same_threads,
        format!(
            "repeat run identical: {same_run} ({} iterations); uniform threads 1 vs 8 identical: {same_threads}",
            a["iterations_run"]
        ),
    )
}

pub fn size_sweep() -> Outcome {
    let (data, truth) = toeplitz_instance(0);
    let support = truth.support.len();
    let cells: Vec<(usize, usize)> = [3, 5, 8, 10]
        .iter()
        .flat_map(|&mm| [2, 5, 10].map(move |nm| (mm * support, nm * mm * support)))
        .collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(m, n)| {
            let result = run(&data, &selection_config(Scheme::Ee, n, m, 7)).unwrap();
            let oracle = oracle_select(&result.frequencies, support).unwrap();
            f1_score(&oracle, &truth.support)
        })
        .collect();
    let good = scores.iter().filter(|&&f| f >= 0.85).count();
    let cells_text: Vec<String> = cells
        .iter()
        .zip(&scores)
        .map(|(&(m, n), f)| format!("m={m} n={n}: {f:.2}"))
        .collect();
    outcome(
        good >= 10,
        format!("{good}/12 cells with oracle F1 >= 0.85 (need >= 10); {}", cells_text.join(", ")),
    )
}
