use minipatch::ols::fit_centered;
use minipatch::selector::{column_correlations, select_thresholded_ols, select_univariate_topk};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn noise(n: usize, m: usize, rng: &mut ChaCha8Rng) -> (Array1<f64>, Array2<f64>) {
    let x = Array2::from_shape_fn((n, m), |_| rng.sample(StandardNormal));
    let y = Array1::from_shape_fn(n, |_| rng.sample(StandardNormal));
    (y, x)
}

/// Solves the centered normal equations by Gauss-Jordan elimination.
fn normal_equations(y: &Array1<f64>, x: &Array2<f64>) -> Vec<f64> {
    let (n, m) = x.dim();
    let ym = y.sum() / n as f64;
    let xm: Vec<f64> = (0..m).map(|j| x.column(j).sum() / n as f64).collect();
    let mut a = vec![vec![0.0; m + 1]; m];
    for r in 0..n {
        for i in 0..m {
            let xi = x[[r, i]] - xm[i];
            for j in 0..m {
                a[i][j] += xi * (x[[r, j]] - xm[j]);
            }
            a[i][m] += xi * (y[r] - ym);
        }
    }
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..m {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=m {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..m).map(|i| a[i][m] / a[i][i]).collect()
}

#[test]
fn pure_noise_selection_rate_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let patches = 2000;
    let mut any = 0;
    for _ in 0..patches {
        let (y, x) = noise(200, 10, &mut rng);
        if !select_thresholded_ols(y.view(), x.view(), 0.05).unwrap().is_empty() {
            any += 1;
        }
    }
    let rate = any as f64 / patches as f64;
    assert!(rate <= 0.06, "selection rate {rate}");
}

#[test]
fn copied_column_ranks_first() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (_, mut x) = noise(50, 6, &mut rng);
    let y = x.column(2).to_owned();
    assert_eq!(select_univariate_topk(y.view(), x.view(), 1), vec![2]);
    assert_eq!(select_univariate_topk(y.view(), x.view(), 10), (0..6).collect::<Vec<_>>());
    x.column_mut(4).fill(1.5);
    assert_eq!(column_correlations(y.view(), x.view())[4], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_fit_matches_normal_equations(n in 12usize..40, m in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (y, x) = noise(n, m, &mut rng);
        let fit = fit_centered(y.view(), x.view()).unwrap();
        prop_assert_eq!(fit.rank, m);
        prop_assert_eq!(fit.df_resid, n - m - 1);
        let oracle = normal_equations(&y, &x);
        for j in 0..m {
            let b = fit.coefficients[j].unwrap();
            prop_assert!((b - oracle[j]).abs() <= 1e-8 * (1.0 + oracle[j].abs()), "column {}: {} vs {}", j, b, oracle[j]);
            let p = fit.p_values[j].unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn ols_selection_is_invariant_to_response_shift_and_scale(
        seed in any::<u64>(),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (e, x) = noise(60, 5, &mut rng);
        let y = x.column(1).to_owned() * 0.8 + e;
        let base = select_thresholded_ols(y.view(), x.view(), 0.05).unwrap();
        let moved = y.mapv(|v| v * scale + shift);
        prop_assert_eq!(select_thresholded_ols(moved.view(), x.view(), 0.05).unwrap(), base);
    }

    #[test]
    fn univariate_returns_the_highest_correlations(n in 5usize..40, m in 1usize..12, k in 1usize..15, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (y, x) = noise(n, m, &mut rng);
        let sel = select_univariate_topk(y.view(), x.view(), k);
        prop_assert_eq!(sel.len(), k.min(m));
        prop_assert!(sel.windows(2).all(|w| w[0] < w[1]));
        let r = column_correlations(y.view(), x.view());
        let weakest_kept = sel.iter().map(|&j| r[j].abs()).fold(f64::MAX, f64::min);
        for j in (0..m).filter(|j| !sel.contains(j)) {
            prop_assert!(r[j].abs() <= weakest_kept);
        }
    }
}
