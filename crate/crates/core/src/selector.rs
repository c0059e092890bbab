//! Base selectors: feature selection on a single minipatch.
//!
//! A selector sees only the minipatch `(y_sub, X_sub)` and returns the local
//! column indices it keeps. Anything implementing [`BaseSelector`] can be
//! plugged into the engine.

use ndarray::{ArrayView1, ArrayView2};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols;

pub trait BaseSelector: Send + Sync {
    fn name(&self) -> &str;

    /// Rejects patch shapes the selector cannot handle. Called once before a run.
    fn check_patch_shape(&self, _n: usize, _m: usize) -> Result<()> {
        Ok(())
    }

    /// Local column indices (into `x`) of the selected features, without duplicates.
    fn select(&self, y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>, rng: &mut dyn RngCore) -> Result<Vec<usize>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorSpec {
    ThresholdedOls { alpha_sel: f64 },
    UnivariateTopk { top_k: usize },
}

impl Default for SelectorSpec {
    fn default() -> Self {
        SelectorSpec::ThresholdedOls { alpha_sel: 0.05 }
    }
}

impl SelectorSpec {
    pub fn build(&self) -> Result<Box<dyn BaseSelector>> {
        match *self {
            SelectorSpec::ThresholdedOls { alpha_sel } => Ok(Box::new(ThresholdedOls::new(alpha_sel)?)),
            SelectorSpec::UnivariateTopk { top_k } => Ok(Box::new(UnivariateTopK::new(top_k)?)),
        }
    }
}

/// OLS on the centered minipatch, keeping columns whose two-sided t-test
/// p-value is below `alpha_sel / m` (Bonferroni over the `m` columns).
#[derive(Debug, Clone, Copy)]
pub struct ThresholdedOls {
    alpha_sel: f64,
}

impl ThresholdedOls {
    pub fn new(alpha_sel: f64) -> Result<Self> {
        if !(alpha_sel > 0.0 && alpha_sel < 1.0) {
            return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha_sel}")));
        }
        Ok(Self { alpha_sel })
    }

    pub fn alpha_sel(&self) -> f64 {
        self.alpha_sel
    }
}

pub fn select_thresholded_ols(y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>, alpha_sel: f64) -> Result<Vec<usize>> {
    let m = x.ncols();
    let fit = ols::fit_centered(y, x)?;
    let cutoff = alpha_sel / m as f64;
    Ok(fit
        .p_values
        .iter()
        .enumerate()
        .filter_map(|(b, p)| p.filter(|&p| p < cutoff).map(|_| b))
        .collect())
}

impl BaseSelector for ThresholdedOls {
    fn name(&self) -> &str {
        "thresholded_ols"
    }

    fn check_patch_shape(&self, n: usize, m: usize) -> Result<()> {
        if n <= m + 1 {
            return Err(Error::config(
                "n",
                format!("thresholded OLS needs n > m + 1, got n = {n}, m = {m}"),
            ));
        }
        Ok(())
    }

    fn select(&self, y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>, _rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        select_thresholded_ols(y, x, self.alpha_sel)
    }
}

/// Keeps the `top_k` columns with the largest absolute Pearson correlation with `y`.
#[derive(Debug, Clone, Copy)]
pub struct UnivariateTopK {
    top_k: usize,
}

impl UnivariateTopK {
    pub fn new(top_k: usize) -> Result<Self> {
        if top_k == 0 {
            return Err(Error::config("selector", "univariate top-k needs k >= 1"));
        }
        Ok(Self { top_k })
    }
}

/// Pearson correlation of each column with `y`; zero-variance inputs give 0.
pub fn column_correlations(y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>) -> Vec<f64> {
    let n = y.len() as f64;
    let y_mean = y.sum() / n;
    let syy: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    x.columns()
        .into_iter()
        .map(|col| {
            let x_mean = col.sum() / n;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (a, b) in col.iter().zip(y.iter()) {
                let dx = a - x_mean;
                sxy += dx * (b - y_mean);
                sxx += dx * dx;
            }
            if sxx <= 0.0 || syy <= 0.0 {
                0.0
            } else {
                sxy / (sxx * syy).sqrt()
            }
        })
        .collect()
}

/// Column indices ordered by `|corr|` descending, ties by ascending index.
pub fn rank_by_abs_correlation(y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>) -> Vec<usize> {
    let corr = column_correlations(y, x);
    let mut order: Vec<usize> = (0..corr.len()).collect();
    order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()).then(a.cmp(&b)));
    order
}

pub fn select_univariate_topk(y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>, top_k: usize) -> Vec<usize> {
    let mut keep: Vec<usize> = rank_by_abs_correlation(y, x).into_iter().take(top_k).collect();
    keep.sort_unstable();
    keep
}

impl BaseSelector for UnivariateTopK {
    fn name(&self) -> &str {
        "univariate_topk"
    }

    fn select(&self, y: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>, _rng: &mut dyn RngCore) -> Result<Vec<usize>> {
        Ok(select_univariate_topk(y, x, self.top_k))
    }
}
