//! Numeric containers shared by the samplers, selectors and the engine.
//!
//! All indices are 0-based. Selection frequencies are always derived from the
//! integer counters in [`SelectionTracker`]; nothing accumulates in floating point.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The observed pair `(y, X)`: `N` observations of `M` features.
///
/// Immutable after construction, so a single instance can be shared by
/// every worker of a parallel run.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    y: Array1<f64>,
    x: Array2<f64>,
    feature_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(y: Array1<f64>, x: Array2<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        let (rows, cols) = x.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::Data(format!(
                "design matrix must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        if y.len() != rows {
            return Err(Error::Data(format!(
                "response has {} entries but design matrix has {rows} rows",
                y.len()
            )));
        }
        if let Some(names) = &feature_names {
            if names.len() != cols {
                return Err(Error::Data(format!(
                    "{} feature names given for {cols} columns",
                    names.len()
                )));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite response value at row {i}")));
        }
        if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at row {r}, column {c}")));
        }
        Ok(Self { y, x, feature_names })
    }

    /// Number of observations `N`.
    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    /// Number of features `M`.
    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Display name for feature `j`: the stored name, or `x{j}`.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("x{j}"),
        }
    }

    /// Copy out the sub-response and sub-matrix addressed by `patch`.
    pub fn extract(&self, patch: &Minipatch) -> Result<(Array1<f64>, Array2<f64>)> {
        let (n_obs, n_feat) = (self.n_obs(), self.n_features());
        if let Some(&i) = patch.obs_idx.iter().find(|&&i| i >= n_obs) {
            return Err(Error::Contract(format!(
                "observation index {i} out of range for N = {n_obs}"
            )));
        }
        if let Some(&j) = patch.feat_idx.iter().find(|&&j| j >= n_feat) {
            return Err(Error::Contract(format!(
                "feature index {j} out of range for M = {n_feat}"
            )));
        }
        let y_sub = patch.obs_idx.iter().map(|&i| self.y[i]).collect();
        let x_sub = Array2::from_shape_fn((patch.obs_idx.len(), patch.feat_idx.len()), |(a, b)| {
            self.x[[patch.obs_idx[a], patch.feat_idx[b]]]
        });
        Ok((y_sub, x_sub))
    }
}

/// Row and column index sets of one minipatch, plus the 1-based iteration
/// that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Minipatch {
    pub obs_idx: Vec<usize>,
    pub feat_idx: Vec<usize>,
    pub iteration: usize,
}

impl Minipatch {
    /// Builds a patch, sorting both index sets. Rejects empty or duplicated sets.
    pub fn new(mut obs_idx: Vec<usize>, mut feat_idx: Vec<usize>, iteration: usize) -> Result<Self> {
        obs_idx.sort_unstable();
        feat_idx.sort_unstable();
        if obs_idx.is_empty() || feat_idx.is_empty() {
            return Err(Error::Contract("minipatch index sets must be non-empty".into()));
        }
        if obs_idx.windows(2).any(|w| w[0] == w[1]) || feat_idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("minipatch index sets must not repeat indices".into()));
        }
        Ok(Self {
            obs_idx,
            feat_idx,
            iteration,
        })
    }

    pub fn n(&self) -> usize {
        self.obs_idx.len()
    }

    pub fn m(&self) -> usize {
        self.feat_idx.len()
    }
}

/// Per-feature counts of how often a feature was sampled into a minipatch and
/// how often the base selector kept it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionTracker {
    sampled: Vec<u64>,
    selected: Vec<u64>,
}

impl SelectionTracker {
    pub fn new(n_features: usize) -> Self {
        Self {
            sampled: vec![0; n_features],
            selected: vec![0; n_features],
        }
    }

    pub fn n_features(&self) -> usize {
        self.sampled.len()
    }

    pub fn sampled_count(&self) -> &[u64] {
        &self.sampled
    }

    pub fn selected_count(&self) -> &[u64] {
        &self.selected
    }

    /// Record one minipatch. `support` holds global feature indices and must be
    /// a subset of `patch.feat_idx`; nothing is modified if it is not.
    pub fn update(&mut self, patch: &Minipatch, support: &[usize]) -> Result<()> {
        if let Some(&j) = patch.feat_idx.iter().find(|&&j| j >= self.sampled.len()) {
            return Err(Error::Contract(format!(
                "feature index {j} out of range for tracker of width {}",
                self.sampled.len()
            )));
        }
        for &j in support {
            if patch.feat_idx.binary_search(&j).is_err() {
                return Err(Error::Contract(format!(
                    "selected feature {j} is not part of minipatch {}",
                    patch.iteration
                )));
            }
        }
        let mut seen = support.to_vec();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Contract("support contains duplicate features".into()));
        }
        for &j in &patch.feat_idx {
            self.sampled[j] += 1;
        }
        for &j in support {
            self.selected[j] += 1;
        }
        Ok(())
    }

    /// Pointwise counter addition, for combining trackers built by independent workers.
    pub fn merge(&mut self, other: &SelectionTracker) -> Result<()> {
        if other.n_features() != self.n_features() {
            return Err(Error::Contract(format!(
                "cannot merge trackers of width {} and {}",
                self.n_features(),
                other.n_features()
            )));
        }
        for (a, b) in self.sampled.iter_mut().zip(&other.sampled) {
            *a += b;
        }
        for (a, b) in self.selected.iter_mut().zip(&other.selected) {
            *a += b;
        }
        Ok(())
    }

    /// `selected / max(1, sampled)` for feature `j`.
    pub fn frequency(&self, j: usize) -> f64 {
        self.selected[j] as f64 / self.sampled[j].max(1) as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_features()).map(|j| self.frequency(j)).collect()
    }
}
