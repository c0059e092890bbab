//! JSON reports for selection runs, simulations and FWER experiments.

use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::engine::{EngineConfig, RunResult, ThresholdUsed};
use crate::synth::{FwerOutcome, GroundTruth, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableFeature {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: EngineConfig,
    pub n_obs: usize,
    pub n_features: usize,
    pub stable_set: Vec<StableFeature>,
    pub frequencies: Vec<f64>,
    pub sampled_counts: Vec<u64>,
    pub iterations_run: usize,
    pub threshold: ThresholdUsed,
    pub wall_time_secs: f64,
}

impl RunReport {
    pub fn new(result: &RunResult, data: &DataMatrix) -> Self {
        Self {
            config: result.config.clone(),
            n_obs: data.n_obs(),
            n_features: data.n_features(),
            stable_set: result
                .stable_set
                .iter()
                .map(|&j| StableFeature {
                    index: j,
                    name: data.feature_name(j),
                })
                .collect(),
            frequencies: result.frequencies.clone(),
            sampled_counts: result.sampled_counts.clone(),
            iterations_run: result.iterations_run,
            threshold: result.threshold,
            wall_time_secs: result.wall_time_secs,
        }
    }

    /// Reconstructs the run result the report was made from.
    pub fn to_result(&self) -> RunResult {
        RunResult {
            stable_set: self.stable_set.iter().map(|f| f.index).collect(),
            frequencies: self.frequencies.clone(),
            sampled_counts: self.sampled_counts.clone(),
            iterations_run: self.iterations_run,
            threshold: self.threshold,
            wall_time_secs: self.wall_time_secs,
            config: self.config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub scenario_seed: u64,
    pub ground_truth: GroundTruth,
    pub run: RunReport,
    /// F1 of the stable set under the configured threshold.
    pub f1_data_driven: f64,
    /// F1 of the top-|S| features by frequency.
    pub f1_oracle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub n: usize,
    pub f1_data_driven: Summary,
    pub f1_oracle: Summary,
    pub mean_iterations: f64,
    pub mean_wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: ScenarioConfig,
    /// Empty in sweep mode.
    pub replicates: Vec<ReplicateReport>,
    pub f1_data_driven: Option<Summary>,
    pub f1_oracle: Option<Summary>,
    pub sweep: Option<Vec<SweepRow>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerReport {
    pub n_features: usize,
    pub n_obs: usize,
    pub n: usize,
    pub m: usize,
    pub pi_thr: f64,
    pub seed: u64,
    pub empirical_fwer: f64,
    pub bound: f64,
    pub margin: f64,
    pub within_bound: bool,
    pub outcome: FwerOutcome,
}
