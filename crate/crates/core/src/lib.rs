//! Minipatch feature selection.
//!
//! A base feature selector is fit on many tiny random submatrices
//! ("minipatches") drawn jointly over observations and features. Per-feature
//! selection frequencies are accumulated across minipatches, and features whose
//! frequency clears a threshold form the stable set. Feature sampling can be
//! uniform or adaptive (exploitation/exploration or frequency-proportional).

pub mod data;
pub mod engine;
pub mod error;
pub mod io;
pub mod ols;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod selector;
pub mod synth;
pub mod threshold;

pub use data::{DataMatrix, Minipatch, SelectionTracker};
pub use engine::{check_stop, run, run_with_selector, EngineConfig, Provenance, RunResult, StopState, ThresholdMode};
pub use error::{Error, Result};
pub use sampler::{FeatureSampler, SamplerConfig, Scheme};
pub use selector::{BaseSelector, SelectorSpec, ThresholdedOls, UnivariateTopK};
pub use synth::{f1_score, fwer_experiment, generate_toeplitz, FwerConfig, GroundTruth, ScenarioConfig};
pub use threshold::{fixed_select, kde_threshold, oracle_select, KdeConfig};
