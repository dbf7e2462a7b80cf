//! Configuration, scenario generation, experiment orchestration and metrics
//! output.

pub mod config;
pub mod experiment;
pub mod generate;
pub mod metrics;

pub use config::{load_config, set_key, set_keys, Baseline, ScenarioConfig};
pub use experiment::{
    move_samples, reward_weights, run_experiment, run_sweep, run_training, ExperimentOutput, ExperimentSummary,
};
pub use generate::{draw_class_support, draw_trust, generate_scenario, uniform_baseline_links, GeneratedScenario};
pub use metrics::{emit_metrics, encode, load_metrics, MetricsFormat, MetricsRecord, CSV_HEADER};
