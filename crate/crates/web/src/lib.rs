//! Browser bindings for the `d2dgraph` simulator.
//!
//! Every export takes a JSON object of config overrides keyed by
//! `section.key` (for example `{"scenario.n_devices": 12, "experiment.seed": 3}`)
//! and returns a JSON string for the page to draw.

use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use d2dgraph::harness::{
    generate_scenario, reward_weights, run_experiment, set_keys, uniform_baseline_links, Baseline, ScenarioConfig,
};
use d2dgraph::network::drop_probability;
use d2dgraph::rl::{evaluate_links, train, EpisodeOutcome, TrainSettings};
use d2dgraph::seed::SeedTree;

const CURVE_POINTS: usize = 120;
const TRACE_POINTS: usize = 200;

/// Applies `{"section.key": value}` overrides on top of the defaults.
pub fn config_from_overrides(overrides: &str) -> Result<ScenarioConfig, String> {
    let config = ScenarioConfig::default();
    if overrides.trim().is_empty() {
        return Ok(config);
    }
    let map: serde_json::Map<String, Value> =
        serde_json::from_str(overrides).map_err(|e| format!("overrides must be a JSON object: {e}"))?;
    let pairs: Vec<(String, String)> = map
        .into_iter()
        .map(|(key, value)| {
            let literal = match value {
                Value::String(s) => s,
                other => other.to_string(),
            };
            (key, literal)
        })
        .collect();
    set_keys(&config, &pairs).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

/// Positions, clusters, per-link drop probabilities and the drop-probability
/// curve against distance for the configured channel.
pub fn layout_json(overrides: &str) -> Result<String, String> {
    let config = config_from_overrides(overrides)?;
    let g = generate_scenario(&config, &SeedTree::new(config.experiment.seed)).map_err(|e| e.to_string())?;
    let s = &g.scenario;
    let n = s.n_devices();
    let drop: Vec<Vec<f64>> = (0..n)
        .map(|rx| (0..n).map(|tx| if rx == tx { 0.0 } else { s.drop_probability(rx, tx) }).collect())
        .collect();

    let net = &config.network;
    let channel = net.channel();
    let max_d = net.area_side * std::f64::consts::SQRT_2;
    let mut curve = Vec::with_capacity(CURVE_POINTS);
    for k in 1..=CURVE_POINTS {
        let d = max_d * k as f64 / CURVE_POINTS as f64;
        let w = net.ref_power * d.powf(-net.pathloss_exponent);
        curve.push([d, drop_probability(w, &channel).map_err(|e| e.to_string())?]);
    }

    Ok(to_json(&json!({
        "area_side": net.area_side,
        "alpha_d": net.alpha_d,
        "positions": s.positions.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        "clusters": s.clusters.assignment(),
        "n_clusters": s.clusters.k(),
        "drop": drop,
        "curve": curve,
    })))
}

fn graph_view(outcome: &EpisodeOutcome) -> Value {
    json!({
        "links": outcome.links,
        "mean_link_success": outcome.mean_link_success(),
        "mean_reward": outcome.mean_reward(),
        "inter_cluster_load": outcome.inter_cluster_load,
        "distributions": outcome.distributions,
    })
}

/// Trains the exchange graph and scores it next to a uniformly drawn graph.
pub fn discover_json(overrides: &str) -> Result<String, String> {
    let config = config_from_overrides(overrides)?;
    let seeds = SeedTree::new(config.experiment.seed);
    let g = generate_scenario(&config, &seeds).map_err(|e| e.to_string())?;
    let s = &g.scenario;
    let weights = reward_weights(&config, s.clusters.k());
    let settings = TrainSettings {
        episodes: config.rl.episodes,
        allow_no_link: config.rewards.allow_no_link,
    };
    let trained = train(s, &settings, &weights, &mut seeds.rng("rl")).map_err(|e| e.to_string())?;
    let uniform = uniform_baseline_links(s.n_devices(), &mut seeds.rng("uniform")).map_err(|e| e.to_string())?;
    let learned = evaluate_links(s, &trained.graph(), &weights).map_err(|e| e.to_string())?;
    let random = evaluate_links(s, &uniform, &weights).map_err(|e| e.to_string())?;

    let stride = trained.trace.len().div_ceil(TRACE_POINTS).max(1);
    let trace: Vec<[f64; 2]> = trained
        .trace
        .iter()
        .step_by(stride)
        .map(|r| [r.episode as f64, r.mean_reward])
        .collect();

    Ok(to_json(&json!({
        "positions": s.positions.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
        "clusters": s.clusters.assignment(),
        "budget": config.rewards.budget,
        "before": s.distributions.iter().map(|d| &d.0).collect::<Vec<_>>(),
        "threshold": config.scenario.threshold,
        "learned": graph_view(&learned),
        "uniform": graph_view(&random),
        "reward_trace": trace,
    })))
}

/// Full pipeline under each baseline on the same scenario.
pub fn compare_json(overrides: &str) -> Result<String, String> {
    let config = config_from_overrides(overrides)?;
    let mut runs = serde_json::Map::new();
    for baseline in [Baseline::Rl, Baseline::Uniform, Baseline::None] {
        let mut c = config.clone();
        c.experiment.baseline = baseline;
        let out = run_experiment(&c, baseline.as_str()).map_err(|e| e.to_string())?;
        let s = out.summary;
        runs.insert(
            baseline.as_str().to_string(),
            json!({
                "accuracy": s.accuracy,
                "final_accuracy": s.final_accuracy,
                "mean_link_success": s.mean_link_success,
                "points_delivered": s.points_delivered,
                "d2d_energy_j": s.d2d_energy_j(),
                "d2s_energy_j": s.d2s_energy_j,
            }),
        );
    }
    Ok(to_json(&json!({ "tau_a": config.fl.tau_a, "runs": runs })))
}

fn js(result: Result<String, String>) -> Result<String, JsError> {
    result.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn network_layout(overrides: &str) -> Result<String, JsError> {
    js(layout_json(overrides))
}

#[wasm_bindgen]
pub fn discover_graph(overrides: &str) -> Result<String, JsError> {
    js(discover_json(overrides))
}

#[wasm_bindgen]
pub fn compare_baselines(overrides: &str) -> Result<String, JsError> {
    js(compare_json(overrides))
}
