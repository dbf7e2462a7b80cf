use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::config::{set_key, Baseline, ScenarioConfig};
use super::generate::{generate_scenario, uniform_baseline_links, GeneratedScenario};
use super::metrics::MetricsRecord;
use crate::error::{Error, Result};
use crate::exchange::{materialize_exchange, ExchangePlan};
use crate::fl::{parameter_count, run_fl, Dataset};
use crate::network::{energy_cost, energy_for_bits, mean_pairwise_distance};
use crate::rl::{evaluate_links, inter_cluster_load, train, RewardWeights, TrainOutcome, TrainSettings};
use crate::seed::SeedTree;

/// End-of-run facts that do not fit the per-episode record stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub run_id: String,
    pub baseline: Baseline,
    pub seed: u64,
    /// `links[i] = Some(j)` for an exchange `j -> i`.
    pub links: Vec<Option<usize>>,
    pub clusters: Vec<usize>,
    pub budgets: Vec<f64>,
    /// Mean `1 - P_D` over the graph's links.
    pub mean_link_success: Option<f64>,
    /// Requested points entering each cluster over the final graph.
    pub inter_cluster_load: Vec<f64>,
    pub points_transmitted: u64,
    pub points_delivered: u64,
    pub exchange_energy_j: f64,
    pub rl_signalling_energy_j: f64,
    pub d2s_energy_j: f64,
    pub stragglers: Vec<usize>,
    pub accuracy: Vec<f64>,
    pub final_accuracy: Option<f64>,
}

impl ExperimentSummary {
    pub fn d2d_energy_j(&self) -> f64 {
        self.exchange_energy_j + self.rl_signalling_energy_j
    }

    pub fn within_budget(&self) -> bool {
        self.inter_cluster_load.iter().zip(&self.budgets).all(|(q, b)| q <= b)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<MetricsRecord>,
    pub summary: ExperimentSummary,
}

fn stage(stage: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Stage {
        stage,
        message: e.to_string(),
    }
}

pub fn reward_weights(config: &ScenarioConfig, n_clusters: usize) -> RewardWeights {
    let r = &config.rewards;
    RewardWeights {
        alpha1: r.alpha1,
        alpha2: r.alpha2,
        alpha3: r.alpha3,
        gamma: r.gamma,
        diversity_threshold: r.diversity_threshold,
        budgets: vec![r.budget; n_clusters],
    }
}

/// Moves delivered points between the generated datasets. All removals read
/// the pre-exchange datasets, so a device never forwards what it just got.
pub fn move_samples(train_sets: &[Dataset], plan: &ExchangePlan) -> Result<Vec<Dataset>> {
    let mut sets = train_sets.to_vec();
    let mut inbound: Vec<Vec<Dataset>> = vec![Vec::new(); sets.len()];
    for link in &plan.links {
        for (class, &count) in link.delivered.iter().enumerate() {
            let count = count.round() as usize;
            if count > 0 {
                let moved = sets[link.transmitter].take_class(class, count)?;
                inbound[link.receiver].push(moved);
            }
        }
    }
    for (set, incoming) in sets.iter_mut().zip(inbound) {
        for part in incoming {
            set.extend(&part);
        }
    }
    Ok(sets)
}

struct Pipeline<'a> {
    config: &'a ScenarioConfig,
    seeds: SeedTree,
    generated: GeneratedScenario,
    weights: RewardWeights,
    mean_d2d_distance: f64,
    n_devices: usize,
}

impl<'a> Pipeline<'a> {
    fn new(config: &'a ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let seeds = SeedTree::new(config.experiment.seed);
        let generated = generate_scenario(config, &seeds).map_err(stage("scenario"))?;
        let weights = reward_weights(config, generated.scenario.clusters.k());
        let mean_d2d_distance = mean_pairwise_distance(&generated.scenario.positions);
        let n_devices = generated.scenario.n_devices();
        Ok(Pipeline {
            config,
            seeds,
            generated,
            weights,
            mean_d2d_distance,
            n_devices,
        })
    }

    /// Each device sends its local reward to every peer once per episode.
    fn signalling_energy_per_episode(&self) -> f64 {
        let n = self.n_devices as f64;
        let bits = n * (n - 1.0) * self.config.energy.bits_per_parameter as f64;
        energy_for_bits(bits, self.mean_d2d_distance, &self.config.energy)
    }

    fn train(&self, run_id: &str, records: &mut Vec<MetricsRecord>) -> Result<TrainOutcome> {
        let settings = TrainSettings {
            episodes: self.config.rl.episodes,
            allow_no_link: self.config.rewards.allow_no_link,
        };
        let outcome = train(
            &self.generated.scenario,
            &settings,
            &self.weights,
            &mut self.seeds.rng("rl"),
        )
        .map_err(stage("rl"))?;
        log::info!("{run_id}: trained graph over {} episodes", settings.episodes);
        let per_episode = self.signalling_energy_per_episode();
        for rec in &outcome.trace {
            records.push(MetricsRecord {
                run_id: run_id.to_string(),
                phase: "rl".into(),
                index: rec.episode,
                mean_reward: Some(rec.mean_reward),
                inter_cluster_load: rec.inter_cluster_load.clone(),
                budget_slack: rec.budget_slack.clone(),
                mean_link_success: rec.mean_link_success,
                test_accuracy: None,
                d2d_energy_j: per_episode * (rec.episode + 1) as f64,
                d2s_energy_j: 0.0,
                stragglers: 0,
            });
        }
        Ok(outcome)
    }

    fn graph(&self, run_id: &str, records: &mut Vec<MetricsRecord>) -> Result<(Vec<Option<usize>>, f64)> {
        match self.config.experiment.baseline {
            Baseline::Rl => {
                let outcome = self.train(run_id, records)?;
                let energy = self.signalling_energy_per_episode() * self.config.rl.episodes as f64;
                Ok((outcome.graph(), energy))
            }
            Baseline::Uniform => Ok((
                uniform_baseline_links(self.n_devices, &mut self.seeds.rng("uniform")).map_err(stage("links"))?,
                0.0,
            )),
            Baseline::None => Ok((vec![None; self.n_devices], 0.0)),
        }
    }
}

fn summary_for_graph(
    pipeline: &Pipeline<'_>,
    run_id: &str,
    links: Vec<Option<usize>>,
    signalling: f64,
) -> Result<ExperimentSummary> {
    let scenario = &pipeline.generated.scenario;
    let scored = evaluate_links(scenario, &links, &pipeline.weights).map_err(stage("links"))?;
    Ok(ExperimentSummary {
        run_id: run_id.to_string(),
        baseline: pipeline.config.experiment.baseline,
        seed: pipeline.config.experiment.seed,
        clusters: scenario.clusters.assignment().to_vec(),
        budgets: pipeline.weights.budgets.clone(),
        mean_link_success: scored.mean_link_success(),
        inter_cluster_load: scored.inter_cluster_load,
        links,
        points_transmitted: 0,
        points_delivered: 0,
        exchange_energy_j: 0.0,
        rl_signalling_energy_j: signalling,
        d2s_energy_j: 0.0,
        stragglers: Vec::new(),
        accuracy: Vec::new(),
        final_accuracy: None,
    })
}

/// Full pipeline: scenario, graph (trained, uniform or empty), materialized
/// exchange, energy accounting and federated training.
pub fn run_experiment(config: &ScenarioConfig, run_id: &str) -> Result<ExperimentOutput> {
    let pipeline = Pipeline::new(config)?;
    let mut records = Vec::new();
    let (links, signalling) = pipeline.graph(run_id, &mut records)?;
    let mut summary = summary_for_graph(&pipeline, run_id, links, signalling)?;
    let scenario = &pipeline.generated.scenario;

    let (materialized, plan) = materialize_exchange(
        &summary.links,
        &scenario.state(),
        &scenario.rss,
        &scenario.channel,
        config.experiment.delivery,
        &mut pipeline.seeds.rng("exchange"),
    )
    .map_err(stage("exchange"))?;
    let train_sets = move_samples(&pipeline.generated.train_sets, &plan).map_err(stage("exchange"))?;
    for (i, set) in train_sets.iter().enumerate() {
        if set.class_counts() != materialized[i] {
            return Err(Error::Stage {
                stage: "exchange",
                message: format!("device {i} holds {:?}, expected {:?}", set.class_counts().0, materialized[i].0),
            });
        }
    }

    let mut exchange_energy = 0.0;
    for link in &plan.links {
        let sent: u64 = link.buffered.iter().map(|&u| u.round() as u64).sum();
        let got: u64 = link.delivered.iter().map(|&u| u.round() as u64).sum();
        summary.points_transmitted += sent;
        summary.points_delivered += got;
        let distance = scenario.distance(link.receiver, link.transmitter).unwrap_or(0.0);
        exchange_energy += energy_cost(sent, distance, &config.energy);
    }
    summary.exchange_energy_j = exchange_energy;
    log::info!(
        "{run_id}: exchanged {} of {} transmitted points",
        summary.points_delivered,
        summary.points_transmitted
    );
    let load = inter_cluster_load(&plan, &scenario.clusters);

    let n_stragglers = (config.fl.straggler_fraction * pipeline.n_devices as f64).round() as usize;
    let mut stragglers = sample(&mut pipeline.seeds.rng("stragglers"), pipeline.n_devices, n_stragglers).into_vec();
    stragglers.sort_unstable();

    let trace = run_fl(
        &train_sets,
        &pipeline.generated.test_set,
        &config.fl,
        &stragglers,
        pipeline.seeds.derive("fl"),
    )
    .map_err(stage("fl"))?;
    log::info!("{run_id}: {} aggregation rounds, final accuracy {:?}", trace.accuracy.len(), trace.accuracy.last());

    let n_params = parameter_count(config.fl.architecture(), config.scenario.feature_dim, config.scenario.n_classes);
    let d2s_distance = config.energy.d2s_distance_factor * pipeline.mean_d2d_distance;
    let per_device_round = energy_for_bits(
        2.0 * (n_params as u64 * config.energy.bits_per_parameter) as f64,
        d2s_distance,
        &config.energy,
    );
    let d2d_total = summary.d2d_energy_j();
    let mut d2s = 0.0;
    for (round, (&acc, &participants)) in trace.accuracy.iter().zip(&trace.participants).enumerate() {
        d2s += per_device_round * participants as f64;
        records.push(MetricsRecord {
            run_id: run_id.to_string(),
            phase: "fl".into(),
            index: round,
            mean_reward: None,
            inter_cluster_load: load.clone(),
            budget_slack: pipeline.weights.budgets.iter().zip(&load).map(|(b, q)| b - q).collect(),
            mean_link_success: summary.mean_link_success,
            test_accuracy: Some(acc),
            d2d_energy_j: d2d_total,
            d2s_energy_j: d2s,
            stragglers: stragglers.len(),
        });
    }
    summary.d2s_energy_j = d2s;
    summary.final_accuracy = trace.accuracy.last().copied();
    summary.accuracy = trace.accuracy;
    summary.stragglers = stragglers;
    Ok(ExperimentOutput { records, summary })
}

/// Graph training only; no exchange or federated training.
pub fn run_training(config: &ScenarioConfig, run_id: &str) -> Result<ExperimentOutput> {
    let pipeline = Pipeline::new(config)?;
    let mut records = Vec::new();
    let outcome = pipeline.train(run_id, &mut records)?;
    let signalling = pipeline.signalling_energy_per_episode() * config.rl.episodes as f64;
    let summary = summary_for_graph(&pipeline, run_id, outcome.graph(), signalling)?;
    Ok(ExperimentOutput { records, summary })
}

/// Runs `config` once per value of `key`; outputs keep the order of `values`.
pub fn run_sweep(config: &ScenarioConfig, key: &str, values: &[String], training_only: bool) -> Result<Vec<ExperimentOutput>> {
    let configs: Vec<(String, ScenarioConfig)> = values
        .iter()
        .map(|v| Ok((format!("{key}={v}"), set_key(config, key, v)?)))
        .collect::<Result<_>>()?;
    let run = |(id, cfg): &(String, ScenarioConfig)| {
        if training_only {
            run_training(cfg, id)
        } else {
            run_experiment(cfg, id)
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        configs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs.iter().map(run).collect()
    }
}
