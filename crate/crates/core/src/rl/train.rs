use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{extract_graph, links_from_actions, sample_links, update_policy, Agent};
use super::reward::{evaluate_links, EpisodeOutcome, RewardWeights};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// The channel is static, so every device sits in a single state.
pub const STATIC_STATE: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub episodes: usize,
    pub allow_no_link: bool,
}

/// Summary of one training episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub mean_reward: f64,
    pub inter_cluster_load: Vec<f64>,
    pub budget_slack: Vec<f64>,
    pub mean_link_success: Option<f64>,
    pub links: Vec<Option<usize>>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agents: Vec<Agent>,
    pub trace: Vec<EpisodeRecord>,
}

impl TrainOutcome {
    pub fn graph(&self) -> Vec<Option<usize>> {
        extract_graph(&self.agents, STATIC_STATE)
    }
}

/// Step-wise trainer; [`train`] runs it for a fixed number of episodes.
#[derive(Debug, Clone)]
pub struct Trainer<'a> {
    scenario: &'a Scenario,
    weights: RewardWeights,
    agents: Vec<Agent>,
    episodes_run: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(scenario: &'a Scenario, weights: RewardWeights, allow_no_link: bool) -> Result<Self> {
        scenario.validate()?;
        weights.validate(scenario.n_classes(), scenario.clusters.k())?;
        let n = scenario.n_devices();
        if !allow_no_link && n < 2 {
            return Err(Error::invalid("a single device cannot be forced to take a link"));
        }
        let agents = (0..n).map(|i| Agent::new(i, n, 1, allow_no_link)).collect();
        Ok(Trainer {
            scenario,
            weights,
            agents,
            episodes_run: 0,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    /// Sample links, exchange on scratch data, score, update every agent.
    pub fn episode<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<EpisodeOutcome> {
        let actions = sample_links(&self.agents, STATIC_STATE, rng);
        let links = links_from_actions(&actions, self.scenario.n_devices())?;
        let outcome = evaluate_links(self.scenario, &links, &self.weights)?;
        for (agent, &reward) in self.agents.iter_mut().zip(&outcome.rewards) {
            let action = agent.action_index(links[agent.owner]);
            update_policy(&mut agent.buffer, STATIC_STATE, action, reward);
        }
        self.episodes_run += 1;
        Ok(outcome)
    }

    pub fn record(&self, outcome: &EpisodeOutcome) -> EpisodeRecord {
        EpisodeRecord {
            episode: self.episodes_run - 1,
            mean_reward: outcome.mean_reward(),
            inter_cluster_load: outcome.inter_cluster_load.clone(),
            budget_slack: outcome.budget_slack(&self.weights),
            mean_link_success: outcome.mean_link_success(),
            links: outcome.links.clone(),
        }
    }

    pub fn finish(self) -> Vec<Agent> {
        self.agents
    }
}

pub fn train<R: Rng + ?Sized>(
    scenario: &Scenario,
    settings: &TrainSettings,
    weights: &RewardWeights,
    rng: &mut R,
) -> Result<TrainOutcome> {
    if settings.episodes == 0 {
        return Err(Error::invalid("training needs at least one episode"));
    }
    let mut trainer = Trainer::new(scenario, weights.clone(), settings.allow_no_link)?;
    let mut trace = Vec::with_capacity(settings.episodes);
    for _ in 0..settings.episodes {
        let outcome = trainer.episode(rng)?;
        trace.push(trainer.record(&outcome));
    }
    Ok(TrainOutcome {
        agents: trainer.finish(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::{ClassDistribution, ThresholdVector, TrustMatrix};
    use crate::network::{ChannelParams, ClusterPartition, RssMatrix};
    use crate::rl::link_probabilities;
    use crate::seed::rng_from_seed;

    /// Device 0 lacks classes 1..3. Device 1 holds all of them over a clean
    /// link; device 2 holds one of them over a poor link.
    fn dominance_scenario() -> Scenario {
        let n = 3;
        let mut rss = vec![vec![1.0; n]; n];
        rss[0][1] = 100.0;
        rss[0][2] = 0.5;
        Scenario {
            positions: vec![],
            rss: RssMatrix::from_rows(&rss).unwrap(),
            channel: ChannelParams {
                rate: 1.0,
                noise_power: 0.1,
            },
            clusters: ClusterPartition::single(n),
            distributions: vec![
                ClassDistribution(vec![20, 0, 0, 0]),
                ClassDistribution(vec![0, 20, 20, 20]),
                ClassDistribution(vec![0, 20, 0, 0]),
            ],
            thresholds: vec![ThresholdVector::uniform(4, 5); n],
            trust: vec![TrustMatrix::full(n, 4); n],
        }
    }

    fn weights() -> RewardWeights {
        RewardWeights {
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 0.0,
            gamma: 0.5,
            diversity_threshold: 1,
            budgets: vec![0.0],
        }
    }

    #[test]
    fn dominant_link_is_learned() {
        let scenario = dominance_scenario();
        let settings = TrainSettings {
            episodes: 2000,
            allow_no_link: true,
        };
        let out = train(&scenario, &settings, &weights(), &mut rng_from_seed(11)).unwrap();
        let p = link_probabilities(&out.agents[0].buffer, STATIC_STATE);
        assert!(p[1] > 0.9, "p = {p:?}");
        assert_eq!(out.graph()[0], Some(1));
        assert_eq!(out.trace.len(), 2000);
    }

    #[test]
    fn zero_weights_keep_policies_uniform() {
        let scenario = dominance_scenario();
        let settings = TrainSettings {
            episodes: 300,
            allow_no_link: true,
        };
        let out = train(&scenario, &settings, &RewardWeights::zero(1), &mut rng_from_seed(2)).unwrap();
        for agent in &out.agents {
            assert_eq!(link_probabilities(&agent.buffer, STATIC_STATE), vec![1.0 / 3.0; 3]);
        }
        assert!(out.trace.iter().all(|r| r.mean_reward == 0.0));
    }

    #[test]
    fn counts_grow_by_one_per_episode() {
        let scenario = dominance_scenario();
        let mut trainer = Trainer::new(&scenario, weights(), true).unwrap();
        let mut rng = rng_from_seed(5);
        for e in 1..=25u64 {
            let outcome = trainer.episode(&mut rng).unwrap();
            for (i, agent) in trainer.agents().iter().enumerate() {
                let total: u64 = (0..3).map(|a| agent.buffer.count(STATIC_STATE, a)).sum();
                assert_eq!(total, 3 + e);
                let k = scenario.clusters.cluster_of(i);
                assert_eq!(
                    outcome.rewards[i],
                    outcome.local_rewards[i] + 0.5 * outcome.global_rewards[k]
                );
            }
        }
    }

    #[test]
    fn zero_episodes_rejected() {
        let settings = TrainSettings {
            episodes: 0,
            allow_no_link: true,
        };
        assert!(train(&dominance_scenario(), &settings, &weights(), &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn training_is_seed_deterministic() {
        let scenario = dominance_scenario();
        let settings = TrainSettings {
            episodes: 200,
            allow_no_link: false,
        };
        let a = train(&scenario, &settings, &weights(), &mut rng_from_seed(8)).unwrap();
        let b = train(&scenario, &settings, &weights(), &mut rng_from_seed(8)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert!(a.trace.iter().all(|r| r.links.iter().all(Option::is_some)));
    }
}
