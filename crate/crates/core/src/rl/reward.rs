use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{run_exchange, DeliveryMode, ExchangePlan, ThresholdVector};
use crate::network::ClusterPartition;
use crate::scenario::Scenario;
use crate::seed::rng_from_seed;

/// Reward trade-off weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    /// Data-diversity weight.
    pub alpha1: f64,
    /// Link-unreliability penalty.
    pub alpha2: f64,
    /// Cluster-budget slack weight.
    pub alpha3: f64,
    /// Share of the cluster reward added to each device's own reward.
    pub gamma: f64,
    /// Minimum number of classes at threshold before diversity scores.
    pub diversity_threshold: usize,
    /// Inter-cluster request budget, one entry per cluster.
    pub budgets: Vec<f64>,
}

impl RewardWeights {
    pub fn validate(&self, n_classes: usize, n_clusters: usize) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("gamma", self.gamma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.diversity_threshold > n_classes {
            return Err(Error::invalid(format!(
                "diversity threshold {} exceeds {n_classes} classes",
                self.diversity_threshold
            )));
        }
        if self.budgets.len() != n_clusters {
            return Err(Error::invalid(format!(
                "{} budgets given for {n_clusters} clusters",
                self.budgets.len()
            )));
        }
        if self.budgets.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::invalid("budgets must be nonnegative"));
        }
        Ok(())
    }

    pub fn zero(n_clusters: usize) -> Self {
        RewardWeights {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            gamma: 0.0,
            diversity_threshold: 0,
            budgets: vec![0.0; n_clusters],
        }
    }
}

/// Number of classes at or above threshold, or 0 when that number is below
/// `l_hat`.
pub fn diversity_score(d: &[f64], c: &ThresholdVector, l_hat: usize) -> usize {
    let count = d.iter().zip(&c.0).filter(|(&d, &c)| d >= c as f64).count();
    if count >= l_hat {
        count
    } else {
        0
    }
}

/// `alpha1 * f(D_hat) - alpha2 * p_drop`.
///
/// Expected-mode counts are fractional; they are rounded to whole
/// data-points before scoring. Use 0 for `p_drop` when the device took no
/// link.
pub fn local_reward(d_hat: &[f64], c: &ThresholdVector, p_drop: f64, weights: &RewardWeights) -> f64 {
    let whole: Vec<f64> = d_hat.iter().map(|x| x.round()).collect();
    let f = diversity_score(&whole, c, weights.diversity_threshold);
    weights.alpha1 * f as f64 - weights.alpha2 * p_drop
}

/// Per-cluster sum of requested points over links entering the cluster from
/// outside.
pub fn inter_cluster_load(plan: &ExchangePlan, clusters: &ClusterPartition) -> Vec<f64> {
    let mut load = vec![0.0; clusters.k()];
    for link in &plan.links {
        if !clusters.same_cluster(link.receiver, link.transmitter) {
            load[clusters.cluster_of(link.receiver)] += link.requested.iter().sum::<u64>() as f64;
        }
    }
    load
}

/// Mean local reward plus `alpha3 * (B - load)` for every cluster.
pub fn global_reward(local_rewards: &[f64], load: &[f64], weights: &RewardWeights) -> Vec<f64> {
    let mean = local_rewards.iter().sum::<f64>() / local_rewards.len() as f64;
    load.iter()
        .zip(&weights.budgets)
        .map(|(q, b)| mean + weights.alpha3 * (b - q))
        .collect()
}

/// Everything one exchange round produced and how it was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub links: Vec<Option<usize>>,
    pub distributions: Vec<Vec<f64>>,
    /// Drop probability of each device's incoming link, 0 without one.
    pub link_drop: Vec<f64>,
    pub local_rewards: Vec<f64>,
    pub global_rewards: Vec<f64>,
    pub rewards: Vec<f64>,
    pub inter_cluster_load: Vec<f64>,
    pub plan: ExchangePlan,
}

impl EpisodeOutcome {
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn mean_reward(&self) -> f64 {
        self.total_reward() / self.rewards.len() as f64
    }

    /// Mean `1 - p_drop` over the links that exist, `None` without links.
    pub fn mean_link_success(&self) -> Option<f64> {
        let chosen: Vec<f64> = self
            .links
            .iter()
            .zip(&self.link_drop)
            .filter(|(l, _)| l.is_some())
            .map(|(_, p)| 1.0 - p)
            .collect();
        (!chosen.is_empty()).then(|| chosen.iter().sum::<f64>() / chosen.len() as f64)
    }

    pub fn budget_slack(&self, weights: &RewardWeights) -> Vec<f64> {
        weights
            .budgets
            .iter()
            .zip(&self.inter_cluster_load)
            .map(|(b, q)| b - q)
            .collect()
    }
}

/// Runs an expected-mode exchange over `links` on a scratch copy of the
/// scenario data and scores it.
pub fn evaluate_links(scenario: &Scenario, links: &[Option<usize>], weights: &RewardWeights) -> Result<EpisodeOutcome> {
    // Expected delivery draws nothing from the generator.
    let mut rng = rng_from_seed(0);
    let exchange = run_exchange(
        links,
        &scenario.state(),
        &scenario.rss,
        &scenario.channel,
        DeliveryMode::Expected,
        &mut rng,
    )?;
    let n = scenario.n_devices();
    let link_drop: Vec<f64> = (0..n)
        .map(|i| links[i].map_or(0.0, |j| scenario.drop_probability(i, j)))
        .collect();
    let local_rewards: Vec<f64> = (0..n)
        .map(|i| local_reward(&exchange.distributions[i], &scenario.thresholds[i], link_drop[i], weights))
        .collect();
    let load = inter_cluster_load(&exchange.plan, &scenario.clusters);
    let global_rewards = global_reward(&local_rewards, &load, weights);
    let rewards = (0..n)
        .map(|i| local_rewards[i] + weights.gamma * global_rewards[scenario.clusters.cluster_of(i)])
        .collect();
    Ok(EpisodeOutcome {
        links: links.to_vec(),
        distributions: exchange.distributions,
        link_drop,
        local_rewards,
        global_rewards,
        rewards,
        inter_cluster_load: load,
        plan: exchange.plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::LinkExchange;
    use approx::assert_relative_eq;

    fn weights(a1: f64, a2: f64, a3: f64, gamma: f64, l_hat: usize, budgets: Vec<f64>) -> RewardWeights {
        RewardWeights {
            alpha1: a1,
            alpha2: a2,
            alpha3: a3,
            gamma,
            diversity_threshold: l_hat,
            budgets,
        }
    }

    #[test]
    fn diversity_counts_classes_at_threshold() {
        let c = ThresholdVector(vec![10, 5, 5]);
        assert_eq!(diversity_score(&[12.0, 3.0, 8.0], &c, 2), 2);
        assert_eq!(diversity_score(&[12.0, 3.0, 8.0], &c, 3), 0);
        assert_eq!(diversity_score(&[10.0, 5.0, 5.0], &c, 3), 3);
        assert_eq!(diversity_score(&[10.0, 5.0, 5.0], &c, 0), 3);
    }

    #[test]
    fn local_reward_examples() {
        let c = ThresholdVector(vec![1; 4]);
        let w = weights(1.0, 1.0, 0.0, 0.0, 0, vec![]);
        assert_relative_eq!(local_reward(&[1.0; 4], &c, 0.5, &w), 3.5);
        assert_relative_eq!(local_reward(&[1.0; 4], &c, 0.0, &w), 4.0);
        let strict = weights(1.0, 1.0, 0.0, 0.0, 4, vec![]);
        assert_relative_eq!(local_reward(&[1.0, 1.0, 1.0, 0.0], &c, 0.3, &strict), -0.3);
    }

    #[test]
    fn fractional_counts_round_before_scoring() {
        let c = ThresholdVector(vec![10]);
        let w = weights(1.0, 0.0, 0.0, 0.0, 0, vec![]);
        assert_eq!(local_reward(&[9.6], &c, 0.0, &w), 1.0);
        assert_eq!(local_reward(&[9.4], &c, 0.0, &w), 0.0);
    }

    fn link(t: usize, r: usize, requested: Vec<u64>) -> LinkExchange {
        let l = requested.len();
        LinkExchange {
            transmitter: t,
            receiver: r,
            drop_probability: 0.0,
            available: requested.clone(),
            buffered: vec![0.0; l],
            delivered: vec![0.0; l],
            requested,
        }
    }

    #[test]
    fn inter_cluster_load_counts_only_crossing_links() {
        let clusters = ClusterPartition::from_assignment(vec![0, 0, 1, 1]).unwrap();
        let intra = ExchangePlan {
            links: vec![link(0, 1, vec![5, 5, 5]), link(3, 2, vec![1, 1, 1])],
        };
        assert_eq!(inter_cluster_load(&intra, &clusters), vec![0.0, 0.0]);
        let cross = ExchangePlan {
            links: vec![link(0, 2, vec![3, 0, 4])],
        };
        assert_eq!(inter_cluster_load(&cross, &clusters), vec![0.0, 7.0]);
        assert_eq!(inter_cluster_load(&ExchangePlan::default(), &clusters), vec![0.0, 0.0]);
    }

    #[test]
    fn global_reward_examples() {
        let w = weights(0.0, 0.0, 0.1, 1.0, 0, vec![10.0]);
        assert_relative_eq!(global_reward(&[2.0, 4.0], &[4.0], &w)[0], 3.6, max_relative = 1e-15);
        assert_relative_eq!(global_reward(&[2.0, 4.0], &[10.0], &w)[0], 3.0);
        // Over budget is a penalty.
        assert!(global_reward(&[0.0, 0.0], &[20.0], &w)[0] < 0.0);
    }
}
