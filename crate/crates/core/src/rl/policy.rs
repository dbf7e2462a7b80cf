use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-device experience: total reward and visit count for every
/// (state, transmitter) cell. Counts start at 1 and totals at 0, so the
/// initial policy is uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceBuffer {
    n_states: usize,
    n_actions: usize,
    total_reward: Vec<f64>,
    count: Vec<u64>,
}

impl ExperienceBuffer {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        ExperienceBuffer {
            n_states,
            n_actions,
            total_reward: vec![0.0; n_states * n_actions],
            count: vec![1; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn idx(&self, state: usize, action: usize) -> usize {
        assert!(state < self.n_states && action < self.n_actions, "buffer index out of range");
        state * self.n_actions + action
    }

    pub fn total(&self, state: usize, action: usize) -> f64 {
        self.total_reward[self.idx(state, action)]
    }

    pub fn count(&self, state: usize, action: usize) -> u64 {
        self.count[self.idx(state, action)]
    }

    pub fn average(&self, state: usize, action: usize) -> f64 {
        let i = self.idx(state, action);
        self.total_reward[i] / self.count[i] as f64
    }

    pub fn averages(&self, state: usize) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.average(state, a)).collect()
    }

    /// Overwrites one cell. Mostly useful for building test fixtures.
    pub fn set(&mut self, state: usize, action: usize, total: f64, count: u64) {
        assert!(count >= 1, "counts never drop below 1");
        let i = self.idx(state, action);
        self.total_reward[i] = total;
        self.count[i] = count;
    }
}

/// Softmax over the average reward of every transmitter in `state`.
pub fn link_probabilities(psi: &ExperienceBuffer, state: usize) -> Vec<f64> {
    softmax(&psi.averages(state), None)
}

/// Softmax with max subtraction; `skip` gets probability 0.
fn softmax(scores: &[f64], skip: Option<usize>) -> Vec<f64> {
    let max = scores
        .iter()
        .enumerate()
        .filter(|&(a, _)| Some(a) != skip)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(a, &s)| if Some(a) == skip { 0.0 } else { (s - max).exp() })
        .collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Adds `reward` to the chosen cell and bumps its count.
pub fn update_policy(psi: &mut ExperienceBuffer, state: usize, chosen: usize, reward: f64) {
    let i = psi.idx(state, chosen);
    psi.total_reward[i] += reward;
    psi.count[i] += 1;
}

/// One incoming-link choice. `transmitter == None` means the receiver takes
/// no data this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkAction {
    pub receiver: usize,
    pub transmitter: Option<usize>,
}

/// A receiving device and its policy. Action `owner` stands for "no link".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub owner: usize,
    pub buffer: ExperienceBuffer,
    pub allow_no_link: bool,
}

impl Agent {
    pub fn new(owner: usize, n_devices: usize, n_states: usize, allow_no_link: bool) -> Self {
        Agent {
            owner,
            buffer: ExperienceBuffer::new(n_states, n_devices),
            allow_no_link,
        }
    }

    pub fn probabilities(&self, state: usize) -> Vec<f64> {
        if self.allow_no_link {
            link_probabilities(&self.buffer, state)
        } else {
            softmax(&self.buffer.averages(state), Some(self.owner))
        }
    }

    fn action_to_link(&self, action: usize) -> Option<usize> {
        (action != self.owner).then_some(action)
    }

    /// Action index recorded in the buffer for an incoming link choice.
    pub fn action_index(&self, transmitter: Option<usize>) -> usize {
        transmitter.unwrap_or(self.owner)
    }

    pub fn sample<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> Option<usize> {
        let probs = self.probabilities(state);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (a, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = a;
            if u < acc {
                return self.action_to_link(a);
            }
        }
        // Rounding left u above the final cumulative sum.
        self.action_to_link(last)
    }

    /// Highest-average action; ties go to the lowest index.
    pub fn greedy(&self, state: usize) -> Option<usize> {
        let averages = self.buffer.averages(state);
        let mut best: Option<(usize, f64)> = None;
        for (a, &avg) in averages.iter().enumerate() {
            if !self.allow_no_link && a == self.owner {
                continue;
            }
            if best.is_none_or(|(_, b)| avg > b) {
                best = Some((a, avg));
            }
        }
        self.action_to_link(best.expect("at least one action").0)
    }
}

/// Every receiver independently draws its transmitter, in device order.
pub fn sample_links<R: Rng + ?Sized>(agents: &[Agent], state: usize, rng: &mut R) -> Vec<LinkAction> {
    agents
        .iter()
        .map(|agent| LinkAction {
            receiver: agent.owner,
            transmitter: agent.sample(state, rng),
        })
        .collect()
}

/// Greedy readout of trained policies: `graph[i] = Some(j)` for `j -> i`.
pub fn extract_graph(agents: &[Agent], state: usize) -> Vec<Option<usize>> {
    agents.iter().map(|agent| agent.greedy(state)).collect()
}

pub fn links_from_actions(actions: &[LinkAction], n_devices: usize) -> Result<Vec<Option<usize>>> {
    let mut links = vec![None; n_devices];
    let mut seen = vec![false; n_devices];
    for a in actions {
        if a.receiver >= n_devices {
            return Err(Error::invalid(format!("receiver {} out of range", a.receiver)));
        }
        if std::mem::replace(&mut seen[a.receiver], true) {
            return Err(Error::invalid(format!("receiver {} has two incoming links", a.receiver)));
        }
        links[a.receiver] = a.transmitter;
    }
    Ok(links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn fresh_buffer_is_uniform() {
        let p = link_probabilities(&ExperienceBuffer::new(1, 4), 0);
        for x in p {
            assert_relative_eq!(x, 0.25, max_relative = 1e-15);
        }
    }

    #[test]
    fn two_action_softmax() {
        let mut psi = ExperienceBuffer::new(1, 2);
        psi.set(0, 0, 1.0, 1);
        let p = link_probabilities(&psi, 0);
        let e = std::f64::consts::E;
        assert_relative_eq!(p[0], e / (e + 1.0), max_relative = 1e-14);
        assert_relative_eq!(p[1], 1.0 / (e + 1.0), max_relative = 1e-14);
        assert_relative_eq!(p[0], 0.731_058_578_630_004_9, max_relative = 1e-12);
    }

    #[test]
    fn huge_averages_do_not_overflow() {
        let mut psi = ExperienceBuffer::new(1, 3);
        psi.set(0, 0, 1e6, 1);
        psi.set(0, 1, 1e6 - 1.0, 1);
        let p = link_probabilities(&psi, 0);
        assert!(p.iter().all(|x| x.is_finite()));
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn update_running_average() {
        let mut psi = ExperienceBuffer::new(1, 3);
        update_policy(&mut psi, 0, 1, 2.0);
        assert_eq!(psi.average(0, 1), 1.0);
        let mut psi = ExperienceBuffer::new(1, 3);
        update_policy(&mut psi, 0, 2, 1.0);
        update_policy(&mut psi, 0, 2, 3.0);
        assert_relative_eq!(psi.average(0, 2), 4.0 / 3.0, max_relative = 1e-15);
        assert_eq!(psi.count(0, 0), 1);
        assert_eq!(psi.total(0, 0), 0.0);
    }

    #[test]
    fn reward_above_average_raises_probability() {
        let mut psi = ExperienceBuffer::new(1, 3);
        psi.set(0, 1, 0.5, 2);
        let before = link_probabilities(&psi, 0)[1];
        update_policy(&mut psi, 0, 1, 1.0);
        assert!(link_probabilities(&psi, 0)[1] > before);
    }

    #[test]
    fn point_mass_policy_always_picks_it() {
        let mut agent = Agent::new(0, 4, 1, true);
        agent.buffer.set(0, 2, 1e4, 1);
        let mut rng = rng_from_seed(1);
        for _ in 0..1000 {
            assert_eq!(agent.sample(0, &mut rng), Some(2));
        }
    }

    #[test]
    fn sampling_is_seeded_and_matches_probabilities() {
        let mut agents: Vec<Agent> = (0..3).map(|i| Agent::new(i, 3, 1, true)).collect();
        agents[0].buffer.set(0, 1, 1.0, 1);
        agents[0].buffer.set(0, 2, -0.5, 1);
        let a = sample_links(&agents, 0, &mut rng_from_seed(3));
        let b = sample_links(&agents, 0, &mut rng_from_seed(3));
        assert_eq!(a, b);

        let probs = agents[0].probabilities(0);
        let mut freq = [0usize; 3];
        let mut rng = rng_from_seed(4);
        let draws = 100_000;
        for _ in 0..draws {
            freq[agents[0].action_index(agents[0].sample(0, &mut rng))] += 1;
        }
        for a in 0..3 {
            assert!((freq[a] as f64 / draws as f64 - probs[a]).abs() < 0.01);
        }
    }

    #[test]
    fn no_link_can_be_disabled() {
        let mut agent = Agent::new(1, 3, 1, false);
        assert_eq!(agent.probabilities(0), vec![0.5, 0.0, 0.5]);
        agent.buffer.set(0, 1, 100.0, 1);
        assert_eq!(agent.greedy(0), Some(0));
        let mut rng = rng_from_seed(0);
        assert!((0..500).all(|_| agent.sample(0, &mut rng).is_some()));
    }

    #[test]
    fn greedy_readout_breaks_ties_low() {
        let agents: Vec<Agent> = (0..3).map(|i| Agent::new(i, 3, 1, true)).collect();
        // Device 0's lowest action is itself, i.e. no link.
        assert_eq!(extract_graph(&agents, 0), vec![None, Some(0), Some(0)]);
        let mut agents = agents;
        agents[0].buffer.set(0, 2, 3.0, 1);
        assert_eq!(extract_graph(&agents, 0)[0], Some(2));
    }

    #[test]
    fn duplicate_receivers_rejected() {
        let acts = [
            LinkAction { receiver: 0, transmitter: Some(1) },
            LinkAction { receiver: 0, transmitter: None },
        ];
        assert!(links_from_actions(&acts, 2).is_err());
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one_and_shift_invariant(avgs in prop::collection::vec(-50f64..50.0, 1..12), shift in -100f64..100.0) {
            let mut psi = ExperienceBuffer::new(1, avgs.len());
            let mut shifted = ExperienceBuffer::new(1, avgs.len());
            for (a, &v) in avgs.iter().enumerate() {
                psi.set(0, a, v, 1);
                shifted.set(0, a, v + shift, 1);
            }
            let p = link_probabilities(&psi, 0);
            let q = link_probabilities(&shifted, 0);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn update_touches_one_cell(n in 1usize..8, chosen in 0usize..8, reward in -10f64..10.0) {
            let chosen = chosen % n;
            let mut psi = ExperienceBuffer::new(2, n);
            let before = psi.clone();
            update_policy(&mut psi, 1, chosen, reward);
            for s in 0..2 {
                for a in 0..n {
                    if (s, a) == (1, chosen) {
                        prop_assert_eq!(psi.count(s, a), 2);
                        prop_assert_eq!(psi.total(s, a), reward);
                    } else {
                        prop_assert_eq!(psi.count(s, a), before.count(s, a));
                        prop_assert_eq!(psi.total(s, a), before.total(s, a));
                    }
                }
            }
        }
    }
}
