//! Decentralized Q-learning over incoming-link choices.
//!
//! Every device keeps an experience buffer of reward totals and visit counts
//! per candidate transmitter and samples its incoming link from the softmax
//! of the average rewards. One episode samples links for all devices, runs
//! expected-mode message passing on a scratch copy of the data, scores the
//! result with local and cluster-level rewards and feeds the reward back.

mod policy;
mod reward;
mod train;

pub use policy::{
    extract_graph, link_probabilities, links_from_actions, sample_links, update_policy, Agent, ExperienceBuffer,
    LinkAction,
};
pub use reward::{
    diversity_score, evaluate_links, global_reward, inter_cluster_load, local_reward, EpisodeOutcome, RewardWeights,
};
pub use train::{train, EpisodeRecord, TrainOutcome, TrainSettings, Trainer, STATIC_STATE};
