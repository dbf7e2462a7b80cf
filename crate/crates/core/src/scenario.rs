use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::{ClassDistribution, DeviceState, ThresholdVector, TrustMatrix};
use crate::network::{link_drop_probability, ChannelParams, ClusterPartition, Position, RssMatrix};

/// Static network and data state on which graphs are discovered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Device positions; empty for hand-built scenarios without geometry.
    pub positions: Vec<Position>,
    pub rss: RssMatrix,
    pub channel: ChannelParams,
    pub clusters: ClusterPartition,
    pub distributions: Vec<ClassDistribution>,
    pub thresholds: Vec<ThresholdVector>,
    pub trust: Vec<TrustMatrix>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.rss.n_devices();
        if self.distributions.len() != n
            || self.thresholds.len() != n
            || self.trust.len() != n
            || self.clusters.n_devices() != n
            || !(self.positions.is_empty() || self.positions.len() == n)
        {
            return Err(Error::invalid("scenario components disagree on the number of devices"));
        }
        let l = self.n_classes();
        for i in 0..n {
            if self.distributions[i].n_classes() != l
                || self.thresholds[i].n_classes() != l
                || self.trust[i].n_classes() != l
                || self.trust[i].n_devices() != n
            {
                return Err(Error::invalid(format!("device {i} has inconsistent class dimensions")));
            }
        }
        self.channel.validate()
    }

    pub fn n_devices(&self) -> usize {
        self.rss.n_devices()
    }

    pub fn n_classes(&self) -> usize {
        self.distributions.first().map_or(0, ClassDistribution::n_classes)
    }

    pub fn state(&self) -> DeviceState<'_> {
        DeviceState {
            distributions: &self.distributions,
            thresholds: &self.thresholds,
            trust: &self.trust,
        }
    }

    /// Drop probability of link `transmitter -> receiver`.
    pub fn drop_probability(&self, receiver: usize, transmitter: usize) -> f64 {
        link_drop_probability(&self.rss, receiver, transmitter, &self.channel)
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        if self.positions.is_empty() {
            None
        } else {
            Some(self.positions[a].distance(&self.positions[b]))
        }
    }
}
