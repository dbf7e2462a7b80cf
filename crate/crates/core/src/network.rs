//! Wireless substrate: received-signal-strength matrices, per-link drop
//! probabilities, reliability clusters and a first-order radio energy model.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Planar device position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Square matrix of received signal strengths in linear power units.
///
/// `get(i, j)` is the strength observed at receiver `i` when device `j`
/// transmits. The diagonal is never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssMatrix {
    n: usize,
    values: Vec<f64>,
}

impl RssMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("RSS matrix needs at least one device"));
        }
        if values.len() != n * n {
            return Err(Error::invalid(format!(
                "RSS matrix for {n} devices needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = values[i * n + j];
                if i != j && !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::invalid(format!("RSS[{i}][{j}] = {w} is not a finite nonnegative value")));
                }
            }
        }
        Ok(RssMatrix { n, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("RSS matrix rows must form a square matrix"));
        }
        RssMatrix::new(n, rows.concat())
    }

    pub fn n_devices(&self) -> usize {
        self.n
    }

    pub fn get(&self, receiver: usize, transmitter: usize) -> f64 {
        self.values[receiver * self.n + transmitter]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Channel constants shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Transmission rate `r`; enters the drop probability as `2^r - 1`.
    pub rate: f64,
    /// Noise power, identical on every channel.
    pub noise_power: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            rate: 1.0,
            noise_power: 1.0e-9,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid(format!("rate must be finite and >= 0, got {}", self.rate)));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_power must be finite and > 0, got {}",
                self.noise_power
            )));
        }
        Ok(())
    }
}

/// Probability that a transmission over a link with received strength `w`
/// is lost: `1 - exp(-(2^r - 1) * noise / w)`.
///
/// `w = 0` with a positive rate returns the limit value 1. With `r = 0` the
/// link never drops, whatever `w` is.
pub fn drop_probability(w: f64, params: &ChannelParams) -> Result<f64> {
    if w.is_nan() || w < 0.0 {
        return Err(Error::invalid(format!("received signal strength must be >= 0, got {w}")));
    }
    // (2^r - 1) computed through expm1 so tiny rates keep full precision.
    let snr_threshold = (params.rate * std::f64::consts::LN_2).exp_m1();
    let numerator = snr_threshold * params.noise_power;
    if numerator == 0.0 {
        return Ok(0.0);
    }
    if w == 0.0 {
        return Ok(1.0);
    }
    Ok(-(-numerator / w).exp_m1())
}

/// Drop probability of link `transmitter -> receiver` under `rss`.
pub fn link_drop_probability(rss: &RssMatrix, receiver: usize, transmitter: usize, params: &ChannelParams) -> f64 {
    // RssMatrix::new rejects negative entries, so this cannot fail.
    drop_probability(rss.get(receiver, transmitter), params).unwrap_or(1.0)
}

/// Log-distance path loss with optional log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub exponent: f64,
    pub ref_power: f64,
    /// Shadowing standard deviation in dB; 0 disables it.
    pub shadowing_db: f64,
}

/// Builds `W[i][j] = ref_power / dist(i, j)^exponent`, each directed entry
/// multiplied by an independent `10^(X/10)`, `X ~ N(0, shadowing_db)`, when
/// shadowing is enabled.
pub fn generate_rss(positions: &[Position], model: &PathLoss, seed: u64) -> Result<RssMatrix> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::invalid("need at least two devices to build an RSS matrix"));
    }
    if !(model.ref_power > 0.0) || !model.exponent.is_finite() || !(model.shadowing_db >= 0.0) {
        return Err(Error::invalid("path loss needs ref_power > 0, finite exponent, shadowing_db >= 0"));
    }
    let shadow = if model.shadowing_db > 0.0 {
        Some(Normal::new(0.0, model.shadowing_db).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let mut rng = rng_from_seed(seed);
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = positions[i].distance(&positions[j]);
            if d == 0.0 {
                return Err(Error::invalid(format!("devices {i} and {j} share a position")));
            }
            let mut w = model.ref_power / d.powf(model.exponent);
            if let Some(shadow) = &shadow {
                w *= 10f64.powf(shadow.sample(&mut rng) / 10.0);
            }
            values[i * n + j] = w;
        }
    }
    RssMatrix::new(n, values)
}

/// Uniformly scattered positions in a `side x side` square.
pub fn random_positions<R: Rng + ?Sized>(n: usize, side: f64, rng: &mut R) -> Vec<Position> {
    (0..n)
        .map(|_| Position::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect()
}

/// Mean distance over all unordered device pairs.
pub fn mean_pairwise_distance(positions: &[Position]) -> f64 {
    let n = positions.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += positions[i].distance(&positions[j]);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Disjoint assignment of devices to reliability clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    assignment: Vec<usize>,
    k: usize,
}

impl ClusterPartition {
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        for c in 0..k {
            if !assignment.contains(&c) {
                return Err(Error::invalid(format!("cluster {c} is empty")));
            }
        }
        Ok(ClusterPartition { assignment, k })
    }

    /// Every device in a single cluster.
    pub fn single(n: usize) -> Self {
        ClusterPartition {
            assignment: vec![0; n],
            k: usize::from(n > 0),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_devices(&self) -> usize {
        self.assignment.len()
    }

    pub fn cluster_of(&self, device: usize) -> usize {
        self.assignment[device]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&d| self.assignment[d] == cluster)
            .collect()
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.assignment[a] == self.assignment[b]
    }
}

/// Whether both directions between `a` and `b` drop with probability at most
/// `alpha_d`.
pub fn reliable_pair(rss: &RssMatrix, a: usize, b: usize, alpha_d: f64, params: &ChannelParams) -> bool {
    link_drop_probability(rss, a, b, params) <= alpha_d && link_drop_probability(rss, b, a, params) <= alpha_d
}

/// Greedy clique growth over the reliable graph.
///
/// The lowest-index unassigned device seeds each cluster; remaining devices
/// are scanned in ascending order and join when reliable with every current
/// member.
pub fn partition_clusters(rss: &RssMatrix, alpha_d: f64, params: &ChannelParams) -> Result<ClusterPartition> {
    if !(alpha_d > 0.0 && alpha_d < 1.0) {
        return Err(Error::invalid(format!("alpha_d must lie in (0, 1), got {alpha_d}")));
    }
    let n = rss.n_devices();
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut k = 0;
    for seed in 0..n {
        if assignment[seed].is_some() {
            continue;
        }
        let mut members = vec![seed];
        assignment[seed] = Some(k);
        for cand in (seed + 1)..n {
            if assignment[cand].is_none() && members.iter().all(|&m| reliable_pair(rss, m, cand, alpha_d, params)) {
                members.push(cand);
                assignment[cand] = Some(k);
            }
        }
        k += 1;
    }
    Ok(ClusterPartition {
        assignment: assignment.into_iter().map(|a| a.expect("every device assigned")).collect(),
        k,
    })
}

/// First-order radio energy model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    pub per_point_bits: u64,
    /// Bits per model parameter on device-to-server transfers.
    pub bits_per_parameter: u64,
    pub elec_energy_per_bit: f64,
    pub amp_energy_per_bit_per_dist2: f64,
    /// Device-to-server distance as a multiple of the mean D2D distance.
    pub d2s_distance_factor: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            per_point_bits: 8 * 1024,
            bits_per_parameter: 32,
            elec_energy_per_bit: 50e-9,
            amp_energy_per_bit_per_dist2: 100e-12,
            d2s_distance_factor: 3.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if self.per_point_bits == 0 {
            return Err(Error::invalid("per_point_bits must be positive"));
        }
        if !(self.elec_energy_per_bit >= 0.0) || !(self.amp_energy_per_bit_per_dist2 >= 0.0) {
            return Err(Error::invalid("energy coefficients must be nonnegative"));
        }
        if !(self.d2s_distance_factor > 0.0) {
            return Err(Error::invalid("d2s_distance_factor must be positive"));
        }
        Ok(())
    }
}

/// Joules to send `bits` over `distance` metres.
pub fn energy_for_bits(bits: f64, distance: f64, params: &EnergyParams) -> f64 {
    bits * (params.elec_energy_per_bit + params.amp_energy_per_bit_per_dist2 * distance * distance)
}

/// Joules to send `n_points` data-points over `distance` metres.
pub fn energy_cost(n_points: u64, distance: f64, params: &EnergyParams) -> f64 {
    energy_for_bits((n_points * params.per_point_bits) as f64, distance, params)
}
