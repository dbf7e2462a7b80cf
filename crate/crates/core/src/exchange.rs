//! Trust-constrained device-to-device message passing.
//!
//! For every directed link `j -> i` the transmitter advertises what it may
//! share (`available`), the receiver asks for what it lacks (`requested`),
//! the transmitter splits its surplus across all receivers asking it for the
//! same class (`buffered`), and the lossy channel decides what arrives
//! (`delivered`).

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{link_drop_probability, ChannelParams, RssMatrix};

/// Per-class data-point counts held by one device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution(pub Vec<u64>);

impl ClassDistribution {
    pub fn n_classes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

/// Per-class minimum counts a device wants to hold (and never gives below).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdVector(pub Vec<u64>);

impl ThresholdVector {
    pub fn uniform(n_classes: usize, value: u64) -> Self {
        ThresholdVector(vec![value; n_classes])
    }

    pub fn n_classes(&self) -> usize {
        self.0.len()
    }
}

/// Sharing permissions of one owner device: `allows(peer, class)` is true
/// when the owner may send data of `class` to `peer`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustMatrix {
    n_devices: usize,
    n_classes: usize,
    allowed: Vec<bool>,
}

impl TrustMatrix {
    pub fn new(n_devices: usize, n_classes: usize, allowed: Vec<bool>) -> Result<Self> {
        if allowed.len() != n_devices * n_classes {
            return Err(Error::invalid(format!(
                "trust matrix {n_devices}x{n_classes} needs {} entries, got {}",
                n_devices * n_classes,
                allowed.len()
            )));
        }
        Ok(TrustMatrix {
            n_devices,
            n_classes,
            allowed,
        })
    }

    pub fn full(n_devices: usize, n_classes: usize) -> Self {
        TrustMatrix {
            n_devices,
            n_classes,
            allowed: vec![true; n_devices * n_classes],
        }
    }

    pub fn none(n_devices: usize, n_classes: usize) -> Self {
        TrustMatrix {
            n_devices,
            n_classes,
            allowed: vec![false; n_devices * n_classes],
        }
    }

    pub fn n_devices(&self) -> usize {
        self.n_devices
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn allows(&self, peer: usize, class: usize) -> bool {
        self.allowed[peer * self.n_classes + class]
    }

    pub fn set(&mut self, peer: usize, class: usize, allowed: bool) {
        self.allowed[peer * self.n_classes + class] = allowed;
    }
}

/// How lossy links turn buffered counts into delivered counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryMode {
    /// Delivered = (1 - p) * buffered, kept fractional.
    #[default]
    Expected,
    /// Each data-point independently survives with probability 1 - p.
    Stochastic,
}

/// Message-passing record of one directed link `transmitter -> receiver`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkExchange {
    pub transmitter: usize,
    pub receiver: usize,
    pub drop_probability: f64,
    pub available: Vec<u64>,
    pub requested: Vec<u64>,
    pub buffered: Vec<f64>,
    pub delivered: Vec<f64>,
}

/// All link records of one exchange, ordered by receiver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExchangePlan {
    pub links: Vec<LinkExchange>,
}

impl ExchangePlan {
    pub fn incoming(&self, receiver: usize) -> Option<&LinkExchange> {
        self.links.iter().find(|l| l.receiver == receiver)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeOutcome {
    /// Post-exchange class distributions, one per device.
    pub distributions: Vec<Vec<f64>>,
    pub plan: ExchangePlan,
}

/// Read-only view of every device's data state.
#[derive(Debug, Clone, Copy)]
pub struct DeviceState<'a> {
    pub distributions: &'a [ClassDistribution],
    pub thresholds: &'a [ThresholdVector],
    pub trust: &'a [TrustMatrix],
}

fn surplus(d: &ClassDistribution, c: &ThresholdVector) -> Vec<u64> {
    d.0.iter().zip(&c.0).map(|(&d, &c)| d.saturating_sub(c)).collect()
}

/// What transmitter `j` may offer `receiver`: its surplus above threshold in
/// every class the trust matrix allows, zero elsewhere. Negative surplus is
/// clamped to zero.
pub fn available_vector(
    d_j: &ClassDistribution,
    c_j: &ThresholdVector,
    t_j: &TrustMatrix,
    receiver: usize,
) -> Result<Vec<u64>> {
    if receiver >= t_j.n_devices() {
        return Err(Error::invalid(format!(
            "receiver {receiver} out of range for {} devices",
            t_j.n_devices()
        )));
    }
    if d_j.n_classes() != c_j.n_classes() || d_j.n_classes() != t_j.n_classes() {
        return Err(Error::invalid("class dimensions of D, c and T disagree"));
    }
    Ok(surplus(d_j, c_j)
        .into_iter()
        .enumerate()
        .map(|(class, s)| if t_j.allows(receiver, class) { s } else { 0 })
        .collect())
}

/// What receiver `i` asks for: the whole offer when its deficit covers it,
/// just the deficit when the offer is larger, nothing without a deficit.
pub fn requirement_vector(available: &[u64], d_i: &ClassDistribution, c_i: &ThresholdVector) -> Vec<u64> {
    available
        .iter()
        .zip(d_i.0.iter().zip(&c_i.0))
        .map(|(&v, (&d, &c))| {
            let deficit = c as i128 - d as i128;
            if deficit <= 0 {
                0
            } else if deficit >= v as i128 {
                v
            } else {
                deficit as u64
            }
        })
        .collect()
}

/// Splits the transmitter's per-class surplus across the receivers asking
/// for it. Requests are honoured in full when their total fits in the
/// surplus, otherwise each receiver gets its proportional share.
pub fn transmission_buffers(
    requests: &BTreeMap<usize, Vec<u64>>,
    d_j: &ClassDistribution,
    c_j: &ThresholdVector,
) -> BTreeMap<usize, Vec<f64>> {
    let surplus = surplus(d_j, c_j);
    let mut demand = vec![0u64; surplus.len()];
    for q in requests.values() {
        for (total, &x) in demand.iter_mut().zip(q) {
            *total += x;
        }
    }
    requests
        .iter()
        .map(|(&receiver, q)| {
            let u = q
                .iter()
                .enumerate()
                .map(|(class, &x)| {
                    if demand[class] <= surplus[class] {
                        x as f64
                    } else {
                        x as f64 / demand[class] as f64 * surplus[class] as f64
                    }
                })
                .collect();
            (receiver, u)
        })
        .collect()
}

/// Integer version of [`transmission_buffers`] used when real data-points
/// move: every share is floored and the points left over go to the largest
/// fractional remainders (lowest receiver first on ties). The per-class
/// total never exceeds the surplus.
pub fn integer_buffers(
    fractional: &BTreeMap<usize, Vec<f64>>,
    d_j: &ClassDistribution,
    c_j: &ThresholdVector,
) -> BTreeMap<usize, Vec<u64>> {
    let surplus = surplus(d_j, c_j);
    let mut out: BTreeMap<usize, Vec<u64>> = fractional
        .iter()
        .map(|(&r, u)| (r, u.iter().map(|x| x.floor() as u64).collect()))
        .collect();
    for (class, &cap) in surplus.iter().enumerate() {
        let exact: f64 = fractional.values().map(|u| u[class]).sum();
        let target = (exact.round() as u64).min(cap);
        let assigned: u64 = out.values().map(|u| u[class]).sum();
        let mut leftover = target.saturating_sub(assigned);
        if leftover == 0 {
            continue;
        }
        let mut order: Vec<(usize, f64)> = fractional
            .iter()
            .map(|(&r, u)| (r, u[class] - u[class].floor()))
            .filter(|&(_, frac)| frac > 0.0)
            .collect();
        // Stable sort keeps ascending receiver order among equal remainders.
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (r, _) in order {
            if leftover == 0 {
                break;
            }
            out.get_mut(&r).expect("receiver present")[class] += 1;
            leftover -= 1;
        }
    }
    out
}

/// Applies channel loss to a transmission buffer.
///
/// Stochastic mode draws `Binomial(floor(U), 1 - p)` per class so the result
/// never exceeds `U` even for fractional buffers.
pub fn deliver<R: Rng + ?Sized>(buffered: &[f64], p_drop: f64, mode: DeliveryMode, rng: &mut R) -> Vec<f64> {
    let keep = (1.0 - p_drop).clamp(0.0, 1.0);
    match mode {
        DeliveryMode::Expected => buffered.iter().map(|&u| keep * u).collect(),
        DeliveryMode::Stochastic => buffered
            .iter()
            .map(|&u| {
                let trials = u.max(0.0).floor() as u64;
                if trials == 0 {
                    return 0.0;
                }
                Binomial::new(trials, keep).expect("keep probability in [0,1]").sample(rng) as f64
            })
            .collect(),
    }
}

fn check_dimensions(state: &DeviceState<'_>, links: &[Option<usize>], rss: &RssMatrix) -> Result<usize> {
    let n = state.distributions.len();
    if state.thresholds.len() != n || state.trust.len() != n || links.len() != n || rss.n_devices() != n {
        return Err(Error::invalid(format!(
            "device counts disagree: D={}, c={}, T={}, links={}, W={}",
            n,
            state.thresholds.len(),
            state.trust.len(),
            links.len(),
            rss.n_devices()
        )));
    }
    let l = state.distributions.first().map_or(0, |d| d.n_classes());
    for i in 0..n {
        if state.distributions[i].n_classes() != l
            || state.thresholds[i].n_classes() != l
            || state.trust[i].n_classes() != l
            || state.trust[i].n_devices() != n
        {
            return Err(Error::invalid(format!("device {i} has inconsistent class dimensions")));
        }
    }
    for (receiver, link) in links.iter().enumerate() {
        match *link {
            Some(t) if t >= n => {
                return Err(Error::invalid(format!("receiver {receiver} links to unknown device {t}")));
            }
            Some(t) if t == receiver => {
                return Err(Error::invalid(format!("device {receiver} cannot link to itself")));
            }
            _ => {}
        }
    }
    Ok(l)
}

fn group_by_transmitter(links: &[Option<usize>]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (receiver, link) in links.iter().enumerate() {
        if let Some(t) = *link {
            groups.entry(t).or_default().push(receiver);
        }
    }
    groups
}

/// Runs message passing over `links` (`links[i] = Some(j)` means `j -> i`).
///
/// Requests are formed against the pre-exchange distributions and grouped
/// per transmitter before buffers are split. Each device then ends with
/// `D + incoming delivered - outgoing delivered`; points lost in transit
/// stay with their transmitter.
pub fn run_exchange<R: Rng + ?Sized>(
    links: &[Option<usize>],
    state: &DeviceState<'_>,
    rss: &RssMatrix,
    params: &ChannelParams,
    mode: DeliveryMode,
    rng: &mut R,
) -> Result<ExchangeOutcome> {
    exchange_impl(links, state, rss, params, mode, false, rng)
}

/// Like [`run_exchange`] but with whole data-points: buffers go through
/// [`integer_buffers`] and expected delivery is rounded to the nearest point.
pub fn materialize_exchange<R: Rng + ?Sized>(
    links: &[Option<usize>],
    state: &DeviceState<'_>,
    rss: &RssMatrix,
    params: &ChannelParams,
    mode: DeliveryMode,
    rng: &mut R,
) -> Result<(Vec<ClassDistribution>, ExchangePlan)> {
    let out = exchange_impl(links, state, rss, params, mode, true, rng)?;
    let dists = out
        .distributions
        .iter()
        .map(|d| ClassDistribution(d.iter().map(|&x| x.round() as u64).collect()))
        .collect();
    Ok((dists, out.plan))
}

fn exchange_impl<R: Rng + ?Sized>(
    links: &[Option<usize>],
    state: &DeviceState<'_>,
    rss: &RssMatrix,
    params: &ChannelParams,
    mode: DeliveryMode,
    whole_points: bool,
    rng: &mut R,
) -> Result<ExchangeOutcome> {
    check_dimensions(state, links, rss)?;
    let mut distributions: Vec<Vec<f64>> = state.distributions.iter().map(ClassDistribution::as_f64).collect();
    let mut records = Vec::new();

    for (transmitter, receivers) in group_by_transmitter(links) {
        let d_j = &state.distributions[transmitter];
        let c_j = &state.thresholds[transmitter];
        let mut offers = BTreeMap::new();
        let mut requests = BTreeMap::new();
        for &receiver in &receivers {
            let v = available_vector(d_j, c_j, &state.trust[transmitter], receiver)?;
            let q = requirement_vector(&v, &state.distributions[receiver], &state.thresholds[receiver]);
            offers.insert(receiver, v);
            requests.insert(receiver, q);
        }
        let mut buffers = transmission_buffers(&requests, d_j, c_j);
        if whole_points {
            buffers = integer_buffers(&buffers, d_j, c_j)
                .into_iter()
                .map(|(r, u)| (r, u.into_iter().map(|x| x as f64).collect()))
                .collect();
        }
        for (receiver, buffered) in buffers {
            let p = link_drop_probability(rss, receiver, transmitter, params);
            let delivered = match (whole_points, mode) {
                (true, DeliveryMode::Expected) => buffered.iter().map(|&u| ((1.0 - p) * u).round()).collect(),
                _ => deliver(&buffered, p, mode, rng),
            };
            for class in 0..delivered.len() {
                distributions[receiver][class] += delivered[class];
                distributions[transmitter][class] -= delivered[class];
            }
            records.push(LinkExchange {
                transmitter,
                receiver,
                drop_probability: p,
                available: offers.remove(&receiver).expect("offer recorded"),
                requested: requests.remove(&receiver).expect("request recorded"),
                buffered,
                delivered,
            });
        }
    }
    records.sort_by_key(|r| r.receiver);
    Ok(ExchangeOutcome {
        distributions,
        plan: ExchangePlan { links: records },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn lossless() -> (RssMatrix, ChannelParams) {
        (
            RssMatrix::new(3, vec![1.0; 9]).unwrap(),
            ChannelParams {
                rate: 0.0,
                noise_power: 1.0,
            },
        )
    }

    #[test]
    fn untrusted_class_is_not_offered() {
        let d = ClassDistribution(vec![20, 20]);
        let c = ThresholdVector(vec![10, 10]);
        let mut t = TrustMatrix::full(2, 2);
        t.set(1, 0, false);
        assert_eq!(available_vector(&d, &c, &t, 1).unwrap(), vec![0, 10]);
    }

    #[test]
    fn offer_is_surplus_and_clamped() {
        let t = TrustMatrix::full(2, 2);
        let c = ThresholdVector(vec![10, 10]);
        assert_eq!(available_vector(&ClassDistribution(vec![20, 5]), &c, &t, 0).unwrap(), vec![10, 0]);
        assert!(available_vector(&ClassDistribution(vec![20, 5]), &c, &t, 2).is_err());
    }

    #[test]
    fn requirement_cases() {
        let c = ThresholdVector(vec![15, 4, 10, 10]);
        let d = ClassDistribution(vec![0, 0, 10, 12]);
        // deficits: 15, 4, 0, -2
        assert_eq!(requirement_vector(&[10, 10, 10, 10], &d, &c), vec![10, 4, 0, 0]);
    }

    #[test]
    fn contended_surplus_is_split() {
        let d = ClassDistribution(vec![20]);
        let c = ThresholdVector(vec![10]);
        let reqs = BTreeMap::from([(1, vec![10]), (2, vec![10])]);
        let u = transmission_buffers(&reqs, &d, &c);
        assert_eq!(u[&1], vec![5.0]);
        assert_eq!(u[&2], vec![5.0]);

        let single = BTreeMap::from([(1, vec![7])]);
        assert_eq!(transmission_buffers(&single, &d, &c)[&1], vec![7.0]);

        let over = BTreeMap::from([(1, vec![20])]);
        assert_eq!(transmission_buffers(&over, &d, &c)[&1], vec![10.0]);
    }

    #[test]
    fn integer_buffers_use_largest_remainder() {
        let d = ClassDistribution(vec![20]);
        let c = ThresholdVector(vec![10]);
        // Requests 1, 1, 1 against surplus 10 fit exactly; 5, 5, 5 split 10/3 each.
        let reqs = BTreeMap::from([(0, vec![5]), (1, vec![5]), (2, vec![5])]);
        let u = transmission_buffers(&reqs, &d, &c);
        let ints = integer_buffers(&u, &d, &c);
        assert_eq!(ints.values().map(|u| u[0]).collect::<Vec<_>>(), vec![4, 3, 3]);
        let reqs = BTreeMap::from([(0, vec![3]), (1, vec![7])]);
        let u = transmission_buffers(&reqs, &ClassDistribution(vec![15]), &c);
        let ints = integer_buffers(&u, &ClassDistribution(vec![15]), &c);
        assert_eq!(ints[&0][0] + ints[&1][0], 5);
        assert_eq!((ints[&0][0], ints[&1][0]), (2, 3));
    }

    #[test]
    fn expected_delivery_scales_by_success() {
        let mut rng = rng_from_seed(0);
        assert_eq!(deliver(&[10.0], 0.2, DeliveryMode::Expected, &mut rng), vec![8.0]);
        assert_eq!(deliver(&[10.0, 3.0], 0.0, DeliveryMode::Expected, &mut rng), vec![10.0, 3.0]);
        assert_eq!(deliver(&[10.0, 3.0], 0.0, DeliveryMode::Stochastic, &mut rng), vec![10.0, 3.0]);
    }

    #[test]
    fn stochastic_delivery_matches_binomial_draws() {
        let got = deliver(&[10.0], 0.2, DeliveryMode::Stochastic, &mut rng_from_seed(5));
        let oracle = Binomial::new(10, 0.8).unwrap().sample(&mut rng_from_seed(5)) as f64;
        assert_eq!(got, vec![oracle]);

        let mut rng = rng_from_seed(6);
        let trials = 100_000;
        let mean: f64 = (0..trials)
            .map(|_| deliver(&[10.0], 0.2, DeliveryMode::Stochastic, &mut rng)[0])
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 8.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn empty_links_leave_distributions_alone() {
        let (rss, params) = lossless();
        let d = vec![ClassDistribution(vec![3, 4]); 3];
        let c = vec![ThresholdVector(vec![1, 1]); 3];
        let t = vec![TrustMatrix::full(3, 2); 3];
        let state = DeviceState {
            distributions: &d,
            thresholds: &c,
            trust: &t,
        };
        let out = run_exchange(&[None; 3], &state, &rss, &params, DeliveryMode::Expected, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out.distributions, vec![vec![3.0, 4.0]; 3]);
        assert!(out.plan.links.is_empty());
    }

    #[test]
    fn self_link_and_bad_dimensions_rejected() {
        let (rss, params) = lossless();
        let d = vec![ClassDistribution(vec![3, 4]); 3];
        let c = vec![ThresholdVector(vec![1, 1]); 3];
        let t = vec![TrustMatrix::full(3, 2); 3];
        let state = DeviceState {
            distributions: &d,
            thresholds: &c,
            trust: &t,
        };
        let mut rng = rng_from_seed(0);
        assert!(run_exchange(&[Some(0), None, None], &state, &rss, &params, DeliveryMode::Expected, &mut rng).is_err());
        assert!(run_exchange(&[None, None], &state, &rss, &params, DeliveryMode::Expected, &mut rng).is_err());
        let short_c = vec![ThresholdVector(vec![1]); 3];
        let state = DeviceState {
            thresholds: &short_c,
            ..state
        };
        assert!(run_exchange(&[None; 3], &state, &rss, &params, DeliveryMode::Expected, &mut rng).is_err());
    }

    #[test]
    fn lossless_chain_conserves_counts() {
        // 2 -> 1 -> 0, checked against hand accounting.
        let (rss, params) = lossless();
        let d = vec![
            ClassDistribution(vec![0, 30, 2]),
            ClassDistribution(vec![25, 0, 9]),
            ClassDistribution(vec![14, 40, 0]),
        ];
        let c = vec![ThresholdVector(vec![10, 10, 5]); 3];
        let t = vec![TrustMatrix::full(3, 3); 3];
        let state = DeviceState {
            distributions: &d,
            thresholds: &c,
            trust: &t,
        };
        let out = run_exchange(&[Some(1), Some(2), None], &state, &rss, &params, DeliveryMode::Expected, &mut rng_from_seed(0)).unwrap();
        // 1 -> 0: surplus of 1 is [15, 0, 4]; 0's deficits [10, -, 3] -> [10, 0, 3]
        // 2 -> 1: surplus of 2 is [4, 30, 0]; 1's deficits [-, 10, -] -> [0, 10, 0]
        assert_eq!(out.distributions[0], vec![10.0, 30.0, 5.0]);
        assert_eq!(out.distributions[1], vec![15.0, 10.0, 6.0]);
        assert_eq!(out.distributions[2], vec![14.0, 30.0, 0.0]);
        for class in 0..3 {
            let before: u64 = d.iter().map(|x| x.0[class]).sum();
            let after: f64 = out.distributions.iter().map(|x| x[class]).sum();
            assert_eq!(after, before as f64);
        }
    }

    fn random_state(seed: u64, n: usize, l: usize) -> (Vec<ClassDistribution>, Vec<ThresholdVector>, Vec<TrustMatrix>, Vec<Option<usize>>) {
        let mut rng = rng_from_seed(seed);
        let d = (0..n).map(|_| ClassDistribution((0..l).map(|_| rng.random_range(0..40)).collect())).collect();
        let c = (0..n).map(|_| ThresholdVector((0..l).map(|_| rng.random_range(0..20)).collect())).collect();
        let t = (0..n)
            .map(|_| TrustMatrix::new(n, l, (0..n * l).map(|_| rng.random_bool(0.5)).collect()).unwrap())
            .collect();
        let links = (0..n)
            .map(|i| {
                let j = rng.random_range(0..n);
                (j != i).then_some(j)
            })
            .collect();
        (d, c, t, links)
    }

    proptest! {
        #[test]
        fn exchange_invariants(seed in any::<u64>(), n in 2usize..8, l in 1usize..6, stochastic in any::<bool>()) {
            let (d, c, t, links) = random_state(seed, n, l);
            let mut rng = rng_from_seed(seed ^ 1);
            let values: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * 4.0).collect();
            let rss = RssMatrix::new(n, values).unwrap();
            let params = ChannelParams { rate: 1.0, noise_power: 0.5 };
            let mode = if stochastic { DeliveryMode::Stochastic } else { DeliveryMode::Expected };
            let state = DeviceState { distributions: &d, thresholds: &c, trust: &t };
            let out = run_exchange(&links, &state, &rss, &params, mode, &mut rng).unwrap();
            for link in &out.plan.links {
                for class in 0..l {
                    prop_assert!(link.delivered[class] >= 0.0);
                    prop_assert!(link.delivered[class] <= link.buffered[class] + 1e-9);
                    prop_assert!(link.buffered[class] <= link.requested[class] as f64 + 1e-9);
                    prop_assert!(link.requested[class] <= link.available[class]);
                    if link.delivered[class] > 0.0 {
                        prop_assert!(t[link.transmitter].allows(link.receiver, class));
                    }
                }
            }
            for j in 0..n {
                let outgoing: Vec<f64> = (0..l).map(|class| out.plan.links.iter().filter(|x| x.transmitter == j).map(|x| x.delivered[class]).sum()).collect();
                for class in 0..l {
                    let floor = d[j].0[class].min(c[j].0[class]) as f64;
                    prop_assert!(out.distributions[j][class] >= floor - 1e-9);
                    prop_assert!(out.distributions[j][class] >= d[j].0[class] as f64 - outgoing[class] - 1e-9);
                }
            }
        }
    }
}
