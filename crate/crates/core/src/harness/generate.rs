use rand::seq::index::sample;
use rand::Rng;

use super::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::exchange::{ClassDistribution, ThresholdVector, TrustMatrix};
use crate::fl::{Dataset, GaussianMixture};
use crate::network::{generate_rss, partition_clusters, random_positions};
use crate::scenario::Scenario;
use crate::seed::SeedTree;

/// A scenario together with the concrete samples behind its distributions.
#[derive(Debug, Clone)]
pub struct GeneratedScenario {
    pub scenario: Scenario,
    pub mixture: GaussianMixture,
    /// Each device's classes, ascending.
    pub classes: Vec<Vec<usize>>,
    pub train_sets: Vec<Dataset>,
    /// Pooled hold-out samples, 20% of all generated data.
    pub test_set: Dataset,
}

/// `total` points spread over `classes` as evenly as possible, earlier
/// classes taking the remainder.
fn even_split(total: usize, classes: &[usize], n_classes: usize) -> ClassDistribution {
    let mut counts = vec![0u64; n_classes];
    let k = classes.len();
    for (rank, &c) in classes.iter().enumerate() {
        counts[c] = (total / k + usize::from(rank < total % k)) as u64;
    }
    ClassDistribution(counts)
}

/// Draws which classes each device holds.
pub fn draw_class_support<R: Rng + ?Sized>(n_devices: usize, n_classes: usize, per_device: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if per_device > n_classes {
        return Err(Error::invalid(format!(
            "classes_per_device {per_device} exceeds {n_classes} classes"
        )));
    }
    Ok((0..n_devices)
        .map(|_| {
            let mut cls = sample(rng, n_classes, per_device).into_vec();
            cls.sort_unstable();
            cls
        })
        .collect())
}

/// Independent Bernoulli trust entries for every owner.
pub fn draw_trust<R: Rng + ?Sized>(n_devices: usize, n_classes: usize, density: f64, rng: &mut R) -> Vec<TrustMatrix> {
    (0..n_devices)
        .map(|_| {
            let allowed = (0..n_devices * n_classes).map(|_| rng.random_bool(density)).collect();
            TrustMatrix::new(n_devices, n_classes, allowed).expect("sized to n x L")
        })
        .collect()
}

/// Builds positions, channel, clusters, trust, class support and samples.
pub fn generate_scenario(config: &ScenarioConfig, seeds: &SeedTree) -> Result<GeneratedScenario> {
    config.validate()?;
    let s = &config.scenario;
    let net = &config.network;

    let positions = random_positions(s.n_devices, net.area_side, &mut seeds.rng("positions"));
    let rss = generate_rss(&positions, &net.path_loss(), seeds.derive("shadowing"))?;
    let channel = net.channel();
    let clusters = partition_clusters(&rss, net.alpha_d, &channel)?;

    let classes = draw_class_support(s.n_devices, s.n_classes, s.classes_per_device, &mut seeds.rng("classes"))?;
    let trust = draw_trust(s.n_devices, s.n_classes, s.trust_density, &mut seeds.rng("trust"));

    let mut data_rng = seeds.rng("data");
    let mixture = GaussianMixture::random(s.n_classes, s.feature_dim, s.class_separation, s.noise_std, &mut data_rng);
    let test_per_device = s.samples_per_device / 4;
    let mut distributions = Vec::with_capacity(s.n_devices);
    let mut train_sets = Vec::with_capacity(s.n_devices);
    let mut test_set = Dataset::empty(s.feature_dim, s.n_classes);
    for cls in &classes {
        let counts = even_split(s.samples_per_device, cls, s.n_classes);
        train_sets.push(mixture.dataset(&counts, &mut data_rng));
        test_set.extend(&mixture.dataset(&even_split(test_per_device, cls, s.n_classes), &mut data_rng));
        distributions.push(counts);
    }

    let scenario = Scenario {
        positions,
        rss,
        channel,
        clusters,
        distributions,
        thresholds: vec![ThresholdVector::uniform(s.n_classes, s.threshold); s.n_devices],
        trust,
    };
    scenario.validate()?;
    Ok(GeneratedScenario {
        scenario,
        mixture,
        classes,
        train_sets,
        test_set,
    })
}

/// Each receiver pulls from a peer drawn uniformly from the other devices.
pub fn uniform_baseline_links<R: Rng + ?Sized>(n_devices: usize, rng: &mut R) -> Result<Vec<Option<usize>>> {
    if n_devices < 2 {
        return Err(Error::invalid("uniform links need at least two devices"));
    }
    Ok((0..n_devices)
        .map(|i| {
            let draw = rng.random_range(0..n_devices - 1);
            Some(if draw >= i { draw + 1 } else { draw })
        })
        .collect())
}
