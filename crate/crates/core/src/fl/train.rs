use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::model::{Architecture, Model};
use crate::error::{Error, Result};
use crate::seed::{SeedTree, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Fedavg,
    Fedprox,
    Fedsgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Participants weighted by local dataset size.
    #[default]
    DataSize,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Linear,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlConfig {
    pub scheme: Scheme,
    /// Local steps between aggregations.
    pub tau_a: usize,
    pub total_steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Proximal coefficient, read only under FedProx.
    pub prox_mu: f64,
    pub weighting: Weighting,
    pub model: ModelKind,
    /// Hidden width for the MLP model.
    pub hidden: usize,
    /// Fraction of devices excluded from aggregation.
    pub straggler_fraction: f64,
}

impl Default for FlConfig {
    fn default() -> Self {
        FlConfig {
            scheme: Scheme::Fedavg,
            tau_a: 20,
            total_steps: 200,
            learning_rate: 1.0,
            batch_size: 1024,
            prox_mu: 0.01,
            weighting: Weighting::DataSize,
            model: ModelKind::Linear,
            hidden: 32,
            straggler_fraction: 0.0,
        }
    }
}

impl FlConfig {
    pub fn architecture(&self) -> Architecture {
        match self.model {
            ModelKind::Linear => Architecture::Linear,
            ModelKind::Mlp => Architecture::Mlp { hidden: self.hidden },
        }
    }

    /// Number of aggregation rounds; a trailing partial round is kept.
    pub fn rounds(&self) -> usize {
        self.total_steps.div_ceil(self.tau_a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_a == 0 || self.total_steps == 0 {
            return Err(Error::config("fl.tau_a and fl.total_steps must be positive"));
        }
        if self.tau_a > self.total_steps {
            return Err(Error::config(format!(
                "fl.tau_a ({}) exceeds fl.total_steps ({})",
                self.tau_a, self.total_steps
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("fl.learning_rate must be finite and >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("fl.batch_size must be positive"));
        }
        if !(self.prox_mu >= 0.0) {
            return Err(Error::config("fl.prox_mu must be >= 0"));
        }
        if self.model == ModelKind::Mlp && self.hidden == 0 {
            return Err(Error::config("fl.hidden must be positive for the mlp model"));
        }
        if !(0.0..=1.0).contains(&self.straggler_fraction) {
            return Err(Error::config("fl.straggler_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// What a device sends to the server after a round.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalUpdate {
    Model(Model),
    Gradient(Vec<f64>),
}

/// Cross-entropy over `indices`, plus `(mu/2) ||params - anchor||^2` when an
/// anchor is given.
pub fn objective_and_gradient(model: &Model, data: &Dataset, indices: &[usize], prox: Option<(f64, &Model)>) -> (f64, Vec<f64>) {
    let (mut loss, mut grad) = model.loss_and_gradient(data, indices);
    if let Some((mu, anchor)) = prox {
        for ((g, p), a) in grad.iter_mut().zip(&model.params).zip(&anchor.params) {
            let diff = p - a;
            loss += 0.5 * mu * diff * diff;
            *g += mu * diff;
        }
    }
    (loss, grad)
}

/// Local optimisation from `start`.
///
/// FedAvg and FedProx take `steps` mini-batch SGD steps (FedProx anchored at
/// `global`). A batch size at least the local dataset size means full-batch
/// gradient descent. FedSGD returns the full-batch gradient at `start` without
/// stepping. Devices without data return `None`.
pub fn local_train<R: Rng + ?Sized>(
    start: &Model,
    data: &Dataset,
    steps: usize,
    config: &FlConfig,
    global: &Model,
    rng: &mut R,
) -> Option<LocalUpdate> {
    if data.is_empty() {
        return None;
    }
    if config.scheme == Scheme::Fedsgd {
        let all: Vec<usize> = (0..data.len()).collect();
        return Some(LocalUpdate::Gradient(model_gradient(start, data, &all)));
    }
    let prox = (config.scheme == Scheme::Fedprox).then_some((config.prox_mu, global));
    let mut model = start.clone();
    let full_batch = config.batch_size >= data.len();
    let mut batch: Vec<usize> = if full_batch {
        (0..data.len()).collect()
    } else {
        vec![0; config.batch_size]
    };
    for _ in 0..steps {
        if !full_batch {
            for b in batch.iter_mut() {
                *b = rng.random_range(0..data.len());
            }
        }
        let (_, grad) = objective_and_gradient(&model, data, &batch, prox);
        for (p, g) in model.params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    Some(LocalUpdate::Model(model))
}

fn model_gradient(model: &Model, data: &Dataset, indices: &[usize]) -> Vec<f64> {
    model.loss_and_gradient(data, indices).1
}

/// Weighted aggregation. Model updates are averaged; gradient updates move
/// `global` by `-lr` times their average. No participants leaves `global`
/// unchanged.
pub fn aggregate(updates: &[(f64, LocalUpdate)], global: &Model, learning_rate: f64) -> Model {
    let total: f64 = updates.iter().map(|(w, _)| *w).sum();
    if updates.is_empty() || total <= 0.0 {
        warn!("aggregation with no participants; global model unchanged");
        return global.clone();
    }
    let mut avg = vec![0.0; global.n_params()];
    let mut gradient_round = false;
    for (w, update) in updates {
        let v = match update {
            LocalUpdate::Model(m) => &m.params,
            LocalUpdate::Gradient(g) => {
                gradient_round = true;
                g
            }
        };
        for (a, x) in avg.iter_mut().zip(v) {
            *a += w / total * x;
        }
    }
    let mut out = global.clone();
    if gradient_round {
        for (p, g) in out.params.iter_mut().zip(&avg) {
            *p -= learning_rate * g;
        }
    } else {
        out.params = avg;
    }
    out
}

/// Fraction of samples whose argmax prediction is correct.
pub fn evaluate(model: &Model, test: &Dataset) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let correct = (0..test.len())
        .filter(|&i| model.predict(test.features(i)) == test.label(i))
        .count();
    correct as f64 / test.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlTrace {
    /// Global test accuracy after each aggregation.
    pub accuracy: Vec<f64>,
    /// Devices whose update entered each aggregation.
    pub participants: Vec<usize>,
    pub final_model: Model,
}

/// Runs federated training: `tau_a` local steps from the broadcast model,
/// then aggregation over non-straggler devices, for `total_steps` steps.
pub fn run_fl(datasets: &[Dataset], test: &Dataset, config: &FlConfig, stragglers: &[usize], seed: u64) -> Result<FlTrace> {
    config.validate()?;
    let first = datasets
        .first()
        .ok_or_else(|| Error::invalid("federated training needs at least one device"))?;
    let (dim, n_classes) = (first.dim(), first.n_classes());
    if datasets.iter().any(|d| d.dim() != dim || d.n_classes() != n_classes) || test.dim() != dim {
        return Err(Error::invalid("datasets disagree on feature or class dimensions"));
    }
    let seeds = SeedTree::new(seed);
    let mut global = Model::init(config.architecture(), dim, n_classes, &mut seeds.rng("init"));
    let mut rngs: Vec<SimRng> = (0..datasets.len()).map(|i| seeds.rng(&format!("device-{i}"))).collect();
    let excluded: Vec<bool> = (0..datasets.len()).map(|i| stragglers.contains(&i)).collect();

    let mut accuracy = Vec::with_capacity(config.rounds());
    let mut participants = Vec::with_capacity(config.rounds());
    let mut remaining = config.total_steps;
    while remaining > 0 {
        let steps = remaining.min(config.tau_a);
        remaining -= steps;
        let updates = local_round(datasets, &mut rngs, &global, steps, config);
        let contributions: Vec<(f64, LocalUpdate)> = updates
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !excluded[*i])
            .filter_map(|(i, u)| {
                let weight = match config.weighting {
                    Weighting::DataSize => datasets[i].len() as f64,
                    Weighting::Uniform => 1.0,
                };
                u.map(|u| (weight, u))
            })
            .collect();
        participants.push(contributions.len());
        global = aggregate(&contributions, &global, config.learning_rate);
        accuracy.push(evaluate(&global, test));
    }
    Ok(FlTrace {
        accuracy,
        participants,
        final_model: global,
    })
}

#[cfg(feature = "parallel")]
fn local_round(datasets: &[Dataset], rngs: &mut [SimRng], global: &Model, steps: usize, config: &FlConfig) -> Vec<Option<LocalUpdate>> {
    use rayon::prelude::*;
    datasets
        .par_iter()
        .zip(rngs.par_iter_mut())
        .map(|(data, rng)| local_train(global, data, steps, config, global, rng))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn local_round(datasets: &[Dataset], rngs: &mut [SimRng], global: &Model, steps: usize, config: &FlConfig) -> Vec<Option<LocalUpdate>> {
    datasets
        .iter()
        .zip(rngs.iter_mut())
        .map(|(data, rng)| local_train(global, data, steps, config, global, rng))
        .collect()
}
