//! Desk-scale federated learning: synthetic non-i.i.d. data, hand-written
//! softmax / MLP classifiers, FedAvg, FedProx and FedSGD with stragglers.

mod data;
mod model;
mod train;

pub use data::{Dataset, GaussianMixture};
pub use model::{parameter_count, Architecture, Model};
pub use train::{
    aggregate, evaluate, local_train, objective_and_gradient, run_fl, FlConfig, FlTrace, LocalUpdate, ModelKind, Scheme,
    Weighting,
};
