//! Discovery of device-to-device data-exchange graphs for federated learning.
//!
//! Devices learn, each with its own tabular Q-learning policy, which peer to
//! pull data from. Exchanges respect per-class trust, keep every transmitter
//! at its own per-class threshold and run over lossy wireless links. The
//! [`harness`] module wires scenario generation, graph training, data
//! exchange, federated training and energy accounting into reproducible
//! experiments.

pub mod error;
pub mod exchange;
pub mod fl;
pub mod harness;
pub mod network;
pub mod rl;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
pub use scenario::Scenario;
