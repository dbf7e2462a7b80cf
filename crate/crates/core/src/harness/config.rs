//! Experiment configuration.
//!
//! The file is TOML with the sections below. Every key is optional and falls
//! back to the default shown; unknown sections or keys are rejected.
//!
//! ```toml
//! [scenario]
//! n_devices = 10
//! n_classes = 8
//! classes_per_device = 4
//! samples_per_device = 400     # training points; a further 25% goes to the test pool
//! feature_dim = 10
//! class_separation = 0.6       # std of the class centres
//! noise_std = 1.0
//! trust_density = 0.8          # P(T_i[j, l] = 1)
//! threshold = 30               # c_i[l] for every device and class
//!
//! [network]
//! area_side = 100.0            # metres
//! pathloss_exponent = 3.0
//! ref_power = 1.333e-4         # received power at 1 m
//! shadowing_db = 0.0
//! rate = 1.0
//! noise_power = 1.0e-10
//! alpha_d = 0.05               # cluster reliability bound
//!
//! [energy]
//! per_point_bits = 8192
//! bits_per_parameter = 32
//! elec_energy_per_bit = 5e-8
//! amp_energy_per_bit_per_dist2 = 1e-10
//! d2s_distance_factor = 3.0
//!
//! [rewards]
//! alpha1 = 1.0
//! alpha2 = 2.0
//! alpha3 = 0.02
//! gamma = 0.5
//! diversity_threshold = 4
//! budget = 150.0               # per cluster
//! allow_no_link = false      # let a device decline every transmitter
//!
//! [rl]
//! episodes = 3000
//!
//! [fl]
//! scheme = "fedavg"            # fedavg | fedprox | fedsgd
//! tau_a = 20
//! total_steps = 200
//! learning_rate = 1.0
//! batch_size = 1024             # >= local data size means full-batch steps
//! prox_mu = 0.01
//! weighting = "data_size"      # data_size | uniform
//! model = "linear"             # linear | mlp
//! hidden = 32
//! straggler_fraction = 0.0
//!
//! [experiment]
//! seed = 0
//! baseline = "rl"              # rl | uniform | none
//! delivery = "expected"        # expected | stochastic
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::DeliveryMode;
use crate::fl::FlConfig;
use crate::network::{ChannelParams, EnergyParams, PathLoss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub n_devices: usize,
    pub n_classes: usize,
    pub classes_per_device: usize,
    pub samples_per_device: usize,
    pub feature_dim: usize,
    pub class_separation: f64,
    pub noise_std: f64,
    pub trust_density: f64,
    pub threshold: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            n_devices: 10,
            n_classes: 8,
            classes_per_device: 4,
            samples_per_device: 400,
            feature_dim: 10,
            class_separation: 0.6,
            noise_std: 1.0,
            trust_density: 0.8,
            threshold: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub area_side: f64,
    pub pathloss_exponent: f64,
    pub ref_power: f64,
    pub shadowing_db: f64,
    pub rate: f64,
    pub noise_power: f64,
    pub alpha_d: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            area_side: 100.0,
            pathloss_exponent: 3.0,
            ref_power: 1.333e-4,
            shadowing_db: 0.0,
            rate: 1.0,
            noise_power: 1.0e-10,
            alpha_d: 0.05,
        }
    }
}

impl NetworkSection {
    pub fn channel(&self) -> ChannelParams {
        ChannelParams {
            rate: self.rate,
            noise_power: self.noise_power,
        }
    }

    pub fn path_loss(&self) -> PathLoss {
        PathLoss {
            exponent: self.pathloss_exponent,
            ref_power: self.ref_power,
            shadowing_db: self.shadowing_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub gamma: f64,
    pub diversity_threshold: usize,
    pub budget: f64,
    pub allow_no_link: bool,
}

impl Default for RewardSection {
    fn default() -> Self {
        RewardSection {
            alpha1: 1.0,
            alpha2: 2.0,
            alpha3: 0.02,
            gamma: 0.5,
            diversity_threshold: 4,
            budget: 150.0,
            allow_no_link: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlSection {
    pub episodes: usize,
}

impl Default for RlSection {
    fn default() -> Self {
        RlSection { episodes: 3000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Graph discovered by the trained policies.
    #[default]
    Rl,
    /// Every device pulls from a uniformly drawn peer.
    Uniform,
    /// No device-to-device exchange.
    None,
}

impl Baseline {
    pub fn as_str(&self) -> &'static str {
        match self {
            Baseline::Rl => "rl",
            Baseline::Uniform => "uniform",
            Baseline::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: u64,
    pub baseline: Baseline,
    pub delivery: DeliveryMode,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            seed: 0,
            baseline: Baseline::Rl,
            delivery: DeliveryMode::Expected,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub network: NetworkSection,
    pub energy: EnergyParams,
    pub rewards: RewardSection,
    pub rl: RlSection,
    pub fl: FlConfig,
    pub experiment: ExperimentSection,
}

fn check(ok: bool, key: &str, msg: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("{key} {msg}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        check(s.n_devices >= 2, "scenario.n_devices", format!("must be >= 2, got {}", s.n_devices))?;
        check(s.n_classes >= 1, "scenario.n_classes", "must be >= 1")?;
        check(
            (1..=s.n_classes).contains(&s.classes_per_device),
            "scenario.classes_per_device",
            format!("must lie in [1, n_classes = {}], got {}", s.n_classes, s.classes_per_device),
        )?;
        check(s.samples_per_device >= 1, "scenario.samples_per_device", "must be >= 1")?;
        check(s.feature_dim >= 1, "scenario.feature_dim", "must be >= 1")?;
        check(s.class_separation >= 0.0, "scenario.class_separation", "must be >= 0")?;
        check(s.noise_std >= 0.0, "scenario.noise_std", "must be >= 0")?;
        check(
            (0.0..=1.0).contains(&s.trust_density),
            "scenario.trust_density",
            format!("must lie in [0, 1], got {}", s.trust_density),
        )?;

        let n = &self.network;
        check(n.area_side > 0.0, "network.area_side", "must be > 0")?;
        check(n.pathloss_exponent.is_finite(), "network.pathloss_exponent", "must be finite")?;
        check(n.ref_power > 0.0, "network.ref_power", "must be > 0")?;
        check(n.shadowing_db >= 0.0, "network.shadowing_db", "must be >= 0")?;
        check(n.rate >= 0.0 && n.rate.is_finite(), "network.rate", "must be finite and >= 0")?;
        check(n.noise_power > 0.0, "network.noise_power", "must be > 0")?;
        check(
            n.alpha_d > 0.0 && n.alpha_d < 1.0,
            "network.alpha_d",
            format!("must lie in (0, 1), got {}", n.alpha_d),
        )?;

        self.energy.validate().map_err(|e| Error::config(format!("energy: {e}")))?;

        let r = &self.rewards;
        for (key, v) in [
            ("rewards.alpha1", r.alpha1),
            ("rewards.alpha2", r.alpha2),
            ("rewards.alpha3", r.alpha3),
            ("rewards.gamma", r.gamma),
            ("rewards.budget", r.budget),
        ] {
            check(v >= 0.0 && v.is_finite(), key, format!("must be finite and >= 0, got {v}"))?;
        }
        check(
            r.diversity_threshold <= s.n_classes,
            "rewards.diversity_threshold",
            format!("must be <= n_classes = {}", s.n_classes),
        )?;
        check(self.rl.episodes >= 1, "rl.episodes", "must be >= 1")?;
        self.fl.validate()
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml_str(&text)
}

/// Overrides one `section.key` with a TOML literal (`"5"`, `"\"uniform\""`,
/// bare words are taken as strings).
pub fn set_key(config: &ScenarioConfig, key: &str, literal: &str) -> Result<ScenarioConfig> {
    set_keys(config, &[(key, literal)])
}

/// Applies every override, then validates once, so overrides may depend on
/// each other (`fl.total_steps` below the default `fl.tau_a`, say).
pub fn set_keys<K: AsRef<str>, V: AsRef<str>>(config: &ScenarioConfig, overrides: &[(K, V)]) -> Result<ScenarioConfig> {
    let mut doc = toml::Value::try_from(config).map_err(|e| Error::config(e.to_string()))?;
    for (key, literal) in overrides {
        let key = key.as_ref();
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| Error::config(format!("override key `{key}` must look like section.key")))?;
        let table = doc
            .get_mut(section)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::config(format!("unknown section `{section}`")))?;
        table.insert(field.to_string(), parse_literal(literal.as_ref()));
    }
    let text = toml::to_string(&doc).map_err(|e| Error::config(e.to_string()))?;
    ScenarioConfig::from_toml_str(&text)
}

fn parse_literal(literal: &str) -> toml::Value {
    let wrapped = format!("v = {literal}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(literal.to_string()),
    }
}
