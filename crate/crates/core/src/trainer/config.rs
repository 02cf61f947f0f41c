use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::losses::LossWeights;
use crate::models::{GeneratorConfig, PoseOutput, ScorerConfig, ZDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// How raw coordinates are mapped into `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMode {
    /// NTU bounds for `.skeleton` input, fitted bounds otherwise.
    #[default]
    Auto,
    Ntu,
    Fit,
}

/// Every hyperparameter of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub desk_scale: bool,
    pub m: usize,
    pub n: usize,
    pub z_dim: usize,
    pub z_distribution: ZDistribution,
    pub hidden: usize,
    pub layers: usize,
    pub output: PoseOutput,
    pub critic_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub k_critic: usize,
    pub lr_critic: f64,
    pub lr_generator: f64,
    pub lr_discriminator: f64,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_fraction: f64,
    pub quality_n: usize,
    pub loss: LossWeights,
    pub seed: u64,
    pub stride: usize,
    pub frame_step: usize,
    pub bounds: BoundsMode,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            desk_scale: false,
            m: 10,
            n: 30,
            z_dim: 128,
            z_distribution: ZDistribution::Uniform,
            hidden: 1024,
            layers: 2,
            output: PoseOutput::Absolute,
            critic_hidden: vec![1024, 512],
            discriminator_hidden: vec![1024, 512],
            leaky_slope: 0.2,
            k_critic: 10,
            lr_critic: 5e-5,
            lr_generator: 5e-5,
            lr_discriminator: 2.5e-5,
            adam: AdamConfig::default(),
            batch_size: 16,
            epochs: 100,
            warmup_fraction: 0.25,
            quality_n: 64,
            loss: LossWeights::default(),
            seed: 0,
            stride: 1,
            frame_step: 1,
            bounds: BoundsMode::Auto,
        }
    }
}

/// Keys accepted by [`TrainingConfig::set`], in documentation order.
pub const CONFIG_KEYS: &[&str] = &[
    "preset",
    "m",
    "n",
    "z_dim",
    "z_distribution",
    "model.hidden",
    "model.layers",
    "model.output",
    "critic.hidden",
    "discriminator.hidden",
    "model.leaky_slope",
    "k_critic",
    "lr_critic",
    "lr_generator",
    "lr_discriminator",
    "adam.beta1",
    "adam.beta2",
    "adam.eps",
    "batch_size",
    "epochs",
    "warmup_fraction",
    "quality_n",
    "loss.lambda_gp",
    "loss.alpha_l2",
    "loss.alpha_pg",
    "loss.beta_bone",
    "loss.pg_floor",
    "loss.p",
    "seed",
    "data.stride",
    "data.frame_step",
    "data.bounds",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, TrainError> {
    value.trim().parse().map_err(|_| TrainError::Config {
        key: key.to_string(),
        message: format!("cannot parse `{value}` as {}", std::any::type_name::<T>()),
    })
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>, TrainError> {
    let v = value.trim();
    if v.is_empty() || v == "none" {
        return Ok(Vec::new());
    }
    v.split(',').map(|w| parse(key, w)).collect()
}

impl TrainingConfig {
    /// Small networks and a short latent, sized for a single CPU.
    pub fn desk() -> Self {
        Self {
            desk_scale: true,
            n: 10,
            z_dim: 16,
            hidden: 64,
            critic_hidden: vec![128, 64],
            discriminator_hidden: vec![128, 64],
            epochs: 20,
            ..Self::default()
        }
    }

    /// Applies one dotted `key = value` setting. `preset` replaces every
    /// field, so it belongs first.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TrainError> {
        let value = value.trim();
        match key {
            "preset" => {
                let seed = self.seed;
                *self = match value {
                    "desk" => Self::desk(),
                    "full" => Self::default(),
                    other => {
                        return Err(TrainError::Config {
                            key: key.into(),
                            message: format!("unknown preset `{other}` (desk|full)"),
                        })
                    }
                };
                self.seed = seed;
            }
            "m" => self.m = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "z_dim" => self.z_dim = parse(key, value)?,
            "z_distribution" => {
                self.z_distribution = value.parse().map_err(|message| TrainError::Config {
                    key: key.into(),
                    message,
                })?
            }
            "model.hidden" => self.hidden = parse(key, value)?,
            "model.layers" => self.layers = parse(key, value)?,
            "model.output" => {
                self.output = value.parse().map_err(|message| TrainError::Config {
                    key: key.into(),
                    message,
                })?
            }
            "critic.hidden" => self.critic_hidden = parse_widths(key, value)?,
            "discriminator.hidden" => self.discriminator_hidden = parse_widths(key, value)?,
            "model.leaky_slope" => self.leaky_slope = parse(key, value)?,
            "k_critic" => self.k_critic = parse(key, value)?,
            "lr_critic" => self.lr_critic = parse(key, value)?,
            "lr_generator" => self.lr_generator = parse(key, value)?,
            "lr_discriminator" => self.lr_discriminator = parse(key, value)?,
            "adam.beta1" => self.adam.beta1 = parse(key, value)?,
            "adam.beta2" => self.adam.beta2 = parse(key, value)?,
            "adam.eps" => self.adam.eps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "warmup_fraction" => self.warmup_fraction = parse(key, value)?,
            "quality_n" => self.quality_n = parse(key, value)?,
            "loss.lambda_gp" => self.loss.lambda_gp = parse(key, value)?,
            "loss.alpha_l2" => self.loss.alpha_l2 = parse(key, value)?,
            "loss.alpha_pg" => self.loss.alpha_pg = parse(key, value)?,
            "loss.beta_bone" => self.loss.beta_bone = parse(key, value)?,
            "loss.pg_floor" => self.loss.pg_floor = parse(key, value)?,
            "loss.p" => self.loss.pg_norm = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "data.stride" => self.stride = parse(key, value)?,
            "data.frame_step" => self.frame_step = parse(key, value)?,
            "data.bounds" => {
                self.bounds = match value {
                    "auto" => BoundsMode::Auto,
                    "ntu" => BoundsMode::Ntu,
                    "fit" => BoundsMode::Fit,
                    other => {
                        return Err(TrainError::Config {
                            key: key.into(),
                            message: format!("unknown bounds mode `{other}` (auto|ntu|fit)"),
                        })
                    }
                }
            }
            _ => {
                return Err(TrainError::Config {
                    key: key.into(),
                    message: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Starts from the defaults, applies a `preset` entry first if present,
    /// then every other entry in order, and validates.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, TrainError> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let mut cfg = Self::default();
        for (k, v) in pairs.iter().filter(|(k, _)| *k == "preset") {
            cfg.set(k, v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| *k != "preset") {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |key: &str, message: &str| {
            Err(TrainError::Config {
                key: key.into(),
                message: message.into(),
            })
        };
        for (k, v) in [
            ("m", self.m),
            ("n", self.n),
            ("z_dim", self.z_dim),
            ("model.hidden", self.hidden),
            ("model.layers", self.layers),
            ("k_critic", self.k_critic),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
            ("quality_n", self.quality_n),
            ("data.stride", self.stride),
            ("data.frame_step", self.frame_step),
        ] {
            if v == 0 {
                return bad(k, "must be >= 1");
            }
        }
        for (k, v) in [
            ("lr_critic", self.lr_critic),
            ("lr_generator", self.lr_generator),
            ("lr_discriminator", self.lr_discriminator),
            ("adam.eps", self.adam.eps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(k, "must be finite and > 0");
            }
        }
        for (k, v) in [("adam.beta1", self.adam.beta1), ("adam.beta2", self.adam.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return bad(k, "must lie in [0, 1)");
            }
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad("warmup_fraction", "must lie in [0, 1)");
        }
        if self.critic_hidden.contains(&0) || self.discriminator_hidden.contains(&0) {
            return bad("critic.hidden", "widths must be >= 1");
        }
        if !self.leaky_slope.is_finite() {
            return bad("model.leaky_slope", "must be finite");
        }
        self.loss.validate().map_err(|e| TrainError::Config {
            key: "loss".into(),
            message: e.to_string(),
        })
    }

    pub fn generator_config(&self, joints: usize) -> GeneratorConfig {
        GeneratorConfig {
            pose_dim: joints * 3,
            hidden: self.hidden,
            layers: self.layers,
            z_dim: self.z_dim,
            output: self.output,
        }
    }

    pub fn critic_config(&self, joints: usize) -> ScorerConfig {
        ScorerConfig {
            prior_frames: self.m,
            future_frames: self.n,
            pose_dim: joints * 3,
            hidden: self.critic_hidden.clone(),
            leaky_slope: self.leaky_slope,
        }
    }

    pub fn discriminator_config(&self, joints: usize) -> ScorerConfig {
        ScorerConfig {
            hidden: self.discriminator_hidden.clone(),
            ..self.critic_config(joints)
        }
    }

    /// Epochs (1-based) strictly above this count are eligible for best-model tracking.
    pub fn warmup_epochs(&self) -> f64 {
        self.warmup_fraction * self.epochs as f64
    }
}
