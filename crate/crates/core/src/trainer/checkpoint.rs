//! JSON checkpoint container.
//!
//! Top-level fields: `format` (always `"motion-gan-checkpoint"`), `version`,
//! `epoch`, `step`, `config`, `topology`, `bounds`, `generator`, `critic`,
//! `discriminator` (each a map from parameter name to
//! `{"shape": [...], "values": [...]}`), the matching `*_adam` optimizer
//! states and an optional `quality` report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamState, QualityReport, TrainError, Trainer, TrainingConfig};
use crate::models::{Generator, ParamSet, SequenceScorer};
use crate::skeleton::{AxisBounds, SkeletonTopology};

pub const CHECKPOINT_FORMAT: &str = "motion-gan-checkpoint";
pub const CHECKPOINT_VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u64,
    pub epoch: usize,
    pub step: usize,
    pub config: TrainingConfig,
    pub topology: SkeletonTopology,
    pub bounds: AxisBounds,
    pub generator: ParamSet,
    pub critic: ParamSet,
    pub discriminator: ParamSet,
    pub generator_adam: AdamState,
    pub critic_adam: AdamState,
    pub discriminator_adam: AdamState,
    pub quality: Option<QualityReport>,
}

impl Checkpoint {
    pub fn generator(&self) -> Result<Generator, TrainError> {
        let cfg = self.config.generator_config(self.topology.joint_count());
        Ok(Generator::from_params(cfg, self.generator.clone())?)
    }

    pub fn critic(&self) -> Result<SequenceScorer, TrainError> {
        let cfg = self.config.critic_config(self.topology.joint_count());
        Ok(SequenceScorer::from_params("critic", cfg, self.critic.clone())?)
    }

    pub fn discriminator(&self) -> Result<SequenceScorer, TrainError> {
        let cfg = self.config.discriminator_config(self.topology.joint_count());
        Ok(SequenceScorer::from_params("disc", cfg, self.discriminator.clone())?)
    }

    /// Rebuilds a trainer; the training RNG restarts from the config seed.
    pub fn into_trainer(self) -> Result<Trainer, TrainError> {
        let mut t = Trainer::new(self.config.clone(), self.topology.clone())?;
        t.generator = self.generator()?;
        t.critic = self.critic()?;
        t.discriminator = self.discriminator()?;
        for (state, params) in [
            (&self.generator_adam, t.generator.params()),
            (&self.critic_adam, t.critic.params()),
            (&self.discriminator_adam, t.discriminator.params()),
        ] {
            if !state.matches(params) {
                return Err(TrainError::Corrupt("optimizer state does not match parameters".into()));
            }
        }
        t.generator_adam = self.generator_adam;
        t.critic_adam = self.critic_adam;
        t.discriminator_adam = self.discriminator_adam;
        t.step = self.step;
        Ok(t)
    }

    fn validate(&self) -> Result<(), TrainError> {
        self.config.validate()?;
        AxisBounds::new(self.bounds.min, self.bounds.max)?;
        self.generator()?;
        self.critic()?;
        self.discriminator()?;
        Ok(())
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), TrainError> {
    let text = serde_json::to_string(ckpt).map_err(|e| TrainError::Corrupt(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| TrainError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, TrainError> {
    let text = std::fs::read_to_string(path).map_err(|e| TrainError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| TrainError::Corrupt(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(CHECKPOINT_FORMAT) {
        return Err(TrainError::Corrupt(format!("missing `format: {CHECKPOINT_FORMAT}` tag")));
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| TrainError::Corrupt("missing version".into()))?;
    if version != CHECKPOINT_VERSION {
        return Err(TrainError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let ckpt: Checkpoint = serde_json::from_value(value).map_err(|e| TrainError::Corrupt(e.to_string()))?;
    ckpt.validate()?;
    Ok(ckpt)
}
