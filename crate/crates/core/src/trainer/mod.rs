//! Alternating adversarial optimization, quality tracking and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod data;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{AdamConfig, BoundsMode, TrainingConfig, CONFIG_KEYS};
pub use data::{pose_rows, rows_to_poses, Batch, Dataset};

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Graph, GradientMap, Tensor, Var};
use crate::losses::{critic_total_loss, discriminator_total_loss, generator_total_loss, LossError};
use crate::models::{Generator, ModelError, SequenceScorer};
use crate::skeleton::{SkeletonError, SkeletonTopology, TrainingSample};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("data: {0}")]
    Data(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at step {step} in {phase} phase: {detail}")]
    NonFinite {
        step: usize,
        phase: &'static str,
        detail: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint version {found}, this build reads version {expected}")]
    Version { found: u64, expected: u64 },
    #[error("csv: {0}")]
    Csv(String),
}

impl TrainError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TrainError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Losses of one training step; the critic entry is its last iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub critic_loss: f64,
    pub generator_loss: f64,
    pub discriminator_loss: f64,
}

/// Discriminator verdicts on generated futures for one probe prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub epoch: usize,
    pub count_above_half: usize,
    pub mean_prob: f64,
    pub probabilities: Vec<f64>,
}

impl QualityReport {
    pub fn from_probabilities(epoch: usize, probabilities: Vec<f64>) -> Self {
        let count_above_half = probabilities.iter().filter(|&&p| p > 0.5).count();
        let mean_prob = probabilities.iter().sum::<f64>() / probabilities.len().max(1) as f64;
        Self {
            epoch,
            count_above_half,
            mean_prob,
            probabilities,
        }
    }
}

fn finite_or_abort(g: &Graph, v: Var, step: usize, phase: &'static str) -> Result<f64, TrainError> {
    let value = g.scalar_value(v)?;
    if value.is_finite() {
        return Ok(value);
    }
    let detail = match g.first_non_finite() {
        Some((node, op)) => format!("loss {value}; first non-finite node #{} ({op})", node.index()),
        None => format!("loss {value}"),
    };
    Err(TrainError::NonFinite { step, phase, detail })
}

fn check_grads(grads: &GradientMap, step: usize, phase: &'static str) -> Result<(), TrainError> {
    match grads.iter().find(|(_, t)| !t.is_finite()) {
        Some((name, _)) => Err(TrainError::NonFinite {
            step,
            phase,
            detail: format!("gradient of `{name}`"),
        }),
        None => Ok(()),
    }
}

fn constants(g: &mut Graph, ts: &[Tensor]) -> Vec<Var> {
    ts.iter().map(|t| g.constant(t.clone())).collect()
}

/// The three networks with their optimizer states and the training RNG.
#[derive(Clone, Debug)]
pub struct Trainer {
    config: TrainingConfig,
    topology: SkeletonTopology,
    pub generator: Generator,
    pub critic: SequenceScorer,
    pub discriminator: SequenceScorer,
    pub generator_adam: AdamState,
    pub critic_adam: AdamState,
    pub discriminator_adam: AdamState,
    rng: ChaCha8Rng,
    step: usize,
}

impl Trainer {
    pub fn new(config: TrainingConfig, topology: SkeletonTopology) -> Result<Self, TrainError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let joints = topology.joint_count();
        let generator = Generator::new(config.generator_config(joints), &mut rng)?;
        let critic = SequenceScorer::new("critic", config.critic_config(joints), &mut rng)?;
        let discriminator = SequenceScorer::new("disc", config.discriminator_config(joints), &mut rng)?;
        Ok(Self {
            generator_adam: AdamState::new(generator.params()),
            critic_adam: AdamState::new(critic.params()),
            discriminator_adam: AdamState::new(discriminator.params()),
            config,
            topology,
            generator,
            critic,
            discriminator,
            rng,
            step: 0,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    /// Completed training steps.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn sample_z(&mut self, batch: usize) -> Tensor {
        self.config
            .z_distribution
            .sample_batch(&mut self.rng, batch, self.config.z_dim)
    }

    fn check_batch(&self, batch: &Batch) -> Result<(), TrainError> {
        if batch.prior.len() != self.config.m || batch.future.len() != self.config.n {
            return Err(TrainError::Shape(format!(
                "batch has {}+{} frames, configured {}+{}",
                batch.prior.len(),
                batch.future.len(),
                self.config.m,
                self.config.n
            )));
        }
        Ok(())
    }

    /// `k_critic` Adam updates of the critic, each with fresh latents and
    /// interpolation weights. Returns the loss before every update.
    pub fn critic_phase(&mut self, batch: &Batch) -> Result<Vec<f64>, TrainError> {
        self.check_batch(batch)?;
        let b = batch.size();
        let mut trace = Vec::with_capacity(self.config.k_critic);
        for _ in 0..self.config.k_critic {
            let z = self.sample_z(b);
            let fake = self.generator.predict(&batch.prior, &z, self.config.n)?;
            let eps = Tensor::new(vec![b, 1], (0..b).map(|_| self.rng.random_range(0.0..=1.0)).collect())?;

            let mut g = Graph::with_second_order();
            let cv = self.critic.bind(&mut g)?;
            let prior = constants(&mut g, &batch.prior);
            let real = constants(&mut g, &batch.future);
            let fake = constants(&mut g, &fake);
            let loss = critic_total_loss(&mut g, &self.critic, &cv, &prior, &real, &fake, &eps, &self.config.loss)?;
            let value = finite_or_abort(&g, loss.total, self.step, "critic")?;
            let grads = g.backward(loss.total)?;
            check_grads(&grads, self.step, "critic")?;
            adam_step(
                self.critic.params_mut(),
                &grads,
                &mut self.critic_adam,
                self.config.lr_critic,
                &self.config.adam,
            )?;
            trace.push(value);
        }
        Ok(trace)
    }

    /// One Adam update of the generator against the frozen critic.
    pub fn generator_phase(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        self.check_batch(batch)?;
        let z = self.sample_z(batch.size());
        let mut g = Graph::new();
        let gv = self.generator.bind(&mut g)?;
        let cv = self.critic.bind_frozen(&mut g)?;
        let prior = constants(&mut g, &batch.prior);
        let zv = g.constant(z);
        let fake = self.generator.generate(&mut g, &gv, &prior, zv, self.config.n)?;
        let bones = g.constant(batch.bones.clone());
        let loss = generator_total_loss(
            &mut g,
            &self.critic,
            &cv,
            &prior,
            &fake,
            bones,
            &self.topology,
            &self.config.loss,
        )?;
        let value = finite_or_abort(&g, loss.total, self.step, "generator")?;
        let grads = g.backward(loss.total)?;
        check_grads(&grads, self.step, "generator")?;
        adam_step(
            self.generator.params_mut(),
            &grads,
            &mut self.generator_adam,
            self.config.lr_generator,
            &self.config.adam,
        )?;
        Ok(value)
    }

    /// One Adam update of the discriminator on real versus generated futures.
    pub fn discriminator_phase(&mut self, batch: &Batch) -> Result<f64, TrainError> {
        self.check_batch(batch)?;
        let z = self.sample_z(batch.size());
        let fake = self.generator.predict(&batch.prior, &z, self.config.n)?;
        let mut g = Graph::new();
        let dv = self.discriminator.bind(&mut g)?;
        let prior = constants(&mut g, &batch.prior);
        let real = constants(&mut g, &batch.future);
        let fake = constants(&mut g, &fake);
        let loss = discriminator_total_loss(
            &mut g,
            &self.discriminator,
            &dv,
            &prior,
            &real,
            &fake,
            self.config.loss.alpha_l2,
        )?;
        let value = finite_or_abort(&g, loss, self.step, "discriminator")?;
        let grads = g.backward(loss)?;
        check_grads(&grads, self.step, "discriminator")?;
        adam_step(
            self.discriminator.params_mut(),
            &grads,
            &mut self.discriminator_adam,
            self.config.lr_discriminator,
            &self.config.adam,
        )?;
        Ok(value)
    }

    /// Critic iterations, then one generator and one discriminator update.
    pub fn train_step(&mut self, batch: &Batch) -> Result<LossRecord, TrainError> {
        let critic = self.critic_phase(batch)?;
        let generator = self.generator_phase(batch)?;
        let discriminator = self.discriminator_phase(batch)?;
        self.step += 1;
        Ok(LossRecord {
            step: self.step,
            critic_loss: *critic.last().expect("k_critic >= 1"),
            generator_loss: generator,
            discriminator_loss: discriminator,
        })
    }

    /// Scores `draws` generated futures of one normalized probe sample.
    /// The latents come from a dedicated stream keyed by `(seed, epoch)`.
    pub fn quality_evaluate(
        &self,
        probe: &TrainingSample,
        draws: usize,
        epoch: usize,
    ) -> Result<QualityReport, TrainError> {
        if draws == 0 {
            return Err(TrainError::Config {
                key: "quality_n".into(),
                message: "must be >= 1".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(epoch as u64 + 1);
        let z = self.config.z_distribution.sample_batch(&mut rng, draws, self.config.z_dim);
        let prior: Vec<Tensor> = probe
            .prior
            .iter()
            .map(|p| pose_rows(std::iter::repeat_n(p, draws)))
            .collect();
        let future = self.generator.predict(&prior, &z, self.config.n)?;
        let probs = self.discriminator.score_tensors(&prior, &future, true)?;
        Ok(QualityReport::from_probabilities(epoch, probs.into_data()))
    }

    pub fn checkpoint(&self, epoch: usize, bounds: crate::skeleton::AxisBounds, quality: Option<QualityReport>) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            epoch,
            step: self.step,
            config: self.config.clone(),
            topology: self.topology.clone(),
            bounds,
            generator: self.generator.params().clone(),
            critic: self.critic.params().clone(),
            discriminator: self.discriminator.params().clone(),
            generator_adam: self.generator_adam.clone(),
            critic_adam: self.critic_adam.clone(),
            discriminator_adam: self.discriminator_adam.clone(),
            quality,
        }
    }
}

/// Per-epoch progress passed to the [`train`] observer.
#[derive(Clone, Debug)]
pub struct EpochSummary<'a> {
    pub epoch: usize,
    pub steps: usize,
    pub last: Option<&'a LossRecord>,
    pub quality: &'a QualityReport,
    pub best_count: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub history: Vec<LossRecord>,
    pub quality: Vec<QualityReport>,
}

/// Full run: shuffled passes over the dataset, one loop iteration per
/// batch, quality tracking each epoch on a probe fixed at the start.
/// After warmup the checkpoint with the highest count is kept; ties go to
/// the later epoch.
pub fn train(
    dataset: &Dataset,
    config: &TrainingConfig,
    mut observe: impl FnMut(&EpochSummary<'_>),
) -> Result<TrainOutcome, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::Data("dataset is empty".into()));
    }
    let mut trainer = Trainer::new(config.clone(), dataset.topology().clone())?;
    let probe = dataset.samples()[trainer.rng.random_range(0..dataset.len())].clone();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::new();
    let mut quality = Vec::new();
    let mut best: Option<Checkpoint> = None;
    let warmup = config.warmup_epochs();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut trainer.rng);
        for chunk in order.chunks(config.batch_size) {
            let batch = dataset.batch(chunk);
            history.push(trainer.train_step(&batch)?);
        }
        let report = trainer.quality_evaluate(&probe, config.quality_n, epoch)?;
        if epoch as f64 > warmup {
            let better = best
                .as_ref()
                .and_then(|b| b.quality.as_ref())
                .is_none_or(|q| report.count_above_half >= q.count_above_half);
            if better {
                best = Some(trainer.checkpoint(epoch, dataset.bounds(), Some(report.clone())));
            }
        }
        observe(&EpochSummary {
            epoch,
            steps: trainer.step,
            last: history.last(),
            quality: &report,
            best_count: best.as_ref().and_then(|b| b.quality.as_ref()).map(|q| q.count_above_half),
        });
        quality.push(report);
    }
    let last = trainer.checkpoint(config.epochs, dataset.bounds(), quality.last().cloned());
    Ok(TrainOutcome {
        best: best.expect("the final epoch always exceeds the warmup"),
        last,
        history,
        quality,
    })
}

pub fn write_loss_csv(path: &Path, history: &[LossRecord]) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| TrainError::Csv(format!("{}: {e}", path.display())))?;
    if history.is_empty() {
        w.write_record(["step", "critic_loss", "generator_loss", "discriminator_loss"])
            .map_err(|e| TrainError::Csv(e.to_string()))?;
    }
    for r in history {
        w.serialize(r).map_err(|e| TrainError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| TrainError::io(path, e))
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<LossRecord>, TrainError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| TrainError::Csv(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| TrainError::Csv(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Serialize)]
struct QualityRow {
    epoch: usize,
    count_above_half: usize,
    mean_prob: f64,
}

pub fn write_quality_csv(path: &Path, reports: &[QualityReport]) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| TrainError::Csv(format!("{}: {e}", path.display())))?;
    if reports.is_empty() {
        w.write_record(["epoch", "count_above_half", "mean_prob"])
            .map_err(|e| TrainError::Csv(e.to_string()))?;
    }
    for q in reports {
        w.serialize(QualityRow {
            epoch: q.epoch,
            count_above_half: q.count_above_half,
            mean_prob: q.mean_prob,
        })
        .map_err(|e| TrainError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| TrainError::io(path, e))
}
