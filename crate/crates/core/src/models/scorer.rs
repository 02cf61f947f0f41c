use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{Bound, Dense, DenseVars, ParamSet};
use super::{expect_rows, validate_params, ModelError};
use crate::autodiff::{Graph, Tensor, Var};

/// Feed-forward network over a whole prior + future sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub prior_frames: usize,
    pub future_frames: usize,
    pub pose_dim: usize,
    /// Hidden widths; empty gives a single affine map.
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
}

impl ScorerConfig {
    pub fn input_dim(&self) -> usize {
        (self.prior_frames + self.future_frames) * self.pose_dim
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.prior_frames == 0 || self.future_frames == 0 || self.pose_dim == 0 {
            return Err(ModelError::Config("scorer frame counts and pose width must be >= 1".into()));
        }
        if self.hidden.contains(&0) {
            return Err(ModelError::Config("scorer hidden widths must be >= 1".into()));
        }
        if !self.leaky_slope.is_finite() {
            return Err(ModelError::Config("leaky slope must be finite".into()));
        }
        Ok(())
    }

    pub fn layers(&self, prefix: &str) -> Vec<Dense> {
        let mut widths = vec![self.input_dim()];
        widths.extend(&self.hidden);
        widths.push(1);
        widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::new(format!("{prefix}.l{i}"), w[0], w[1]))
            .collect()
    }

    pub fn shapes(&self, prefix: &str) -> Vec<(String, Vec<usize>)> {
        self.layers(prefix).iter().flat_map(Dense::shapes).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ScorerVars {
    pub layers: Vec<DenseVars>,
}

impl ScorerVars {
    /// Constant copies: scoring through these sends no gradient to the weights.
    pub fn detached(&self, g: &mut Graph) -> ScorerVars {
        ScorerVars {
            layers: self
                .layers
                .iter()
                .map(|l| DenseVars {
                    weight: g.detach(l.weight),
                    bias: g.detach(l.bias),
                })
                .collect(),
        }
    }

    pub fn all(&self) -> impl Iterator<Item = Var> + '_ {
        self.layers.iter().flat_map(|l| [l.weight, l.bias])
    }
}

/// Critic (unbounded score) or discriminator (sigmoid of the same score).
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceScorer {
    prefix: String,
    config: ScorerConfig,
    params: ParamSet,
}

impl SequenceScorer {
    pub fn new(prefix: impl Into<String>, config: ScorerConfig, rng: &mut impl Rng) -> Result<Self, ModelError> {
        config.validate()?;
        let prefix = prefix.into();
        let mut params = ParamSet::new();
        for layer in config.layers(&prefix) {
            layer.init(rng, &mut params);
        }
        Ok(Self { prefix, config, params })
    }

    pub fn zeros(prefix: impl Into<String>, config: ScorerConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let prefix = prefix.into();
        let mut params = ParamSet::new();
        for layer in config.layers(&prefix) {
            layer.init_zeros(&mut params);
        }
        Ok(Self { prefix, config, params })
    }

    pub fn from_params(prefix: impl Into<String>, config: ScorerConfig, params: ParamSet) -> Result<Self, ModelError> {
        config.validate()?;
        let prefix = prefix.into();
        validate_params(&params, &config.shapes(&prefix))?;
        Ok(Self { prefix, config, params })
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    /// Callers must keep shapes unchanged.
    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn bind(&self, g: &mut Graph) -> Result<ScorerVars, ModelError> {
        let bound = self.params.bind(g)?;
        self.vars(&bound)
    }

    pub fn bind_frozen(&self, g: &mut Graph) -> Result<ScorerVars, ModelError> {
        let bound = self.params.bind_frozen(g);
        self.vars(&bound)
    }

    pub fn vars(&self, bound: &Bound) -> Result<ScorerVars, ModelError> {
        Ok(ScorerVars {
            layers: self
                .config
                .layers(&self.prefix)
                .iter()
                .map(|l| l.vars(bound))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Concatenates frames (time, joint, axis order) into `[B, input_dim]`.
    pub fn flatten(&self, g: &mut Graph, prior: &[Var], future: &[Var]) -> Result<Var, ModelError> {
        if prior.len() != self.config.prior_frames || future.len() != self.config.future_frames {
            return Err(ModelError::Shape(format!(
                "got {}+{} frames, configured {}+{}",
                prior.len(),
                future.len(),
                self.config.prior_frames,
                self.config.future_frames
            )));
        }
        let frames: Vec<Var> = prior.iter().chain(future).copied().collect();
        let batch = expect_rows(g, frames[0], self.config.pose_dim, "frame")?;
        for &f in &frames[1..] {
            if expect_rows(g, f, self.config.pose_dim, "frame")? != batch {
                return Err(ModelError::Shape("frames disagree on batch size".into()));
            }
        }
        Ok(g.concat(&frames)?)
    }

    /// Unbounded score `[B, 1]` of flattened sequences `[B, input_dim]`.
    pub fn score_flat(&self, g: &mut Graph, v: &ScorerVars, x: Var) -> Result<Var, ModelError> {
        expect_rows(g, x, self.config.input_dim(), "scorer input")?;
        let mut h = x;
        let last = v.layers.len() - 1;
        for (i, &layer) in v.layers.iter().enumerate() {
            h = Dense::forward(g, layer, h)?;
            if i < last {
                h = g.leaky_relu(h, self.config.leaky_slope);
            }
        }
        Ok(h)
    }

    pub fn critic_score(&self, g: &mut Graph, v: &ScorerVars, prior: &[Var], future: &[Var]) -> Result<Var, ModelError> {
        let x = self.flatten(g, prior, future)?;
        self.score_flat(g, v, x)
    }

    /// Probability `[B, 1]` that each sequence is real.
    pub fn discriminator_prob(
        &self,
        g: &mut Graph,
        v: &ScorerVars,
        prior: &[Var],
        future: &[Var],
    ) -> Result<Var, ModelError> {
        let s = self.critic_score(g, v, prior, future)?;
        Ok(g.sigmoid(s))
    }

    /// Frozen forward pass on plain tensors.
    pub fn score_tensors(&self, prior: &[Tensor], future: &[Tensor], probability: bool) -> Result<Tensor, ModelError> {
        let mut g = Graph::new();
        let v = self.bind_frozen(&mut g)?;
        let p: Vec<Var> = prior.iter().map(|t| g.constant(t.clone())).collect();
        let f: Vec<Var> = future.iter().map(|t| g.constant(t.clone())).collect();
        let out = if probability {
            self.discriminator_prob(&mut g, &v, &p, &f)?
        } else {
            self.critic_score(&mut g, &v, &p, &f)?
        };
        Ok(g.value(out).clone())
    }
}
