//! Critic, generator and discriminator objectives.
//!
//! Every function builds graph nodes and reduces over the batch by the
//! arithmetic mean. Frames are `[B, J*3]` rows; scores are `[B, 1]`.

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Graph, Tensor, Var};
use crate::models::{ModelError, ScorerVars, SequenceScorer};
use crate::skeleton::SkeletonTopology;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before logs.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("invalid loss weights: {0}")]
    Weights(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_gp: f64,
    pub alpha_l2: f64,
    pub alpha_pg: f64,
    pub beta_bone: f64,
    pub pg_floor: f64,
    pub pg_norm: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_gp: 10.0,
            alpha_l2: 0.001,
            alpha_pg: 0.01,
            beta_bone: 0.01,
            pg_floor: 0.01,
            pg_norm: 2.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), LossError> {
        for (k, v) in [
            ("lambda_gp", self.lambda_gp),
            ("alpha_l2", self.alpha_l2),
            ("alpha_pg", self.alpha_pg),
            ("beta_bone", self.beta_bone),
            ("pg_floor", self.pg_floor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LossError::Weights(format!("{k} = {v} must be finite and >= 0")));
            }
        }
        if !(self.pg_norm.is_finite() && self.pg_norm >= 1.0) {
            return Err(LossError::Weights(format!("pg_norm = {} must be >= 1", self.pg_norm)));
        }
        Ok(())
    }
}

/// Mean of `fake - real`.
pub fn wgan_critic_term(g: &mut Graph, score_fake: Var, score_real: Var) -> Result<Var, LossError> {
    let d = g.sub(score_fake, score_real)?;
    Ok(g.mean(d))
}

/// Mean over rows of `(||grad_x D(x)|| - 1)^2` at `x = eps*real + (1-eps)*fake`.
///
/// `real` and `fake` are flattened sequences `[B, input_dim]`, `eps` is
/// `[B, 1]` in `[0, 1]`. The result stays differentiable in the critic weights.
pub fn gradient_penalty(
    g: &mut Graph,
    critic: &SequenceScorer,
    cv: &ScorerVars,
    real: &Tensor,
    fake: &Tensor,
    eps: &Tensor,
) -> Result<Var, LossError> {
    if real.shape() != fake.shape() || real.rank() != 2 {
        return Err(LossError::Shape(format!(
            "real {:?} and fake {:?} must be equal [B, D]",
            real.shape(),
            fake.shape()
        )));
    }
    let (b, d) = (real.shape()[0], real.shape()[1]);
    if eps.shape() != [b, 1] {
        return Err(LossError::Shape(format!("eps {:?}, expected [{b}, 1]", eps.shape())));
    }
    if eps.data().iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(LossError::Shape("eps must lie in [0, 1]".into()));
    }
    let mixed: Vec<f64> = (0..b * d)
        .map(|k| {
            let e = eps.data()[k / d];
            e * real.data()[k] + (1.0 - e) * fake.data()[k]
        })
        .collect();
    let x = g.input(Tensor::new(vec![b, d], mixed)?);
    let score = critic.score_flat(g, cv, x)?;
    // Row i of the score depends only on row i of x, so the gradient of the
    // sum holds every per-sample input gradient.
    let total = g.sum(score);
    let grad = g.input_gradient(total, x)?;
    let sq = g.square(grad);
    let per_row = g.sum_to(sq, &[b, 1])?;
    let norm = g.sqrt(per_row)?;
    let off = g.add_scalar(norm, -1.0);
    let pen = g.square(off);
    Ok(g.mean(pen))
}

/// Euclidean norm of all given tensors taken together.
pub fn l2_regularizer(g: &mut Graph, vars: impl IntoIterator<Item = Var>) -> Result<Var, LossError> {
    let mut acc = g.constant(Tensor::scalar(0.0));
    for v in vars {
        let s = g.square(v);
        let s = g.sum(s);
        acc = g.add(acc, s)?;
    }
    Ok(g.sqrt(acc)?)
}

#[derive(Clone, Copy, Debug)]
pub struct CriticLoss {
    pub total: Var,
    pub wgan: Var,
    pub penalty: Var,
    pub l2: Var,
}

/// Wasserstein term, gradient penalty and weight norm. Real and fake
/// futures are detached so only the critic receives gradients.
#[allow(clippy::too_many_arguments)]
pub fn critic_total_loss(
    g: &mut Graph,
    critic: &SequenceScorer,
    cv: &ScorerVars,
    prior: &[Var],
    real_future: &[Var],
    fake_future: &[Var],
    eps: &Tensor,
    weights: &LossWeights,
) -> Result<CriticLoss, LossError> {
    let detach = |g: &mut Graph, vs: &[Var]| vs.iter().map(|&v| g.detach(v)).collect::<Vec<_>>();
    let prior = detach(g, prior);
    let real = detach(g, real_future);
    let fake = detach(g, fake_future);

    let real_flat = critic.flatten(g, &prior, &real)?;
    let fake_flat = critic.flatten(g, &prior, &fake)?;
    let s_real = critic.score_flat(g, cv, real_flat)?;
    let s_fake = critic.score_flat(g, cv, fake_flat)?;
    let wgan = wgan_critic_term(g, s_fake, s_real)?;

    let (rv, fv) = (g.value(real_flat).clone(), g.value(fake_flat).clone());
    let penalty = gradient_penalty(g, critic, cv, &rv, &fv, eps)?;
    let l2 = l2_regularizer(g, cv.all().collect::<Vec<_>>())?;

    let a = g.scale(penalty, weights.lambda_gp);
    let b = g.scale(l2, weights.alpha_l2);
    let t = g.add(wgan, a)?;
    let total = g.add(t, b)?;
    Ok(CriticLoss {
        total,
        wgan,
        penalty,
        l2,
    })
}

/// Negated mean critic score of the generated sequences.
pub fn adversarial_loss(
    g: &mut Graph,
    critic: &SequenceScorer,
    cv: &ScorerVars,
    prior: &[Var],
    fake_future: &[Var],
) -> Result<Var, LossError> {
    let s = critic.critic_score(g, cv, prior, fake_future)?;
    let m = g.mean(s);
    Ok(g.neg(m))
}

/// Batch mean of `max(floor, (sum_t sum_k |y_t - y_(t-1)|^p)^(1/p))`, with
/// `y_0` the last observed pose.
pub fn pose_gradient_loss(
    g: &mut Graph,
    last_input: Var,
    predicted: &[Var],
    p: f64,
    floor: f64,
) -> Result<Var, LossError> {
    if predicted.is_empty() {
        return Err(LossError::Shape("pose gradient needs at least one predicted pose".into()));
    }
    let batch = match g.shape(last_input) {
        [b, _] => *b,
        s => return Err(LossError::Shape(format!("pose shape {s:?}, expected [B, D]"))),
    };
    let mut prev = last_input;
    let mut acc: Option<Var> = None;
    for &y in predicted {
        let d = g.sub(y, prev)?;
        let a = g.abs(d);
        let powed = if p == 2.0 { g.square(a) } else { g.pow(a, p)? };
        let row = g.sum_to(powed, &[batch, 1])?;
        acc = Some(match acc {
            Some(s) => g.add(s, row)?,
            None => row,
        });
        prev = y;
    }
    let sum = acc.expect("non-empty");
    let raw = if p == 2.0 { g.sqrt(sum)? } else { g.pow(sum, 1.0 / p)? };
    let floored = g.max_const(raw, floor);
    Ok(g.mean(floored))
}

/// Constant matrix turning a flat pose `[B, J*3]` into bone vectors `[B, (J-1)*3]`.
fn bone_vector_map(topology: &SkeletonTopology) -> Tensor {
    let (j, nb) = (topology.joint_count(), topology.bone_count());
    let mut m = Tensor::zeros(&[3 * j, 3 * nb]);
    let cols = 3 * nb;
    for (bi, &(parent, child)) in topology.bones().iter().enumerate() {
        for a in 0..3 {
            m.data_mut()[(child * 3 + a) * cols + bi * 3 + a] = 1.0;
            m.data_mut()[(parent * 3 + a) * cols + bi * 3 + a] = -1.0;
        }
    }
    m
}

/// Sums consecutive triples: `[B, (J-1)*3]` to `[B, J-1]`.
fn triple_sum_map(bones: usize) -> Tensor {
    let mut m = Tensor::zeros(&[3 * bones, bones]);
    for bi in 0..bones {
        for a in 0..3 {
            m.data_mut()[(bi * 3 + a) * bones + bi] = 1.0;
        }
    }
    m
}

/// Bone lengths `[B, J-1]` of flat poses `[B, J*3]`.
pub fn bone_lengths_batch(g: &mut Graph, pose: Var, topology: &SkeletonTopology) -> Result<Var, LossError> {
    let to_vec = g.constant(bone_vector_map(topology));
    let to_len = g.constant(triple_sum_map(topology.bone_count()));
    let v = g.matmul(pose, to_vec).map_err(|e| LossError::Shape(format!("pose vs topology: {e}")))?;
    let sq = g.square(v);
    let len2 = g.matmul(sq, to_len)?;
    Ok(g.sqrt(len2)?)
}

/// Batch mean of `sum_t ||bone_lengths(y_t) - reference||` with
/// `reference: [B, J-1]`.
pub fn bone_loss(
    g: &mut Graph,
    predicted: &[Var],
    reference: Var,
    topology: &SkeletonTopology,
) -> Result<Var, LossError> {
    let batch = match g.shape(reference) {
        [b, k] if *k == topology.bone_count() => *b,
        s => {
            return Err(LossError::Shape(format!(
                "reference lengths {s:?}, expected [B, {}]",
                topology.bone_count()
            )))
        }
    };
    if predicted.is_empty() {
        return Err(LossError::Shape("bone loss needs at least one predicted pose".into()));
    }
    let mut acc: Option<Var> = None;
    for &y in predicted {
        let len = bone_lengths_batch(g, y, topology)?;
        let d = g.sub(len, reference)?;
        let sq = g.square(d);
        let row = g.sum_to(sq, &[batch, 1])?;
        let n = g.sqrt(row)?;
        acc = Some(match acc {
            Some(s) => g.add(s, n)?,
            None => n,
        });
    }
    Ok(g.mean(acc.expect("non-empty")))
}

#[derive(Clone, Copy, Debug)]
pub struct GeneratorLoss {
    pub total: Var,
    pub adversarial: Var,
    pub pose_gradient: Var,
    pub bone: Var,
}

/// Adversarial term plus weighted pose-gradient and bone terms. The critic
/// weights are detached so only the generator receives gradients.
#[allow(clippy::too_many_arguments)]
pub fn generator_total_loss(
    g: &mut Graph,
    critic: &SequenceScorer,
    cv: &ScorerVars,
    prior: &[Var],
    fake_future: &[Var],
    reference_bones: Var,
    topology: &SkeletonTopology,
    weights: &LossWeights,
) -> Result<GeneratorLoss, LossError> {
    let frozen = cv.detached(g);
    let adversarial = adversarial_loss(g, critic, &frozen, prior, fake_future)?;
    let last = *prior
        .last()
        .ok_or_else(|| LossError::Shape("prior must contain at least one pose".into()))?;
    let pose_gradient = pose_gradient_loss(g, last, fake_future, weights.pg_norm, weights.pg_floor)?;
    let bone = bone_loss(g, fake_future, reference_bones, topology)?;
    let a = g.scale(pose_gradient, weights.alpha_pg);
    let b = g.scale(bone, weights.beta_bone);
    let t = g.add(adversarial, a)?;
    let total = g.add(t, b)?;
    Ok(GeneratorLoss {
        total,
        adversarial,
        pose_gradient,
        bone,
    })
}

/// `-(mean log p_real + mean log(1 - p_fake)) + alpha * l2`.
pub fn gan_discriminator_loss(
    g: &mut Graph,
    prob_real: Var,
    prob_fake: Var,
    l2: Var,
    alpha: f64,
) -> Result<Var, LossError> {
    let clamp = |g: &mut Graph, p: Var| {
        let lo = g.max_const(p, PROB_EPS);
        g.min_const(lo, 1.0 - PROB_EPS)
    };
    let pr = clamp(g, prob_real);
    let pf = clamp(g, prob_fake);
    let lr = g.log(pr)?;
    let neg = g.neg(pf);
    let one_minus = g.add_scalar(neg, 1.0);
    let lf = g.log(one_minus)?;
    let mr = g.mean(lr);
    let mf = g.mean(lf);
    let s = g.add(mr, mf)?;
    let data = g.neg(s);
    let reg = g.scale(l2, alpha);
    Ok(g.add(data, reg)?)
}

/// Discriminator objective on real and generated futures; the generated
/// future is detached so the generator receives no gradient.
pub fn discriminator_total_loss(
    g: &mut Graph,
    disc: &SequenceScorer,
    dv: &ScorerVars,
    prior: &[Var],
    real_future: &[Var],
    fake_future: &[Var],
    alpha: f64,
) -> Result<Var, LossError> {
    let prior: Vec<Var> = prior.iter().map(|&v| g.detach(v)).collect();
    let fake: Vec<Var> = fake_future.iter().map(|&v| g.detach(v)).collect();
    let pr = disc.discriminator_prob(g, dv, &prior, real_future)?;
    let pf = disc.discriminator_prob(g, dv, &prior, &fake)?;
    let l2 = l2_regularizer(g, dv.all().collect::<Vec<_>>())?;
    gan_discriminator_loss(g, pr, pf, l2, alpha)
}

/// Mean squared error over every frame, joint and axis.
pub fn reconstruction_mse(g: &mut Graph, predicted: &[Var], truth: &[Var]) -> Result<Var, LossError> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(LossError::Shape(format!(
            "{} predicted vs {} reference frames",
            predicted.len(),
            truth.len()
        )));
    }
    let mut acc = g.constant(Tensor::scalar(0.0));
    let mut count = 0usize;
    for (&p, &t) in predicted.iter().zip(truth) {
        let d = g.sub(p, t)?;
        let s = g.square(d);
        count += g.value(s).len();
        let s = g.sum(s);
        acc = g.add(acc, s)?;
    }
    Ok(g.scale(acc, 1.0 / count as f64))
}
