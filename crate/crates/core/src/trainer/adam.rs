use serde::{Deserialize, Serialize};

use super::config::AdamConfig;
use super::TrainError;
use crate::autodiff::GradientMap;
use crate::models::ParamSet;

/// First and second moment estimates for every parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first: ParamSet,
    pub second: ParamSet,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        let zeros = params.map_values(|_| 0.0);
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    /// Moment shapes must match `params` entry for entry.
    pub fn matches(&self, params: &ParamSet) -> bool {
        let same = |a: &ParamSet| {
            a.len() == params.len()
                && params
                    .iter()
                    .all(|(k, t)| a.get(k).is_some_and(|m| m.shape() == t.shape()))
        };
        same(&self.first) && same(&self.second)
    }
}

/// One bias-corrected Adam update. Missing or non-finite gradients abort
/// before anything is modified.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &GradientMap,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
) -> Result<(), TrainError> {
    if !state.matches(params) {
        return Err(TrainError::Shape("optimizer state does not match parameters".into()));
    }
    for (name, p) in params.iter() {
        let g = grads
            .get(name)
            .ok_or_else(|| TrainError::Shape(format!("no gradient for `{name}`")))?;
        if g.shape() != p.shape() {
            return Err(TrainError::Shape(format!(
                "gradient for `{name}` has shape {:?}, parameter {:?}",
                g.shape(),
                p.shape()
            )));
        }
        if !g.is_finite() {
            return Err(TrainError::NonFinite {
                step: state.step as usize,
                phase: "optimizer",
                detail: format!("gradient of `{name}`"),
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (name, p) in params.iter_mut() {
        let g = grads[name].data();
        let m = state.first.get_mut(name).expect("checked").data_mut();
        let v = state.second.get_mut(name).expect("checked").data_mut();
        for (i, w) in p.data_mut().iter_mut().enumerate() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            *w -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
