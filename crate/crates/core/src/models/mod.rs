//! Generator, critic and discriminator networks.

mod generator;
mod gru;
mod latent;
mod params;
mod scorer;
#[cfg(test)]
pub(crate) mod testutil;

pub use generator::{Generator, GeneratorConfig, GeneratorVars, PoseOutput};
pub use gru::{GruCell, GruVars};
pub use latent::{LatentVector, ZDistribution};
pub use params::{Bound, Dense, DenseVars, ParamSet};
pub use scorer::{ScorerConfig, ScorerVars, SequenceScorer};

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("invalid model configuration: {0}")]
    Config(String),
}

/// Checks that `params` holds exactly the named shapes, all finite.
pub(crate) fn validate_params(params: &ParamSet, expected: &[(String, Vec<usize>)]) -> Result<(), ModelError> {
    for (name, shape) in expected {
        let t = params
            .get(name)
            .ok_or_else(|| ModelError::MissingParameter(name.clone()))?;
        if t.shape() != shape.as_slice() {
            return Err(ModelError::InvalidParameter {
                name: name.clone(),
                reason: format!("shape {:?}, expected {:?}", t.shape(), shape),
            });
        }
        if !t.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: name.clone(),
                reason: "non-finite value".into(),
            });
        }
    }
    if params.len() != expected.len() {
        let extra = params
            .iter()
            .map(|(k, _)| k)
            .find(|k| !expected.iter().any(|(n, _)| n == k))
            .unwrap_or_default()
            .to_string();
        return Err(ModelError::InvalidParameter {
            name: extra,
            reason: "unexpected parameter".into(),
        });
    }
    Ok(())
}

/// Requires `v` to have shape `[batch, width]`; returns the batch size.
pub(crate) fn expect_rows(
    g: &crate::autodiff::Graph,
    v: crate::autodiff::Var,
    width: usize,
    what: &str,
) -> Result<usize, ModelError> {
    match g.shape(v) {
        [b, w] if *w == width => Ok(*b),
        s => Err(ModelError::Shape(format!("{what}: shape {s:?}, expected [batch, {width}]"))),
    }
}
