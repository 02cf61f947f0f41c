use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;

/// Distribution of the latent vector fed to the generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZDistribution {
    /// Uniform on [-1, 1].
    #[default]
    Uniform,
    /// Standard normal.
    Gaussian,
}

impl ZDistribution {
    pub fn draw(self, rng: &mut impl Rng) -> f64 {
        match self {
            ZDistribution::Uniform => rng.random_range(-1.0..=1.0),
            ZDistribution::Gaussian => rng.sample(StandardNormal),
        }
    }

    /// `[batch, z_dim]` independent draws, row by row.
    pub fn sample_batch(self, rng: &mut impl Rng, batch: usize, z_dim: usize) -> Tensor {
        let data = (0..batch * z_dim).map(|_| self.draw(rng)).collect();
        Tensor::new(vec![batch, z_dim], data).expect("batch and z_dim must be positive")
    }
}

impl std::str::FromStr for ZDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gaussian" | "normal" => Ok(Self::Gaussian),
            other => Err(format!("unknown z distribution `{other}` (uniform|gaussian)")),
        }
    }
}

/// One latent draw with the distribution it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentVector {
    pub values: Vec<f64>,
    pub distribution: ZDistribution,
}

impl LatentVector {
    pub fn sample(rng: &mut impl Rng, distribution: ZDistribution, z_dim: usize) -> Self {
        Self {
            values: (0..z_dim).map(|_| distribution.draw(rng)).collect(),
            distribution,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// As a `[1, z_dim]` row.
    pub fn to_row(&self) -> Tensor {
        Tensor::new(vec![1, self.values.len()], self.values.clone()).expect("non-empty latent")
    }
}
