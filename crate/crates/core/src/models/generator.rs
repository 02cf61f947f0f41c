use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gru::{GruCell, GruVars};
use super::params::{Bound, Dense, DenseVars, ParamSet};
use super::{expect_rows, validate_params, ModelError};
use crate::autodiff::{Graph, Tensor, Var};

/// What the output projection of each decoder step produces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseOutput {
    /// The projection is the predicted pose.
    #[default]
    Absolute,
    /// The projection is added to the step's input pose. The projection
    /// starts at zero, so an untrained model repeats the last observed pose.
    Residual,
}

impl std::str::FromStr for PoseOutput {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "absolute" => Ok(Self::Absolute),
            "residual" => Ok(Self::Residual),
            other => Err(format!("unknown pose output `{other}` (absolute|residual)")),
        }
    }
}

impl std::fmt::Display for PoseOutput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Absolute => "absolute",
            Self::Residual => "residual",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Flattened pose width, joints * 3.
    pub pose_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub z_dim: usize,
    #[serde(default)]
    pub output: PoseOutput,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (k, v) in [
            ("pose_dim", self.pose_dim),
            ("hidden", self.hidden),
            ("layers", self.layers),
            ("z_dim", self.z_dim),
        ] {
            if v == 0 {
                return Err(ModelError::Config(format!("generator {k} must be >= 1")));
            }
        }
        Ok(())
    }

    fn layer_input(&self, l: usize) -> usize {
        if l == 0 {
            self.pose_dim
        } else {
            self.hidden
        }
    }

    pub fn encoder_cell(&self, l: usize) -> GruCell {
        GruCell::new(format!("gen.enc{l}"), self.layer_input(l), self.hidden)
    }

    pub fn decoder_cell(&self, l: usize) -> GruCell {
        GruCell::new(format!("gen.dec{l}"), self.layer_input(l), self.hidden)
    }

    pub fn z_map(&self, l: usize) -> Dense {
        Dense::new(format!("gen.zmap{l}"), self.z_dim, self.hidden)
    }

    pub fn projection(&self) -> Dense {
        Dense::new("gen.out", self.hidden, self.pose_dim)
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for l in 0..self.layers {
            out.extend(self.encoder_cell(l).shapes());
            out.extend(self.decoder_cell(l).shapes());
            out.extend(self.z_map(l).shapes());
        }
        out.extend(self.projection().shapes());
        out
    }
}

/// Graph handles of a bound generator.
#[derive(Clone, Debug)]
pub struct GeneratorVars {
    pub encoder: Vec<GruVars>,
    pub decoder: Vec<GruVars>,
    pub z_maps: Vec<DenseVars>,
    pub projection: DenseVars,
}

/// Stacked GRU encoder-decoder. The latent vector is mapped per layer and
/// added to the encoder's final states to seed the decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    config: GeneratorConfig,
    params: ParamSet,
}

impl Generator {
    pub fn new(config: GeneratorConfig, rng: &mut impl Rng) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = ParamSet::new();
        for l in 0..config.layers {
            config.encoder_cell(l).init(rng, &mut params);
            config.decoder_cell(l).init(rng, &mut params);
            config.z_map(l).init(rng, &mut params);
        }
        match config.output {
            PoseOutput::Absolute => config.projection().init(rng, &mut params),
            PoseOutput::Residual => config.projection().init_zeros(&mut params),
        }
        Ok(Self { config, params })
    }

    /// Every weight and bias zero.
    pub fn zeros(config: GeneratorConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut params = ParamSet::new();
        for (name, shape) in config.shapes() {
            params.insert(name, Tensor::zeros(&shape));
        }
        Ok(Self { config, params })
    }

    pub fn from_params(config: GeneratorConfig, params: ParamSet) -> Result<Self, ModelError> {
        config.validate()?;
        validate_params(&params, &config.shapes())?;
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    /// Callers must keep shapes unchanged.
    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn bind(&self, g: &mut Graph) -> Result<GeneratorVars, ModelError> {
        let bound = self.params.bind(g)?;
        self.vars(&bound)
    }

    pub fn bind_frozen(&self, g: &mut Graph) -> Result<GeneratorVars, ModelError> {
        let bound = self.params.bind_frozen(g);
        self.vars(&bound)
    }

    pub fn vars(&self, bound: &Bound) -> Result<GeneratorVars, ModelError> {
        let c = &self.config;
        Ok(GeneratorVars {
            encoder: (0..c.layers).map(|l| c.encoder_cell(l).vars(bound)).collect::<Result<_, _>>()?,
            decoder: (0..c.layers).map(|l| c.decoder_cell(l).vars(bound)).collect::<Result<_, _>>()?,
            z_maps: (0..c.layers).map(|l| c.z_map(l).vars(bound)).collect::<Result<_, _>>()?,
            projection: c.projection().vars(bound)?,
        })
    }

    /// Runs the encoder over `prior` (each `[B, pose_dim]`) from zero state and
    /// returns every layer's final state, bottom first. The last entry is
    /// also the encoder's final output.
    pub fn encode(&self, g: &mut Graph, v: &GeneratorVars, prior: &[Var]) -> Result<Vec<Var>, ModelError> {
        let first = prior
            .first()
            .ok_or_else(|| ModelError::Shape("prior must contain at least one pose".into()))?;
        let batch = expect_rows(g, *first, self.config.pose_dim, "prior pose")?;
        let zero = g.constant(Tensor::zeros(&[batch, self.config.hidden]));
        let mut states = vec![zero; self.config.layers];
        for (t, &pose) in prior.iter().enumerate() {
            if expect_rows(g, pose, self.config.pose_dim, "prior pose")? != batch {
                return Err(ModelError::Shape(format!("prior pose {t}: batch size differs")));
            }
            let mut input = pose;
            for (state, cell) in states.iter_mut().zip(&v.encoder) {
                *state = GruCell::step(g, cell, input, *state)?;
                input = *state;
            }
        }
        Ok(states)
    }

    /// Adds each layer's mapped latent `z: [B, z_dim]` to the matching state.
    pub fn inject_z(&self, g: &mut Graph, v: &GeneratorVars, states: &[Var], z: Var) -> Result<Vec<Var>, ModelError> {
        if states.len() != self.config.layers {
            return Err(ModelError::Shape(format!(
                "{} states for {} layers",
                states.len(),
                self.config.layers
            )));
        }
        let zb = expect_rows(g, z, self.config.z_dim, "latent")?;
        let sb = expect_rows(g, states[0], self.config.hidden, "state")?;
        if zb != sb {
            return Err(ModelError::Shape(format!("latent batch {zb}, state batch {sb}")));
        }
        states
            .iter()
            .zip(&v.z_maps)
            .map(|(&s, &map)| {
                let mapped = Dense::forward(g, map, z)?;
                Ok(g.add(s, mapped)?)
            })
            .collect()
    }

    /// Autoregressive rollout of `n` poses starting from `first_input`.
    pub fn decode(
        &self,
        g: &mut Graph,
        v: &GeneratorVars,
        init: &[Var],
        first_input: Var,
        n: usize,
    ) -> Result<Vec<Var>, ModelError> {
        if n == 0 {
            return Err(ModelError::Shape("prediction length must be >= 1".into()));
        }
        if init.len() != self.config.layers {
            return Err(ModelError::Shape(format!(
                "{} initial states for {} layers",
                init.len(),
                self.config.layers
            )));
        }
        expect_rows(g, first_input, self.config.pose_dim, "decoder input")?;
        let mut states = init.to_vec();
        let mut input = first_input;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = input;
            for (state, cell) in states.iter_mut().zip(&v.decoder) {
                *state = GruCell::step(g, cell, x, *state)?;
                x = *state;
            }
            let projected = Dense::forward(g, v.projection, x)?;
            let pose = match self.config.output {
                PoseOutput::Absolute => projected,
                PoseOutput::Residual => g.add(input, projected)?,
            };
            out.push(pose);
            input = pose;
        }
        Ok(out)
    }

    /// encode, inject the latent, then decode from the last observed pose.
    pub fn generate(
        &self,
        g: &mut Graph,
        v: &GeneratorVars,
        prior: &[Var],
        z: Var,
        n: usize,
    ) -> Result<Vec<Var>, ModelError> {
        let states = self.encode(g, v, prior)?;
        let init = self.inject_z(g, v, &states, z)?;
        let last = *prior.last().expect("encode checked non-empty");
        self.decode(g, v, &init, last, n)
    }

    /// Forward pass on plain tensors; no gradients are tracked.
    pub fn predict(&self, prior: &[Tensor], z: &Tensor, n: usize) -> Result<Vec<Tensor>, ModelError> {
        let mut g = Graph::new();
        let v = self.bind_frozen(&mut g)?;
        let prior: Vec<Var> = prior.iter().map(|t| g.constant(t.clone())).collect();
        let z = g.constant(z.clone());
        let out = self.generate(&mut g, &v, &prior, z, n)?;
        Ok(out.into_iter().map(|p| g.value(p).clone()).collect())
    }
}
