use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::autodiff::{Graph, Tensor, Var};

/// Named learnable tensors of one network, ordered by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamSet {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.tensors.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar weights.
    pub fn value_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.values().all(Tensor::is_finite)
    }

    /// Euclidean norm of all weights taken together.
    pub fn l2_norm(&self) -> f64 {
        self.tensors.values().map(Tensor::sum_squares).sum::<f64>().sqrt()
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ParamSet {
        ParamSet {
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.map(&f))).collect(),
        }
    }

    /// Registers every tensor as a trainable parameter of `g`.
    pub fn bind(&self, g: &mut Graph) -> Result<Bound, ModelError> {
        let mut vars = BTreeMap::new();
        for (k, v) in &self.tensors {
            vars.insert(k.clone(), g.param(k.clone(), v.clone())?);
        }
        Ok(Bound { vars })
    }

    /// Adds every tensor to `g` as a constant: the network is frozen.
    pub fn bind_frozen(&self, g: &mut Graph) -> Bound {
        Bound {
            vars: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), g.constant(v.clone())))
                .collect(),
        }
    }
}

/// Graph handles for a [`ParamSet`].
#[derive(Clone, Debug)]
pub struct Bound {
    vars: BTreeMap<String, Var>,
}

impl Bound {
    pub fn get(&self, name: &str) -> Result<Var, ModelError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::MissingParameter(name.to_string()))
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.vars.values().copied()
    }

    /// Constant copies of every handle; gradients stop here.
    pub fn detached(&self, g: &mut Graph) -> Bound {
        Bound {
            vars: self.vars.iter().map(|(k, &v)| (k.clone(), g.detach(v))).collect(),
        }
    }
}

/// Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)).
pub(crate) fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.random_range(-s..s)).collect();
    Tensor::new(vec![fan_in, fan_out], data).expect("glorot shape")
}

/// Affine map `x W + b` with `W: [input, output]`, `b: [1, output]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub name: String,
    pub input: usize,
    pub output: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct DenseVars {
    pub weight: Var,
    pub bias: Var,
}

impl Dense {
    pub fn new(name: impl Into<String>, input: usize, output: usize) -> Self {
        Self {
            name: name.into(),
            input,
            output,
        }
    }

    fn weight_name(&self) -> String {
        format!("{}.weight", self.name)
    }

    fn bias_name(&self) -> String {
        format!("{}.bias", self.name)
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        vec![
            (self.weight_name(), vec![self.input, self.output]),
            (self.bias_name(), vec![1, self.output]),
        ]
    }

    pub fn init(&self, rng: &mut impl Rng, params: &mut ParamSet) {
        params.insert(self.weight_name(), glorot(rng, self.input, self.output));
        params.insert(self.bias_name(), Tensor::zeros(&[1, self.output]));
    }

    pub fn init_zeros(&self, params: &mut ParamSet) {
        params.insert(self.weight_name(), Tensor::zeros(&[self.input, self.output]));
        params.insert(self.bias_name(), Tensor::zeros(&[1, self.output]));
    }

    pub fn vars(&self, bound: &Bound) -> Result<DenseVars, ModelError> {
        Ok(DenseVars {
            weight: bound.get(&self.weight_name())?,
            bias: bound.get(&self.bias_name())?,
        })
    }

    pub fn forward(g: &mut Graph, vars: DenseVars, x: Var) -> Result<Var, ModelError> {
        let xw = g.matmul(x, vars.weight)?;
        Ok(g.add_row(xw, vars.bias)?)
    }
}
