use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{glorot, Bound, ParamSet};
use super::ModelError;
use crate::autodiff::{Graph, Tensor, Var};

/// Gated recurrent unit with update, reset and candidate gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    pub name: String,
    pub input: usize,
    pub hidden: usize,
}

/// Graph handles of one cell. `w_*` act on the input, `u_*` on the state.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub w_u: Var,
    pub u_u: Var,
    pub b_u: Var,
    pub w_r: Var,
    pub u_r: Var,
    pub b_r: Var,
    pub w_h: Var,
    pub u_h: Var,
    pub b_h: Var,
}

const GATES: [&str; 3] = ["u", "r", "h"];

impl GruCell {
    pub fn new(name: impl Into<String>, input: usize, hidden: usize) -> Self {
        Self {
            name: name.into(),
            input,
            hidden,
        }
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::with_capacity(9);
        for gate in GATES {
            out.push((format!("{}.w_{gate}", self.name), vec![self.input, self.hidden]));
            out.push((format!("{}.u_{gate}", self.name), vec![self.hidden, self.hidden]));
            out.push((format!("{}.b_{gate}", self.name), vec![1, self.hidden]));
        }
        out
    }

    pub fn init(&self, rng: &mut impl Rng, params: &mut ParamSet) {
        for gate in GATES {
            params.insert(format!("{}.w_{gate}", self.name), glorot(rng, self.input, self.hidden));
            params.insert(format!("{}.u_{gate}", self.name), glorot(rng, self.hidden, self.hidden));
            params.insert(format!("{}.b_{gate}", self.name), Tensor::zeros(&[1, self.hidden]));
        }
    }

    pub fn vars(&self, bound: &Bound) -> Result<GruVars, ModelError> {
        let get = |k: &str| bound.get(&format!("{}.{k}", self.name));
        Ok(GruVars {
            w_u: get("w_u")?,
            u_u: get("u_u")?,
            b_u: get("b_u")?,
            w_r: get("w_r")?,
            u_r: get("u_r")?,
            b_r: get("b_r")?,
            w_h: get("w_h")?,
            u_h: get("u_h")?,
            b_h: get("b_h")?,
        })
    }

    /// One step on a batch: `x: [B, input]`, `h: [B, hidden]` to `[B, hidden]`.
    pub fn step(g: &mut Graph, v: &GruVars, x: Var, h: Var) -> Result<Var, ModelError> {
        let u = gate(g, x, h, v.w_u, v.u_u, v.b_u)?;
        let u = g.sigmoid(u);
        let r = gate(g, x, h, v.w_r, v.u_r, v.b_r)?;
        let r = g.sigmoid(r);
        let rh = g.mul(r, h)?;
        let cand = gate(g, x, rh, v.w_h, v.u_h, v.b_h)?;
        let cand = g.tanh(cand);
        // (1 - u) h + u c  ==  h + u (c - h)
        let diff = g.sub(cand, h)?;
        let step = g.mul(u, diff)?;
        Ok(g.add(h, step)?)
    }
}

fn gate(g: &mut Graph, x: Var, h: Var, w: Var, u: Var, b: Var) -> Result<Var, ModelError> {
    let a = g.matmul(x, w)?;
    let c = g.matmul(h, u)?;
    let s = g.add(a, c)?;
    Ok(g.add_row(s, b)?)
}
