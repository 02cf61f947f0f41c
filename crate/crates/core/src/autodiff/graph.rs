use std::collections::BTreeMap;

use super::kernels;
use super::{AutodiffError, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Leaf {
    Param,
    Input,
    Constant,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf(Leaf),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    MatMul(Var, Var),
    Transpose(Var),
    Concat(Vec<Var>),
    Slice { input: Var, start: usize },
    Pad { input: Var, start: usize },
    Sum(Var),
    BroadcastTo(Var),
    SumTo(Var),
    Sqrt(Var),
    Square(Var),
    Abs(Var),
    MaxConst(Var, f64),
    Log(Var),
    Sigmoid(Var),
    Tanh(Var),
    LeakyRelu(Var, f64),
    Norm(Var),
    Recip(Var),
    Pow(Var, f64),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf(Leaf::Param) => "param",
            Op::Leaf(Leaf::Input) => "input",
            Op::Leaf(Leaf::Constant) => "constant",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::MatMul(..) => "matmul",
            Op::Transpose(..) => "transpose",
            Op::Concat(..) => "concat",
            Op::Slice { .. } => "slice",
            Op::Pad { .. } => "pad",
            Op::Sum(..) => "sum",
            Op::BroadcastTo(..) => "broadcast_to",
            Op::SumTo(..) => "sum_to",
            Op::Sqrt(..) => "sqrt",
            Op::Square(..) => "square",
            Op::Abs(..) => "abs",
            Op::MaxConst(..) => "max_const",
            Op::Log(..) => "log",
            Op::Sigmoid(..) => "sigmoid",
            Op::Tanh(..) => "tanh",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Norm(..) => "norm",
            Op::Recip(..) => "recip",
            Op::Pow(..) => "pow",
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients keyed by parameter name, one entry per registered parameter.
pub type GradientMap = BTreeMap<String, Tensor>;

/// Append-only computation graph; node order is a topological order.
///
/// Every backward rule is written in terms of graph operations, so when a
/// graph is built with [`Graph::with_second_order`] the gradients returned
/// by [`Graph::input_gradient`] are ordinary nodes that can themselves be
/// differentiated.
#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: BTreeMap<String, Var>,
    second_order: bool,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_second_order() -> Self {
        Self {
            second_order: true,
            ..Self::default()
        }
    }

    pub fn second_order(&self) -> bool {
        self.second_order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn scalar_value(&self, v: Var) -> Result<f64, AutodiffError> {
        self.value(v).item()
    }

    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.name()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// First node (in evaluation order) holding a NaN or Inf value.
    pub fn first_non_finite(&self) -> Option<(Var, &'static str)> {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, n)| !n.value.is_finite())
            .map(|(i, n)| (Var(i), n.op.name()))
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn unary(&mut self, op: Op, input: Var, value: Tensor) -> Var {
        let rg = self.requires_grad(input);
        self.push(op, value, rg)
    }

    // ---- leaves ----------------------------------------------------------

    /// Registers a named trainable parameter.
    pub fn param(&mut self, name: impl Into<String>, value: Tensor) -> Result<Var, AutodiffError> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(AutodiffError::DuplicateParameter(name));
        }
        let v = self.push(Op::Leaf(Leaf::Param), value, true);
        self.params.insert(name, v);
        Ok(v)
    }

    /// Leaf whose gradient can be requested (e.g. the interpolated critic input).
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf(Leaf::Input), value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Op::Leaf(Leaf::Constant), value, false)
    }

    /// Constant copy of `v`: gradients never flow through the result.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    pub fn param_var(&self, name: &str) -> Option<Var> {
        self.params.get(name).copied()
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    // ---- primitives ------------------------------------------------------

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = kernels::zip_same("add", self.value(a), self.value(b), |x, y| x + y)?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::Add(a, b), value, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = kernels::zip_same("sub", self.value(a), self.value(b), |x, y| x - y)?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::Sub(a, b), value, rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = kernels::zip_same("mul", self.value(a), self.value(b), |x, y| x * y)?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::Mul(a, b), value, rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x * c);
        self.unary(Op::Scale(a, c), a, value)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x + c);
        self.unary(Op::AddScalar(a), a, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let value = kernels::matmul(self.value(a), self.value(b))?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var, AutodiffError> {
        let value = kernels::transpose(self.value(a))?;
        Ok(self.unary(Op::Transpose(a), a, value))
    }

    /// Concatenation along the last axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
        let value = kernels::concat_last(&tensors)?;
        let rg = parts.iter().any(|&p| self.requires_grad(p));
        Ok(self.push(Op::Concat(parts.to_vec()), value, rg))
    }

    /// Half-open range `[start, end)` of the last axis.
    pub fn slice(&mut self, a: Var, start: usize, end: usize) -> Result<Var, AutodiffError> {
        let value = kernels::slice_last(self.value(a), start, end)?;
        Ok(self.unary(Op::Slice { input: a, start }, a, value))
    }

    /// Zero-pads the last axis to width `total`, placing `a` at offset `start`.
    pub fn pad(&mut self, a: Var, start: usize, total: usize) -> Result<Var, AutodiffError> {
        let value = kernels::pad_last(self.value(a), start, total)?;
        Ok(self.unary(Op::Pad { input: a, start }, a, value))
    }

    /// Sum of all elements, as a scalar of shape `[]`.
    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).data().iter().sum();
        self.unary(Op::Sum(a), a, Tensor::scalar(s))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Repeats `a` along axes of size 1 (or missing leading axes) to `shape`.
    pub fn broadcast_to(&mut self, a: Var, shape: &[usize]) -> Result<Var, AutodiffError> {
        let value = kernels::broadcast_to(self.value(a), shape)?;
        Ok(self.unary(Op::BroadcastTo(a), a, value))
    }

    /// Sums `a` down to `shape`, the adjoint of [`Graph::broadcast_to`].
    pub fn sum_to(&mut self, a: Var, shape: &[usize]) -> Result<Var, AutodiffError> {
        let value = kernels::sum_to(self.value(a), shape)?;
        Ok(self.unary(Op::SumTo(a), a, value))
    }

    /// Adds a `[1, n]` row to every row of a `[b, n]` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, AutodiffError> {
        let shape = self.shape(a).to_vec();
        let expanded = self.broadcast_to(row, &shape)?;
        self.add(a, expanded)
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var, AutodiffError> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| x < 0.0) {
            return Err(AutodiffError::Domain {
                op: "sqrt",
                detail: format!("negative input {bad}"),
            });
        }
        let value = self.value(a).map(f64::sqrt);
        Ok(self.unary(Op::Sqrt(a), a, value))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x * x);
        self.unary(Op::Square(a), a, value)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::abs);
        self.unary(Op::Abs(a), a, value)
    }

    /// Elementwise `max(a, c)` against a constant.
    pub fn max_const(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x.max(c));
        self.unary(Op::MaxConst(a, c), a, value)
    }

    /// Elementwise `min(a, c)`, built from `max_const`.
    pub fn min_const(&mut self, a: Var, c: f64) -> Var {
        let n = self.neg(a);
        let m = self.max_const(n, -c);
        self.neg(m)
    }

    pub fn log(&mut self, a: Var) -> Result<Var, AutodiffError> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| !(x > 0.0)) {
            return Err(AutodiffError::Domain {
                op: "log",
                detail: format!("non-positive input {bad}"),
            });
        }
        let value = self.value(a).map(f64::ln);
        Ok(self.unary(Op::Log(a), a, value))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(kernels::sigmoid);
        self.unary(Op::Sigmoid(a), a, value)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::tanh);
        self.unary(Op::Tanh(a), a, value)
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let value = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.unary(Op::LeakyRelu(a, slope), a, value)
    }

    /// Euclidean norm over all elements, as a scalar of shape `[]`.
    pub fn norm(&mut self, a: Var) -> Var {
        let n = self.value(a).sum_squares().sqrt();
        self.unary(Op::Norm(a), a, Tensor::scalar(n))
    }

    /// Elementwise `1/a`, with `1/0 := 0`.
    pub fn recip(&mut self, a: Var) -> Var {
        let value = self.value(a).map(kernels::recip_or_zero);
        self.unary(Op::Recip(a), a, value)
    }

    /// Elementwise `a^p` for non-negative `a`.
    pub fn pow(&mut self, a: Var, p: f64) -> Result<Var, AutodiffError> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| x < 0.0) {
            return Err(AutodiffError::Domain {
                op: "pow",
                detail: format!("negative base {bad}"),
            });
        }
        let value = self.value(a).map(|x| kernels::pow_nonneg(x, p));
        Ok(self.unary(Op::Pow(a, p), a, value))
    }

    // ---- differentiation -------------------------------------------------

    /// Builds adjoint nodes for every ancestor of `root`. Returns one entry per
    /// node index up to and including `root`.
    fn adjoints(&mut self, root: Var) -> Result<Vec<Option<Var>>, AutodiffError> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return Err(AutodiffError::NonScalar {
                shape: root_value.shape().to_vec(),
            });
        }
        let seed = Tensor::ones(root_value.shape());
        let mut adj: Vec<Option<Var>> = vec![None; root.0 + 1];
        if !self.requires_grad(root) {
            return Ok(adj);
        }
        adj[root.0] = Some(self.constant(seed));
        for i in (0..=root.0).rev() {
            let Some(g) = adj[i] else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            let op = self.nodes[i].op.clone();
            for (input, contrib) in self.vjp(Var(i), &op, g)? {
                adj[input.0] = Some(match adj[input.0] {
                    Some(prev) => self.add(prev, contrib)?,
                    None => contrib,
                });
            }
        }
        Ok(adj)
    }

    /// Gradient contributions of node `out` (with adjoint `g`) to its inputs
    /// that require gradients.
    fn vjp(&mut self, out: Var, op: &Op, g: Var) -> Result<Vec<(Var, Var)>, AutodiffError> {
        let mut res = Vec::with_capacity(2);
        let wants = |s: &Self, v: Var| s.requires_grad(v);
        match *op {
            Op::Leaf(_) => {}
            Op::Add(a, b) => {
                if wants(self, a) {
                    res.push((a, g));
                }
                if wants(self, b) {
                    res.push((b, g));
                }
            }
            Op::Sub(a, b) => {
                if wants(self, a) {
                    res.push((a, g));
                }
                if wants(self, b) {
                    let n = self.neg(g);
                    res.push((b, n));
                }
            }
            Op::Mul(a, b) => {
                if wants(self, a) {
                    let c = self.mul(g, b)?;
                    res.push((a, c));
                }
                if wants(self, b) {
                    let c = self.mul(g, a)?;
                    res.push((b, c));
                }
            }
            Op::Scale(a, c) => {
                let s = self.scale(g, c);
                res.push((a, s));
            }
            Op::AddScalar(a) => res.push((a, g)),
            Op::MatMul(a, b) => {
                if wants(self, a) {
                    let bt = self.transpose(b)?;
                    let c = self.matmul(g, bt)?;
                    res.push((a, c));
                }
                if wants(self, b) {
                    let at = self.transpose(a)?;
                    let c = self.matmul(at, g)?;
                    res.push((b, c));
                }
            }
            Op::Transpose(a) => {
                let t = self.transpose(g)?;
                res.push((a, t));
            }
            Op::Concat(ref parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).last_dim();
                    if wants(self, p) {
                        let s = self.slice(g, offset, offset + w)?;
                        res.push((p, s));
                    }
                    offset += w;
                }
            }
            Op::Slice { input, start, .. } => {
                let total = self.value(input).last_dim();
                let p = self.pad(g, start, total)?;
                res.push((input, p));
            }
            Op::Pad { input, start, .. } => {
                let w = self.value(input).last_dim();
                let s = self.slice(g, start, start + w)?;
                res.push((input, s));
            }
            Op::Sum(a) => {
                let shape = self.shape(a).to_vec();
                let b = self.broadcast_to(g, &shape)?;
                res.push((a, b));
            }
            Op::BroadcastTo(a) => {
                let shape = self.shape(a).to_vec();
                let s = self.sum_to(g, &shape)?;
                res.push((a, s));
            }
            Op::SumTo(a) => {
                let shape = self.shape(a).to_vec();
                let b = self.broadcast_to(g, &shape)?;
                res.push((a, b));
            }
            Op::Sqrt(a) => {
                // d sqrt(a) = 1 / (2 sqrt(a)); zero at a == 0 by the recip convention.
                let r = self.recip(out);
                let h = self.scale(r, 0.5);
                let c = self.mul(g, h)?;
                res.push((a, c));
            }
            Op::Square(a) => {
                let two_a = self.scale(a, 2.0);
                let c = self.mul(g, two_a)?;
                res.push((a, c));
            }
            Op::Abs(a) => {
                let sign = self.value(a).map(|x| {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                });
                let s = self.constant(sign);
                let c = self.mul(g, s)?;
                res.push((a, c));
            }
            Op::MaxConst(a, k) => {
                let mask = self.value(a).map(|x| if x > k { 1.0 } else { 0.0 });
                let m = self.constant(mask);
                let c = self.mul(g, m)?;
                res.push((a, c));
            }
            Op::Log(a) => {
                let r = self.recip(a);
                let c = self.mul(g, r)?;
                res.push((a, c));
            }
            Op::Sigmoid(a) => {
                let neg = self.neg(out);
                let one_minus = self.add_scalar(neg, 1.0);
                let d = self.mul(out, one_minus)?;
                let c = self.mul(g, d)?;
                res.push((a, c));
            }
            Op::Tanh(a) => {
                let sq = self.square(out);
                let neg = self.neg(sq);
                let d = self.add_scalar(neg, 1.0);
                let c = self.mul(g, d)?;
                res.push((a, c));
            }
            Op::LeakyRelu(a, slope) => {
                let mask = self.value(a).map(|x| if x > 0.0 { 1.0 } else { slope });
                let m = self.constant(mask);
                let c = self.mul(g, m)?;
                res.push((a, c));
            }
            Op::Norm(a) => {
                let r = self.recip(out);
                let gr = self.mul(g, r)?;
                let shape = self.shape(a).to_vec();
                let b = self.broadcast_to(gr, &shape)?;
                let c = self.mul(b, a)?;
                res.push((a, c));
            }
            Op::Recip(a) => {
                let sq = self.square(out);
                let neg = self.neg(sq);
                let c = self.mul(g, neg)?;
                res.push((a, c));
            }
            Op::Pow(a, p) => {
                let pm = self.pow(a, p - 1.0)?;
                let d = self.scale(pm, p);
                let c = self.mul(g, d)?;
                res.push((a, c));
            }
        }
        Ok(res)
    }

    /// Gradient of scalar `root` with respect to every registered parameter.
    ///
    /// Parameters that `root` does not depend on get zero tensors. Nodes
    /// created while differentiating are discarded afterwards.
    pub fn backward(&mut self, root: Var) -> Result<GradientMap, AutodiffError> {
        let mark = self.nodes.len();
        let adj = self.adjoints(root)?;
        let mut grads = GradientMap::new();
        for (name, &v) in &self.params {
            let g = match adj.get(v.0).copied().flatten() {
                Some(gv) => self.value(gv).clone(),
                None => Tensor::zeros(self.shape(v)),
            };
            grads.insert(name.clone(), g);
        }
        self.nodes.truncate(mark);
        Ok(grads)
    }

    /// Gradient of scalar `root` with respect to arbitrary nodes, as values.
    pub fn gradients_wrt(&mut self, root: Var, wrt: &[Var]) -> Result<Vec<Tensor>, AutodiffError> {
        let mark = self.nodes.len();
        let adj = self.adjoints(root)?;
        let out = wrt
            .iter()
            .map(|&v| match adj.get(v.0).copied().flatten() {
                Some(gv) => self.value(gv).clone(),
                None => Tensor::zeros(self.shape(v)),
            })
            .collect();
        self.nodes.truncate(mark);
        Ok(out)
    }

    /// Differentiable gradient of `root` with respect to `wrt`.
    ///
    /// The result is a graph node; losses built on top of it can be
    /// differentiated again with respect to parameters.
    pub fn input_gradient(&mut self, root: Var, wrt: Var) -> Result<Var, AutodiffError> {
        if !self.second_order {
            return Err(AutodiffError::SecondOrderDisabled);
        }
        let adj = self.adjoints(root)?;
        match adj.get(wrt.0).copied().flatten() {
            Some(g) => Ok(g),
            None => {
                let zeros = Tensor::zeros(self.shape(wrt));
                Ok(self.constant(zeros))
            }
        }
    }
}
