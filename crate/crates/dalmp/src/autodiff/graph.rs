//! Append-only computation graph with reverse-mode differentiation.
//!
//! Nodes are appended during the forward pass, so every parent index is
//! smaller than its child's and a reverse sweep over the node list visits
//! the graph in reverse topological order. Gradients accumulate: calling
//! [`Graph::backward`] twice without [`Graph::zero_grad`] doubles them.

use super::tensor::Tensor;
use super::AutodiffError;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

/// The primitive kinds a graph node can be produced by.
///
/// Shape-bearing variants carry their own configuration; everything else is
/// fully determined by the input shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// Elementwise sum of two same-shape tensors.
    Add,
    /// Elementwise difference of two same-shape tensors.
    Sub,
    /// Elementwise (Hadamard) product of two same-shape tensors.
    Mul,
    /// Rank-2 matrix product `[m,k] x [k,n] -> [m,n]`.
    MatMul,
    /// Adds a rank-1 bias to every row of a rank-2 tensor.
    BiasAdd,
    Relu,
    Sigmoid,
    Tanh,
    /// Elementwise absolute value; subgradient at 0 is 0.
    Abs,
    /// Sum of all elements, producing a scalar.
    Sum,
    /// Mean of all elements, producing a scalar.
    Mean,
    /// 1D convolution over the time axis of a `[batch, time, c_in]` input
    /// with a `[width, c_in, c_out]` kernel and `[c_out]` bias.
    /// Stride 1 with "same" zero padding: output length equals input length.
    Conv1d,
    /// Concatenation of two tensors along the last axis.
    ConcatLast,
    /// Slice `[start, start+len)` of the last axis.
    SliceLast { start: usize, len: usize },
    /// Reinterpret data under a new shape with the same element count.
    Reshape { shape: Vec<usize> },
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Add => "add",
            Primitive::Sub => "sub",
            Primitive::Mul => "mul",
            Primitive::MatMul => "matmul",
            Primitive::BiasAdd => "bias_add",
            Primitive::Relu => "relu",
            Primitive::Sigmoid => "sigmoid",
            Primitive::Tanh => "tanh",
            Primitive::Abs => "abs",
            Primitive::Sum => "sum",
            Primitive::Mean => "mean",
            Primitive::Conv1d => "conv1d",
            Primitive::ConcatLast => "concat_last",
            Primitive::SliceLast { .. } => "slice_last",
            Primitive::Reshape { .. } => "reshape",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Primitive::Add
            | Primitive::Sub
            | Primitive::Mul
            | Primitive::MatMul
            | Primitive::BiasAdd
            | Primitive::ConcatLast => 2,
            Primitive::Conv1d => 3,
            _ => 1,
        }
    }
}

enum Op {
    Leaf,
    Prim {
        prim: Primitive,
        inputs: Vec<NodeId>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

/// A single-use computation graph: insert leaves, apply primitives, call
/// [`Graph::backward`] on a scalar loss, then read gradients of the leaves.
///
/// Gradient storage is materialized lazily: a node that has never received
/// a contribution reads back as zeros without ever allocating.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Inserts a leaf node (input or parameter).
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
        });
        self.grads.push(None);
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// The accumulated gradient of a node (zeros if backward never reached it).
    pub fn grad(&self, id: NodeId) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(self.nodes[id.0].value.shape()),
        }
    }

    /// Adds a node's accumulated gradient into `out` (no-op if it has none).
    pub fn add_grad_into(&self, id: NodeId, out: &mut [f64]) {
        if let Some(g) = &self.grads[id.0] {
            for (o, &v) in out.iter_mut().zip(g.data()) {
                *o += v;
            }
        }
    }

    /// Resets every gradient in the graph to zero.
    pub fn zero_grad(&mut self) {
        for g in &mut self.grads {
            *g = None;
        }
    }

    /// Applies a forward primitive to the given inputs, appending the result.
    pub fn apply(&mut self, prim: Primitive, inputs: &[NodeId]) -> Result<NodeId, AutodiffError> {
        if inputs.len() != prim.arity() {
            return Err(AutodiffError::Arity {
                op: prim.name(),
                expected: prim.arity(),
                got: inputs.len(),
            });
        }
        let value = self.forward(&prim, inputs)?;
        self.nodes.push(Node {
            value,
            op: Op::Prim {
                prim,
                inputs: inputs.to_vec(),
            },
        });
        self.grads.push(None);
        Ok(NodeId(self.nodes.len() - 1))
    }

    // Convenience wrappers over `apply`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Add, &[a, b])
    }
    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Sub, &[a, b])
    }
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Mul, &[a, b])
    }
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::MatMul, &[a, b])
    }
    pub fn bias_add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::BiasAdd, &[a, b])
    }
    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Relu, &[a])
    }
    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Sigmoid, &[a])
    }
    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Tanh, &[a])
    }
    pub fn abs(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Abs, &[a])
    }
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Sum, &[a])
    }
    pub fn mean(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Mean, &[a])
    }
    pub fn conv1d(
        &mut self,
        input: NodeId,
        kernel: NodeId,
        bias: NodeId,
    ) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::Conv1d, &[input, kernel, bias])
    }
    pub fn concat_last(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::ConcatLast, &[a, b])
    }
    pub fn slice_last(
        &mut self,
        a: NodeId,
        start: usize,
        len: usize,
    ) -> Result<NodeId, AutodiffError> {
        self.apply(Primitive::SliceLast { start, len }, &[a])
    }
    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId, AutodiffError> {
        self.apply(
            Primitive::Reshape {
                shape: shape.to_vec(),
            },
            &[a],
        )
    }

    /// Mean absolute error between two same-shape tensors, as a scalar node.
    pub fn mae(&mut self, prediction: NodeId, target: NodeId) -> Result<NodeId, AutodiffError> {
        let d = self.sub(prediction, target)?;
        let a = self.abs(d)?;
        self.mean(a)
    }

    fn forward(&self, prim: &Primitive, inputs: &[NodeId]) -> Result<Tensor, AutodiffError> {
        let shape_err = |lhs: &[usize], rhs: &[usize]| AutodiffError::ShapeMismatch {
            op: prim.name(),
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
        };
        match prim {
            Primitive::Add | Primitive::Sub | Primitive::Mul => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                if a.shape() != b.shape() {
                    return Err(shape_err(a.shape(), b.shape()));
                }
                let f: fn(f64, f64) -> f64 = match prim {
                    Primitive::Add => |x, y| x + y,
                    Primitive::Sub => |x, y| x - y,
                    _ => |x, y| x * y,
                };
                let data = a
                    .data()
                    .iter()
                    .zip(b.data())
                    .map(|(&x, &y)| f(x, y))
                    .collect();
                Tensor::new(a.shape().to_vec(), data)
            }
            Primitive::MatMul => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                if a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0] {
                    return Err(shape_err(a.shape(), b.shape()));
                }
                let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
                let mut out = vec![0.0; m * n];
                mm_nn(a.data(), b.data(), &mut out, m, k, n);
                Tensor::new(vec![m, n], out)
            }
            Primitive::BiasAdd => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                if a.rank() != 2 || b.rank() != 1 || a.shape()[1] != b.shape()[0] {
                    return Err(shape_err(a.shape(), b.shape()));
                }
                let n = b.len();
                let data = a
                    .data()
                    .chunks(n)
                    .flat_map(|row| row.iter().zip(b.data()).map(|(&x, &y)| x + y))
                    .collect();
                Tensor::new(a.shape().to_vec(), data)
            }
            Primitive::Relu => Ok(map_unary(self.value(inputs[0]), |x| x.max(0.0))),
            Primitive::Sigmoid => Ok(map_unary(self.value(inputs[0]), sigmoid)),
            Primitive::Tanh => Ok(map_unary(self.value(inputs[0]), f64::tanh)),
            Primitive::Abs => Ok(map_unary(self.value(inputs[0]), f64::abs)),
            Primitive::Sum => {
                let a = self.value(inputs[0]);
                Ok(Tensor::scalar(a.data().iter().sum()))
            }
            Primitive::Mean => {
                let a = self.value(inputs[0]);
                Ok(Tensor::scalar(
                    a.data().iter().sum::<f64>() / a.len() as f64,
                ))
            }
            Primitive::Conv1d => {
                let (x, k, b) = (
                    self.value(inputs[0]),
                    self.value(inputs[1]),
                    self.value(inputs[2]),
                );
                if x.rank() != 3 || k.rank() != 3 {
                    return Err(shape_err(x.shape(), k.shape()));
                }
                let (_, time, c_in) = dims3(x.shape());
                let (width, kc_in, c_out) = dims3(k.shape());
                if kc_in != c_in || width > time {
                    return Err(shape_err(x.shape(), k.shape()));
                }
                if b.rank() != 1 || b.shape()[0] != c_out {
                    return Err(shape_err(k.shape(), b.shape()));
                }
                Ok(conv1d_forward(x, k, b))
            }
            Primitive::ConcatLast => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                if a.rank() != b.rank()
                    || a.shape()[..a.rank() - 1] != b.shape()[..b.rank() - 1]
                {
                    return Err(shape_err(a.shape(), b.shape()));
                }
                let la = *a.shape().last().unwrap();
                let lb = *b.shape().last().unwrap();
                let rows = a.len() / la;
                let mut data = Vec::with_capacity(a.len() + b.len());
                for r in 0..rows {
                    data.extend_from_slice(&a.data()[r * la..(r + 1) * la]);
                    data.extend_from_slice(&b.data()[r * lb..(r + 1) * lb]);
                }
                let mut shape = a.shape().to_vec();
                *shape.last_mut().unwrap() = la + lb;
                Tensor::new(shape, data)
            }
            Primitive::SliceLast { start, len } => {
                let a = self.value(inputs[0]);
                let last = *a.shape().last().unwrap();
                if *len == 0 || start + len > last {
                    return Err(AutodiffError::InvalidSlice {
                        start: *start,
                        len: *len,
                        axis_len: last,
                    });
                }
                let rows = a.len() / last;
                let mut data = Vec::with_capacity(rows * len);
                for r in 0..rows {
                    data.extend_from_slice(&a.data()[r * last + start..r * last + start + len]);
                }
                let mut shape = a.shape().to_vec();
                *shape.last_mut().unwrap() = *len;
                Tensor::new(shape, data)
            }
            Primitive::Reshape { shape } => {
                let a = self.value(inputs[0]);
                a.reshaped(shape)
            }
        }
    }

    /// Accumulates `d loss / d node` into every node reachable from `loss`.
    ///
    /// `loss` must be a scalar (shape `[1]`). Unreachable nodes keep their
    /// current gradient.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), AutodiffError> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(AutodiffError::NonScalarLoss {
                shape: self.nodes[loss.0].value.shape().to_vec(),
            });
        }
        // Reachability mask so unreachable nodes are never touched.
        let mut reach = vec![false; self.nodes.len()];
        reach[loss.0] = true;
        for id in (0..=loss.0).rev() {
            if !reach[id] {
                continue;
            }
            if let Op::Prim { inputs, .. } = &self.nodes[id].op {
                for p in inputs {
                    reach[p.0] = true;
                }
            }
        }

        // Local upstream gradients, seeded at the loss; accumulated into
        // `self.grads` at the end so repeated backward calls add up.
        let mut local: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        local[loss.0] = Some(Tensor::scalar(1.0));

        for id in (0..=loss.0).rev() {
            if !reach[id] {
                continue;
            }
            let g_out = match local[id].take() {
                Some(g) => g,
                None => continue, // reachable only through zero-grad paths
            };
            if let Op::Prim { prim, inputs } = &self.nodes[id].op {
                let prim = prim.clone();
                let inputs = inputs.clone();
                self.propagate(&prim, &inputs, id, &g_out, &mut local);
            }
            match &mut self.grads[id] {
                Some(acc) => acc.add_assign(&g_out),
                slot @ None => *slot = Some(g_out),
            }
        }
        Ok(())
    }

    fn propagate(
        &self,
        prim: &Primitive,
        inputs: &[NodeId],
        out_id: usize,
        g: &Tensor,
        local: &mut [Option<Tensor>],
    ) {
        let mut bump = |id: NodeId, contrib: Tensor| {
            match &mut local[id.0] {
                Some(t) => t.add_assign(&contrib),
                slot @ None => *slot = Some(contrib),
            };
        };
        match prim {
            Primitive::Add => {
                bump(inputs[0], g.clone());
                bump(inputs[1], g.clone());
            }
            Primitive::Sub => {
                bump(inputs[0], g.clone());
                let mut neg = g.clone();
                neg.data_mut().iter_mut().for_each(|x| *x = -*x);
                bump(inputs[1], neg);
            }
            Primitive::Mul => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                bump(inputs[0], zip_mul(g, b));
                bump(inputs[1], zip_mul(g, a));
            }
            Primitive::MatMul => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                // dA = g . B^T, dB = A^T . g
                let mut da = vec![0.0; m * k];
                mm_nt(g.data(), b.data(), &mut da, m, n, k);
                let mut db = vec![0.0; k * n];
                mm_tn(a.data(), g.data(), &mut db, m, k, n);
                bump(inputs[0], Tensor::new(vec![m, k], da).unwrap());
                bump(inputs[1], Tensor::new(vec![k, n], db).unwrap());
            }
            Primitive::BiasAdd => {
                let n = self.value(inputs[1]).len();
                let mut db = vec![0.0; n];
                for row in g.data().chunks(n) {
                    for (d, &v) in db.iter_mut().zip(row) {
                        *d += v;
                    }
                }
                bump(inputs[0], g.clone());
                bump(inputs[1], Tensor::from_vec(db));
            }
            Primitive::Relu => {
                let x = self.value(inputs[0]);
                bump(inputs[0], zip_map(g, x, |gv, xv| if xv > 0.0 { gv } else { 0.0 }));
            }
            Primitive::Sigmoid => {
                let y = &self.nodes[out_id].value;
                bump(inputs[0], zip_map(g, y, |gv, yv| gv * yv * (1.0 - yv)));
            }
            Primitive::Tanh => {
                let y = &self.nodes[out_id].value;
                bump(inputs[0], zip_map(g, y, |gv, yv| gv * (1.0 - yv * yv)));
            }
            Primitive::Abs => {
                // sign(0) = 0 keeps the L1 subgradient finite and symmetric.
                let x = self.value(inputs[0]);
                bump(inputs[0], zip_map(g, x, |gv, xv| gv * sign0(xv)));
            }
            Primitive::Sum => {
                let x = self.value(inputs[0]);
                let mut t = Tensor::zeros(x.shape());
                t.fill(g.item());
                bump(inputs[0], t);
            }
            Primitive::Mean => {
                let x = self.value(inputs[0]);
                let mut t = Tensor::zeros(x.shape());
                t.fill(g.item() / x.len() as f64);
                bump(inputs[0], t);
            }
            Primitive::Conv1d => {
                let (x, k) = (self.value(inputs[0]), self.value(inputs[1]));
                let (dx, dk, db) = conv1d_backward(x, k, g);
                bump(inputs[0], dx);
                bump(inputs[1], dk);
                bump(inputs[2], db);
            }
            Primitive::ConcatLast => {
                let (a, b) = (self.value(inputs[0]), self.value(inputs[1]));
                let la = *a.shape().last().unwrap();
                let lb = *b.shape().last().unwrap();
                let rows = a.len() / la;
                let mut da = Vec::with_capacity(a.len());
                let mut db = Vec::with_capacity(b.len());
                for r in 0..rows {
                    let row = &g.data()[r * (la + lb)..(r + 1) * (la + lb)];
                    da.extend_from_slice(&row[..la]);
                    db.extend_from_slice(&row[la..]);
                }
                bump(inputs[0], Tensor::new(a.shape().to_vec(), da).unwrap());
                bump(inputs[1], Tensor::new(b.shape().to_vec(), db).unwrap());
            }
            Primitive::SliceLast { start, len } => {
                let x = self.value(inputs[0]);
                let last = *x.shape().last().unwrap();
                let rows = x.len() / last;
                let mut dx = Tensor::zeros(x.shape());
                for r in 0..rows {
                    dx.data_mut()[r * last + start..r * last + start + len]
                        .copy_from_slice(&g.data()[r * len..(r + 1) * len]);
                }
                bump(inputs[0], dx);
            }
            Primitive::Reshape { .. } => {
                let x = self.value(inputs[0]);
                bump(inputs[0], g.reshaped(x.shape()).unwrap());
            }
        }
    }
}

fn dims3(shape: &[usize]) -> (usize, usize, usize) {
    (shape[0], shape[1], shape[2])
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn map_unary(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let data = a.data().iter().map(|&x| f(x)).collect();
    Tensor::new(a.shape().to_vec(), data).unwrap()
}

fn zip_mul(a: &Tensor, b: &Tensor) -> Tensor {
    zip_map(a, b, |x, y| x * y)
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::new(a.shape().to_vec(), data).unwrap()
}

/// `out += A . B` for row-major `A: m x k`, `B: k x n`.
fn mm_nn(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
}

/// `out += A . B^T` for `A: m x k`, `B: n x k` giving `m x n`.
fn mm_nt(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let dot: f64 = arow.iter().zip(brow).map(|(&x, &y)| x * y).sum();
            out[i * n + j] += dot;
        }
    }
}

/// `out += A^T . B` for `A: m x k`, `B: m x n` giving `k x n`.
fn mm_tn(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for p in 0..m {
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..k {
            let api = a[p * k + i];
            if api == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += api * bv;
            }
        }
    }
}

fn conv1d_forward(x: &Tensor, k: &Tensor, bias: &Tensor) -> Tensor {
    let (batch, time, c_in) = dims3(x.shape());
    let (width, _, c_out) = dims3(k.shape());
    let left = (width - 1) / 2;
    let mut out = Tensor::zeros(&[batch, time, c_out]);
    let od = out.data_mut();
    for b in 0..batch {
        for t in 0..time {
            let obase = (b * time + t) * c_out;
            od[obase..obase + c_out].copy_from_slice(bias.data());
            for j in 0..width {
                let s = t + j;
                if s < left || s - left >= time {
                    continue; // zero padding
                }
                let s = s - left;
                let xbase = (b * time + s) * c_in;
                for ci in 0..c_in {
                    let xv = x.data()[xbase + ci];
                    if xv == 0.0 {
                        continue;
                    }
                    let kbase = (j * c_in + ci) * c_out;
                    for co in 0..c_out {
                        od[obase + co] += xv * k.data()[kbase + co];
                    }
                }
            }
        }
    }
    out
}

fn conv1d_backward(x: &Tensor, k: &Tensor, g: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (batch, time, c_in) = dims3(x.shape());
    let (width, _, c_out) = dims3(k.shape());
    let left = (width - 1) / 2;
    let mut dx = Tensor::zeros(x.shape());
    let mut dk = Tensor::zeros(k.shape());
    let mut db = Tensor::zeros(&[c_out]);
    for b in 0..batch {
        for t in 0..time {
            let gbase = (b * time + t) * c_out;
            let grow = &g.data()[gbase..gbase + c_out];
            for (d, &gv) in db.data_mut().iter_mut().zip(grow) {
                *d += gv;
            }
            for j in 0..width {
                let s = t + j;
                if s < left || s - left >= time {
                    continue;
                }
                let s = s - left;
                let xbase = (b * time + s) * c_in;
                for ci in 0..c_in {
                    let kbase = (j * c_in + ci) * c_out;
                    let xv = x.data()[xbase + ci];
                    let mut acc = 0.0;
                    for co in 0..c_out {
                        let gv = grow[co];
                        acc += k.data()[kbase + co] * gv;
                        dk.data_mut()[kbase + co] += xv * gv;
                    }
                    dx.data_mut()[xbase + ci] += acc;
                }
            }
        }
    }
    (dx, dk, db)
}
