//! Tape-style computation graph. Nodes are appended in evaluation order,
//! so the tape itself is a topological order; the backward pass walks it
//! once in reverse, accumulating gradients.

use super::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Value<'p> {
    Owned(Tensor),
    Borrowed(&'p Tensor),
}

impl Value<'_> {
    fn get(&self) -> &Tensor {
        match self {
            Value::Owned(t) => t,
            Value::Borrowed(t) => t,
        }
    }
}

enum Op {
    Leaf,
    /// [m,k]x[k,n] -> [m,n], or [m,k]x[k] -> [m].
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Sum(NodeId),
    Log(NodeId),
    Softmax(NodeId),
    Clamp(NodeId, f64, f64),
    /// scale * x + offset, elementwise; only the scale matters backward.
    Affine(NodeId, f64),
    Dot(NodeId, NodeId),
    /// Sum of the given rows of a rank-2 node.
    RowsSum(NodeId, Vec<usize>),
}

struct Record<'p> {
    value: Value<'p>,
    op: Op,
}

/// Computation graph over borrowed parameter tensors and owned
/// intermediates.
pub struct Graph<'p> {
    nodes: Vec<Record<'p>>,
    params: Vec<(String, NodeId)>,
}

impl<'p> Default for Graph<'p> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p> Graph<'p> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            params: Vec::new(),
        }
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        self.nodes[id.0].value.get()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        debug_assert!(value.is_finite(), "non-finite value produced by an op");
        let id = NodeId(self.nodes.len());
        self.nodes.push(Record {
            value: Value::Owned(value),
            op,
        });
        id
    }

    /// Constant input; no gradient is tracked past it.
    pub fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Leaf)
    }

    /// Named trainable parameter. Binding the same tensor once and reusing
    /// the id accumulates gradients across all its uses.
    pub fn parameter(&mut self, name: &str, t: &'p Tensor) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Record {
            value: Value::Borrowed(t),
            op: Op::Leaf,
        });
        self.params.push((name.to_string(), id));
        id
    }

    fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
        TensorError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        }
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let out = match (ta.shape(), tb.shape()) {
            (&[m, k], &[k2, n]) if k == k2 => {
                let mut data = vec![0.0; m * n];
                for i in 0..m {
                    let arow = &ta.data()[i * k..(i + 1) * k];
                    for (p, &av) in arow.iter().enumerate() {
                        let brow = &tb.data()[p * n..(p + 1) * n];
                        let orow = &mut data[i * n..(i + 1) * n];
                        for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                            *o += av * bv;
                        }
                    }
                }
                Tensor::from_vec(&[m, n], data)
            }
            (&[m, k], &[k2]) if k == k2 => {
                let mut data = vec![0.0; m];
                let x = tb.data();
                for (i, o) in data.iter_mut().enumerate() {
                    let arow = &ta.data()[i * k..(i + 1) * k];
                    *o = arow.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                }
                Tensor::from_vec(&[m], data)
            }
            _ => return Err(Self::shape_err("matmul", ta, tb)),
        };
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Self::shape_err("add", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let out = Tensor::from_vec(ta.shape(), data);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Elementwise multiply.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(Self::shape_err("mul", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let out = Tensor::from_vec(ta.shape(), data);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Concatenate rank-1 nodes into one vector.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId, TensorError> {
        let mut data = Vec::new();
        for p in parts {
            let t = self.value(*p);
            if t.rank() != 1 {
                return Err(TensorError::ShapeMismatch {
                    op: "concat",
                    lhs: t.shape().to_vec(),
                    rhs: vec![],
                });
            }
            data.extend_from_slice(t.data());
        }
        let len = data.len();
        Ok(self.push(Tensor::from_vec(&[len], data), Op::Concat(parts.to_vec())))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let data = self.value(a).data().iter().map(|x| x.tanh()).collect();
        let out = Tensor::from_vec(self.value(a).shape(), data);
        self.push(out, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let data = self
            .value(a)
            .data()
            .iter()
            .map(|x| 1.0 / (1.0 + (-x).exp()))
            .collect();
        let out = Tensor::from_vec(self.value(a).shape(), data);
        self.push(out, Op::Sigmoid(a))
    }

    /// Sum of all elements, as a scalar node.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        let data = self.value(a).data().iter().map(|x| x.ln()).collect();
        let out = Tensor::from_vec(self.value(a).shape(), data);
        self.push(out, Op::Log(a))
    }

    /// Numerically stable softmax over a rank-1 node.
    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let max = t.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = t.data().iter().map(|x| (x - max).exp()).collect();
        let denom: f64 = exps.iter().sum();
        let data: Vec<f64> = exps.iter().map(|e| e / denom).collect();
        let out = Tensor::from_vec(t.shape(), data);
        self.push(out, Op::Softmax(a))
    }

    /// Clamp into [lo, hi]; the gradient passes through strictly inside the
    /// interval and is zero where the clamp is active.
    pub fn clamp(&mut self, a: NodeId, lo: f64, hi: f64) -> NodeId {
        let data = self
            .value(a)
            .data()
            .iter()
            .map(|x| x.clamp(lo, hi))
            .collect();
        let out = Tensor::from_vec(self.value(a).shape(), data);
        self.push(out, Op::Clamp(a, lo, hi))
    }

    /// `scale * x + offset`, elementwise.
    pub fn affine(&mut self, a: NodeId, scale: f64, offset: f64) -> NodeId {
        let data = self
            .value(a)
            .data()
            .iter()
            .map(|x| scale * x + offset)
            .collect();
        let out = Tensor::from_vec(self.value(a).shape(), data);
        self.push(out, Op::Affine(a, scale))
    }

    /// Inner product of two equal-length rank-1 nodes, as a scalar node.
    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() || ta.rank() != 1 {
            return Err(Self::shape_err("dot", ta, tb));
        }
        let s: f64 = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        Ok(self.push(Tensor::scalar(s), Op::Dot(a, b)))
    }

    /// Embedding lookup: sum of the selected rows of a rank-2 node. A
    /// single-index lookup is a plain row gather.
    pub fn rows_sum(&mut self, matrix: NodeId, rows: &[usize]) -> Result<NodeId, TensorError> {
        let t = self.value(matrix);
        if t.rank() != 2 {
            return Err(TensorError::ShapeMismatch {
                op: "rows_sum",
                lhs: t.shape().to_vec(),
                rhs: vec![],
            });
        }
        let cols = t.shape()[1];
        let mut data = vec![0.0; cols];
        for &r in rows {
            assert!(r < t.shape()[0], "row {} out of range", r);
            for (o, v) in data.iter_mut().zip(t.row(r)) {
                *o += v;
            }
        }
        Ok(self.push(
            Tensor::from_vec(&[cols], data),
            Op::RowsSum(matrix, rows.to_vec()),
        ))
    }

    /// Reverse-mode sweep from a scalar loss node. Every node gets a
    /// gradient slot; parameters not reachable from the loss end up with
    /// zero gradients.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, TensorError> {
        let loss_t = self.value(loss);
        if loss_t.len() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: loss_t.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..self.nodes.len()).rev() {
            let upstream = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            let rec = &self.nodes[idx];
            self.accumulate(rec, &upstream, &mut grads);
            grads[idx] = Some(upstream);
        }
        Ok(Gradients { by_node: grads })
    }

    fn accumulate(&self, rec: &Record<'p>, up: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut bump = |id: NodeId, delta: Tensor, graph: &Graph<'p>| {
            let slot = &mut grads[id.0];
            match slot {
                Some(g) => {
                    for (o, d) in g.data_mut().iter_mut().zip(delta.data()) {
                        *o += d;
                    }
                }
                None => {
                    debug_assert_eq!(delta.shape(), graph.value(id).shape());
                    *slot = Some(delta);
                }
            }
        };
        match &rec.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                match (ta.shape(), tb.shape()) {
                    (&[m, k], &[_, n]) if tb.rank() == 2 => {
                        // dA = dC . B^T ; dB = A^T . dC
                        let mut da = vec![0.0; m * k];
                        let mut db = vec![0.0; k * n];
                        for i in 0..m {
                            let urow = &up.data()[i * n..(i + 1) * n];
                            let arow = &ta.data()[i * k..(i + 1) * k];
                            for p in 0..k {
                                let brow = &tb.data()[p * n..(p + 1) * n];
                                da[i * k + p] +=
                                    urow.iter().zip(brow).map(|(u, b)| u * b).sum::<f64>();
                                let apv = arow[p];
                                let dbrow = &mut db[p * n..(p + 1) * n];
                                for (o, u) in dbrow.iter_mut().zip(urow) {
                                    *o += apv * u;
                                }
                            }
                        }
                        bump(*a, Tensor::from_vec(&[m, k], da), self);
                        bump(*b, Tensor::from_vec(&[k, n], db), self);
                    }
                    (&[m, k], &[_]) => {
                        // y = W x : dW = u (outer) x ; dx = W^T u
                        let x = tb.data();
                        let mut dw = vec![0.0; m * k];
                        let mut dx = vec![0.0; k];
                        for i in 0..m {
                            let u = up.data()[i];
                            let wrow = &ta.data()[i * k..(i + 1) * k];
                            let dwrow = &mut dw[i * k..(i + 1) * k];
                            for p in 0..k {
                                dwrow[p] += u * x[p];
                                dx[p] += u * wrow[p];
                            }
                        }
                        bump(*a, Tensor::from_vec(&[m, k], dw), self);
                        bump(*b, Tensor::from_vec(&[k], dx), self);
                    }
                    _ => unreachable!("validated in forward"),
                }
            }
            Op::Add(a, b) => {
                bump(*a, up.clone(), self);
                bump(*b, up.clone(), self);
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let da = up.data().iter().zip(tb.data()).map(|(u, y)| u * y).collect();
                let db = up.data().iter().zip(ta.data()).map(|(u, x)| u * x).collect();
                bump(*a, Tensor::from_vec(ta.shape(), da), self);
                bump(*b, Tensor::from_vec(tb.shape(), db), self);
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = self.value(*p).len();
                    let slice = up.data()[offset..offset + len].to_vec();
                    bump(*p, Tensor::from_vec(&[len], slice), self);
                    offset += len;
                }
            }
            Op::Tanh(a) => {
                let y = rec.value.get();
                let da = up
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(u, y)| u * (1.0 - y * y))
                    .collect();
                bump(*a, Tensor::from_vec(y.shape(), da), self);
            }
            Op::Sigmoid(a) => {
                let y = rec.value.get();
                let da = up
                    .data()
                    .iter()
                    .zip(y.data())
                    .map(|(u, y)| u * y * (1.0 - y))
                    .collect();
                bump(*a, Tensor::from_vec(y.shape(), da), self);
            }
            Op::Sum(a) => {
                let n = self.value(*a).len();
                let u = up.item();
                bump(*a, Tensor::from_vec(self.value(*a).shape(), vec![u; n]), self);
            }
            Op::Log(a) => {
                let x = self.value(*a);
                let da = up.data().iter().zip(x.data()).map(|(u, x)| u / x).collect();
                bump(*a, Tensor::from_vec(x.shape(), da), self);
            }
            Op::Softmax(a) => {
                // dx = y (.) (u - (y . u))
                let y = rec.value.get();
                let dot: f64 = y.data().iter().zip(up.data()).map(|(y, u)| y * u).sum();
                let da = y
                    .data()
                    .iter()
                    .zip(up.data())
                    .map(|(y, u)| y * (u - dot))
                    .collect();
                bump(*a, Tensor::from_vec(y.shape(), da), self);
            }
            Op::Clamp(a, lo, hi) => {
                let x = self.value(*a);
                let da = up
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(u, x)| if *x > *lo && *x < *hi { *u } else { 0.0 })
                    .collect();
                bump(*a, Tensor::from_vec(x.shape(), da), self);
            }
            Op::Affine(a, scale) => {
                let da = up.data().iter().map(|u| u * scale).collect();
                bump(*a, Tensor::from_vec(up.shape(), da), self);
            }
            Op::Dot(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let u = up.item();
                let da = tb.data().iter().map(|y| u * y).collect();
                let db = ta.data().iter().map(|x| u * x).collect();
                bump(*a, Tensor::from_vec(ta.shape(), da), self);
                bump(*b, Tensor::from_vec(tb.shape(), db), self);
            }
            Op::RowsSum(m, rows) => {
                let t = self.value(*m);
                let cols = t.shape()[1];
                let mut dm = Tensor::zeros(t.shape());
                for &r in rows {
                    let drow = &mut dm.data_mut()[r * cols..(r + 1) * cols];
                    for (o, u) in drow.iter_mut().zip(up.data()) {
                        *o += u;
                    }
                }
                bump(*m, dm, self);
            }
        }
    }
}

/// Gradient of the loss with respect to every node, indexable by the
/// parameter bindings of the graph that produced it.
pub struct Gradients {
    by_node: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn of(&self, id: NodeId) -> Option<&Tensor> {
        self.by_node[id.0].as_ref()
    }

    /// Gradients for the graph's named parameters in binding order;
    /// parameters the loss never touched get zeros.
    pub fn params(&self, graph: &Graph<'_>) -> Vec<(String, Tensor)> {
        graph
            .params
            .iter()
            .map(|(name, id)| {
                let g = self.by_node[id.0]
                    .clone()
                    .unwrap_or_else(|| Tensor::zeros(graph.value(*id).shape()));
                (name.clone(), g)
            })
            .collect()
    }
}
