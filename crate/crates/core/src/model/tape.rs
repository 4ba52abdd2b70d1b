//! Array-level reverse-mode differentiation.
//!
//! Every value is a real row-major matrix. Complex signals are carried
//! "stacked": an `r × c` complex array becomes a `2r × c` real array with the
//! real parts on top and the imaginary parts below, so right-multiplication
//! by a real weight is an ordinary matrix product.

use std::rc::Rc;

use super::diffusion::{DiffusionCache, DiffusionPlan};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data does not match {rows}x{cols}");
        Tensor { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn scalar(x: f64) -> Self {
        Tensor::new(1, 1, vec![x])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Sparse row mixing: `out[r] += w · in[c]` for every `(r, c, w)`.
#[derive(Debug, Clone)]
pub struct RowMix {
    pub out_rows: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Shift(Var),
    Sqrt(Var),
    Recip(Var),
    Relu(Var),
    Tanh(Var),
    Sigmoid(Var),
    MatMul(Var, Var),
    Reshape(Var),
    SliceRows(Var, usize),
    ConcatRows(Var, Var),
    ConcatCols(Vec<Var>),
    MeanRows(Var),
    Pick(Var, usize),
    BlockLeft(Var, Var),
    Mix(Var, Rc<RowMix>),
    ComplexRelu(Var),
    Diffusion(Var, Var, Rc<DiffusionPlan>, Box<DiffusionCache>),
    SoftmaxCe(Var, Rc<Vec<usize>>, Rc<Vec<usize>>),
}

struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Index of `(i, j)` in an operand that may broadcast over rows or columns.
#[inline]
fn bidx(t: &Tensor, i: usize, j: usize) -> usize {
    let r = if t.rows == 1 { 0 } else { i };
    let c = if t.cols == 1 { 0 } else { j };
    r * t.cols + c
}

fn broadcast_shape(a: &Tensor, b: &Tensor) -> (usize, usize) {
    let dim = |x: usize, y: usize| {
        assert!(x == y || x == 1 || y == 1, "cannot broadcast {x} against {y}");
        x.max(y)
    };
    (dim(a.rows, b.rows), dim(a.cols, b.cols))
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Trainable leaf; receives a gradient.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Constant leaf; never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Same value, cut from the backward pass.
    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.value(v).clone();
        self.constant(t)
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        let (rows, cols) = broadcast_shape(ta, tb);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(ta.data[bidx(ta, i, j)], tb.data[bidx(tb, i, j)]));
            }
        }
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(Tensor::new(rows, cols, data), op, tracked)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let t = self.value(a);
        let out = Tensor::new(t.rows, t.cols, t.data.iter().map(|&x| f(x)).collect());
        let tracked = self.tracked(a);
        self.push(out, op, tracked)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, |x| s * x, Op::Scale(a, s))
    }

    /// `a + c` for a constant `c`.
    pub fn shift(&mut self, a: Var, c: f64) -> Var {
        self.unary(a, |x| x + c, Op::Shift(a))
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        self.unary(a, f64::sqrt, Op::Sqrt(a))
    }

    pub fn recip(&mut self, a: Var) -> Var {
        self.unary(a, |x| 1.0 / x, Op::Recip(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = matmul(self.value(a), self.value(b));
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(out, Op::MatMul(a, b), tracked)
    }

    /// Reinterprets the row-major data with a new shape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let t = self.value(a);
        assert_eq!(t.len(), rows * cols, "reshape changes element count");
        let out = Tensor::new(rows, cols, t.data.clone());
        let tracked = self.tracked(a);
        self.push(out, Op::Reshape(a), tracked)
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, end: usize) -> Var {
        let t = self.value(a);
        assert!(start <= end && end <= t.rows);
        let out = Tensor::new(end - start, t.cols, t.data[start * t.cols..end * t.cols].to_vec());
        let tracked = self.tracked(a);
        self.push(out, Op::SliceRows(a, start), tracked)
    }

    pub fn concat_rows(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.cols, tb.cols);
        let mut data = ta.data.clone();
        data.extend_from_slice(&tb.data);
        let out = Tensor::new(ta.rows + tb.rows, ta.cols, data);
        let tracked = self.tracked(a) || self.tracked(b);
        self.push(out, Op::ConcatRows(a, b), tracked)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for &p in parts {
                let t = self.value(p);
                assert_eq!(t.rows, rows);
                data.extend_from_slice(&t.data[i * t.cols..(i + 1) * t.cols]);
            }
        }
        let tracked = parts.iter().any(|&p| self.tracked(p));
        self.push(Tensor::new(rows, cols, data), Op::ConcatCols(parts.to_vec()), tracked)
    }

    /// Column means, `1 × cols`.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let mut out = vec![0.0; t.cols];
        for i in 0..t.rows {
            out.iter_mut().zip(&t.data[i * t.cols..]).for_each(|(o, x)| *o += x);
        }
        let inv = 1.0 / t.rows as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        let cols = t.cols;
        let tracked = self.tracked(a);
        self.push(Tensor::new(1, cols, out), Op::MeanRows(a), tracked)
    }

    /// Flat element `idx` as a `1 × 1` value.
    pub fn pick(&mut self, a: Var, idx: usize) -> Var {
        let x = self.value(a).data[idx];
        let tracked = self.tracked(a);
        self.push(Tensor::scalar(x), Op::Pick(a, idx), tracked)
    }

    /// Left-multiplies every consecutive `d`-row block of `x` by the `d × d`
    /// matrix `w`, i.e. `(I ⊗ W) x`.
    pub fn block_left(&mut self, x: Var, w: Var) -> Var {
        let (tx, tw) = (self.value(x), self.value(w));
        let d = tw.rows;
        assert_eq!(tw.cols, d);
        assert_eq!(tx.rows % d, 0);
        let c = tx.cols;
        let mut out = vec![0.0; tx.len()];
        for b in 0..tx.rows / d {
            for i in 0..d {
                let dst = (b * d + i) * c;
                for k in 0..d {
                    let wik = tw.data[i * d + k];
                    let src = (b * d + k) * c;
                    for j in 0..c {
                        out[dst + j] += wik * tx.data[src + j];
                    }
                }
            }
        }
        let out = Tensor::new(tx.rows, c, out);
        let tracked = self.tracked(x) || self.tracked(w);
        self.push(out, Op::BlockLeft(x, w), tracked)
    }

    pub fn mix(&mut self, a: Var, m: Rc<RowMix>) -> Var {
        let t = self.value(a);
        let c = t.cols;
        let mut out = vec![0.0; m.out_rows * c];
        for &(r, s, w) in &m.entries {
            let src = &t.data[s * c..(s + 1) * c];
            out[r * c..(r + 1) * c].iter_mut().zip(src).for_each(|(o, x)| *o += w * x);
        }
        let out = Tensor::new(m.out_rows, c, out);
        let tracked = self.tracked(a);
        self.push(out, Op::Mix(a, m), tracked)
    }

    /// On a stacked complex array: keeps entries whose real part is
    /// strictly positive, zeroes the rest.
    pub fn complex_relu(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let half = t.len() / 2;
        let mut out = t.data.clone();
        for k in 0..half {
            if t.data[k] <= 0.0 {
                out[k] = 0.0;
                out[half + k] = 0.0;
            }
        }
        let out = Tensor::new(t.rows, t.cols, out);
        let tracked = self.tracked(a);
        self.push(out, Op::ComplexRelu(a), tracked)
    }

    /// `Q_N(maps) · x` for a stacked signal `x`.
    pub fn diffusion(&mut self, x: Var, maps: Var, plan: Rc<DiffusionPlan>) -> Var {
        let (out, cache) = plan.forward(self.value(x), self.value(maps));
        let tracked = self.tracked(x) || self.tracked(maps);
        self.push(out, Op::Diffusion(x, maps, plan, Box::new(cache)), tracked)
    }

    /// Mean softmax cross-entropy over the rows listed in `rows`.
    pub fn softmax_ce(&mut self, logits: Var, labels: Rc<Vec<usize>>, rows: Rc<Vec<usize>>) -> Var {
        let t = self.value(logits);
        let mut loss = 0.0;
        for &r in rows.iter() {
            let row = &t.data[r * t.cols..(r + 1) * t.cols];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|x| (x - mx).exp()).sum::<f64>().ln();
            loss += lse - row[labels[r]];
        }
        loss /= rows.len() as f64;
        let tracked = self.tracked(logits);
        self.push(Tensor::scalar(loss), Op::SoftmaxCe(logits, labels, rows), tracked)
    }

    /// Hash of which entries pass each rectifier. Two evaluations with the
    /// same signature lie on the same smooth piece of the network.
    pub fn activation_signature(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        for node in &self.nodes {
            let input = match node.op {
                Op::Relu(a) | Op::ComplexRelu(a) => self.value(a),
                _ => continue,
            };
            let n = match node.op {
                Op::ComplexRelu(_) => input.len() / 2,
                _ => input.len(),
            };
            for x in &input.data[..n] {
                (*x > 0.0).hash(&mut hasher);
            }
        }
        hasher.finish()
    }

    /// Reverse pass from a `1 × 1` output. Entry `k` of the result is the
    /// gradient of node `k`, or `None` if it does not depend on any param.
    pub fn backward(&self, out: Var) -> Vec<Option<Tensor>> {
        assert_eq!(self.value(out).len(), 1, "backward needs a scalar output");
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Tensor::scalar(1.0));
        for k in (0..=out.0).rev() {
            let Some(g) = grads[k].take() else { continue };
            if !self.nodes[k].tracked {
                continue;
            }
            self.propagate(k, &g, &mut grads);
            grads[k] = Some(g);
        }
        grads
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.tracked(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    /// Sums a full-shape gradient down to a broadcast operand's shape.
    fn reduce_to(&self, g: &Tensor, target: Var, f: impl Fn(usize) -> f64) -> Tensor {
        let t = self.value(target);
        let mut out = Tensor::zeros(t.rows, t.cols);
        for i in 0..g.rows {
            for j in 0..g.cols {
                let k = i * g.cols + j;
                out.data[bidx(t, i, j)] += g.data[k] * f(k);
            }
        }
        out
    }

    fn propagate(&self, k: usize, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[k];
        let y = &node.value;
        let map = |a: Var, f: &dyn Fn(usize, f64) -> f64| -> Tensor {
            let x = self.value(a);
            Tensor::new(x.rows, x.cols, g.data.iter().enumerate().map(|(i, &gi)| f(i, gi)).collect())
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                let ga = self.reduce_to(g, *a, |_| 1.0);
                let gb = self.reduce_to(g, *b, |_| 1.0);
                self.accumulate(grads, *a, ga);
                self.accumulate(grads, *b, gb);
            }
            Op::Sub(a, b) => {
                let ga = self.reduce_to(g, *a, |_| 1.0);
                let gb = self.reduce_to(g, *b, |_| -1.0);
                self.accumulate(grads, *a, ga);
                self.accumulate(grads, *b, gb);
            }
            Op::Mul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let cols = g.cols;
                let ga = self.reduce_to(g, *a, |k| tb.data[bidx(tb, k / cols, k % cols)]);
                let gb = self.reduce_to(g, *b, |k| ta.data[bidx(ta, k / cols, k % cols)]);
                self.accumulate(grads, *a, ga);
                self.accumulate(grads, *b, gb);
            }
            Op::Scale(a, s) => {
                let ga = map(*a, &|_, gi| gi * s);
                self.accumulate(grads, *a, ga);
            }
            Op::Shift(a) => self.accumulate(grads, *a, g.clone()),
            Op::Sqrt(a) => {
                let ga = map(*a, &|i, gi| gi * 0.5 / y.data[i]);
                self.accumulate(grads, *a, ga);
            }
            Op::Recip(a) => {
                let ga = map(*a, &|i, gi| -gi * y.data[i] * y.data[i]);
                self.accumulate(grads, *a, ga);
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let ga = map(*a, &|i, gi| if x.data[i] > 0.0 { gi } else { 0.0 });
                self.accumulate(grads, *a, ga);
            }
            Op::Tanh(a) => {
                let ga = map(*a, &|i, gi| gi * (1.0 - y.data[i] * y.data[i]));
                self.accumulate(grads, *a, ga);
            }
            Op::Sigmoid(a) => {
                let ga = map(*a, &|i, gi| gi * y.data[i] * (1.0 - y.data[i]));
                self.accumulate(grads, *a, ga);
            }
            Op::MatMul(a, b) => {
                if self.tracked(*a) {
                    let ga = matmul_bt(g, self.value(*b));
                    self.accumulate(grads, *a, ga);
                }
                if self.tracked(*b) {
                    let gb = matmul_at(self.value(*a), g);
                    self.accumulate(grads, *b, gb);
                }
            }
            Op::Reshape(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, Tensor::new(x.rows, x.cols, g.data.clone()));
            }
            Op::SliceRows(a, start) => {
                let x = self.value(*a);
                let mut ga = Tensor::zeros(x.rows, x.cols);
                ga.data[start * x.cols..start * x.cols + g.len()].copy_from_slice(&g.data);
                self.accumulate(grads, *a, ga);
            }
            Op::ConcatRows(a, b) => {
                let split = self.value(*a).len();
                let (ra, rb) = (self.value(*a).rows, self.value(*b).rows);
                self.accumulate(grads, *a, Tensor::new(ra, g.cols, g.data[..split].to_vec()));
                self.accumulate(grads, *b, Tensor::new(rb, g.cols, g.data[split..].to_vec()));
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let t = self.value(p);
                    let mut gp = Vec::with_capacity(t.len());
                    for i in 0..g.rows {
                        gp.extend_from_slice(&g.data[i * g.cols + offset..i * g.cols + offset + t.cols]);
                    }
                    offset += t.cols;
                    self.accumulate(grads, p, Tensor::new(t.rows, t.cols, gp));
                }
            }
            Op::MeanRows(a) => {
                let x = self.value(*a);
                let inv = 1.0 / x.rows as f64;
                let mut full = Tensor::zeros(x.rows, x.cols);
                for i in 0..x.rows {
                    for j in 0..x.cols {
                        full.data[i * x.cols + j] = g.data[j] * inv;
                    }
                }
                self.accumulate(grads, *a, full);
            }
            Op::Pick(a, idx) => {
                let x = self.value(*a);
                let mut ga = Tensor::zeros(x.rows, x.cols);
                ga.data[*idx] = g.data[0];
                self.accumulate(grads, *a, ga);
            }
            Op::BlockLeft(x, w) => {
                let (tx, tw) = (self.value(*x), self.value(*w));
                let d = tw.rows;
                let c = tx.cols;
                if self.tracked(*x) {
                    let mut gx = vec![0.0; tx.len()];
                    for b in 0..tx.rows / d {
                        for i in 0..d {
                            let src = (b * d + i) * c;
                            for k in 0..d {
                                let wik = tw.data[i * d + k];
                                let dst = (b * d + k) * c;
                                for j in 0..c {
                                    gx[dst + j] += wik * g.data[src + j];
                                }
                            }
                        }
                    }
                    self.accumulate(grads, *x, Tensor::new(tx.rows, c, gx));
                }
                if self.tracked(*w) {
                    let mut gw = vec![0.0; d * d];
                    for b in 0..tx.rows / d {
                        for i in 0..d {
                            let gi = &g.data[(b * d + i) * c..(b * d + i + 1) * c];
                            for k in 0..d {
                                let xk = &tx.data[(b * d + k) * c..(b * d + k + 1) * c];
                                gw[i * d + k] += gi.iter().zip(xk).map(|(p, q)| p * q).sum::<f64>();
                            }
                        }
                    }
                    self.accumulate(grads, *w, Tensor::new(d, d, gw));
                }
            }
            Op::Mix(a, m) => {
                let x = self.value(*a);
                let c = x.cols;
                let mut ga = Tensor::zeros(x.rows, c);
                for &(r, s, w) in &m.entries {
                    let src = &g.data[r * c..(r + 1) * c];
                    ga.data[s * c..(s + 1) * c].iter_mut().zip(src).for_each(|(o, v)| *o += w * v);
                }
                self.accumulate(grads, *a, ga);
            }
            Op::ComplexRelu(a) => {
                let x = self.value(*a);
                let half = x.len() / 2;
                let ga = map(*a, &|i, gi| if x.data[i % half] > 0.0 { gi } else { 0.0 });
                self.accumulate(grads, *a, ga);
            }
            Op::Diffusion(x, maps, plan, cache) => {
                let want_maps = self.tracked(*maps);
                let (gx, gm) = plan.backward(self.value(*x), self.value(*maps), cache, g, want_maps);
                self.accumulate(grads, *x, gx);
                if let Some(gm) = gm {
                    self.accumulate(grads, *maps, gm);
                }
            }
            Op::SoftmaxCe(logits, labels, rows) => {
                let t = self.value(*logits);
                let mut gl = Tensor::zeros(t.rows, t.cols);
                let scale = g.data[0] / rows.len() as f64;
                for &r in rows.iter() {
                    let row = &t.data[r * t.cols..(r + 1) * t.cols];
                    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|x| (x - mx).exp()).sum();
                    for (j, x) in row.iter().enumerate() {
                        let p = (x - mx).exp() / z;
                        let target = if j == labels[r] { 1.0 } else { 0.0 };
                        gl.data[r * t.cols + j] += scale * (p - target);
                    }
                }
                self.accumulate(grads, *logits, gl);
            }
        }
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    assert_eq!(a.cols, b.rows, "matmul shape mismatch");
    let mut out = vec![0.0; a.rows * b.cols];
    for i in 0..a.rows {
        let dst = &mut out[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let src = &b.data[k * b.cols..(k + 1) * b.cols];
            dst.iter_mut().zip(src).for_each(|(o, x)| *o += aik * x);
        }
    }
    Tensor::new(a.rows, b.cols, out)
}

/// `g · bᵀ`.
fn matmul_bt(g: &Tensor, b: &Tensor) -> Tensor {
    let mut out = vec![0.0; g.rows * b.rows];
    for i in 0..g.rows {
        let gi = &g.data[i * g.cols..(i + 1) * g.cols];
        for k in 0..b.rows {
            let bk = &b.data[k * b.cols..(k + 1) * b.cols];
            out[i * b.rows + k] = gi.iter().zip(bk).map(|(p, q)| p * q).sum();
        }
    }
    Tensor::new(g.rows, b.rows, out)
}

/// `aᵀ · g`.
fn matmul_at(a: &Tensor, g: &Tensor) -> Tensor {
    let mut out = vec![0.0; a.cols * g.cols];
    for i in 0..a.rows {
        let gi = &g.data[i * g.cols..(i + 1) * g.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            out[k * g.cols..(k + 1) * g.cols].iter_mut().zip(gi).for_each(|(o, x)| *o += aik * x);
        }
    }
    Tensor::new(a.cols, g.cols, out)
}
