use std::collections::HashMap;

use super::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    EmbedRow(ParamId, usize),
    MatMul(Var, Var),
    MatVec(Var, Var),
    VecMat(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Outer(Var, Var),
    Scale(Var, f64),
    AddConst(Var),
    ScalarMul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Stack(Vec<Var>),
    Pick(Var, usize),
    Sum(Var),
    Dot(Var, Var),
    LnClamped(Var, f64),
    Minimum(Var, Var),
    ScatterAdd(Var, Vec<usize>),
    BceWithLogits(Var, f64, f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// A tape of operations. Every op appends a node; [`Graph::backward`]
/// walks the tape in reverse and accumulates gradients into the
/// [`ParamStore`].
///
/// Shape mismatches panic with both shapes in the message. Non-finite
/// results are recorded and surface as an error from `backward`.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<ParamId, Var>,
    backward_done: bool,
    non_finite: Option<&'static str>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn same_shape(op: &str, a: &Tensor, b: &Tensor) {
    assert!(
        a.shape() == b.shape(),
        "{op}: shape mismatch {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clears the tape so the graph can be rebuilt.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.params.clear();
        self.backward_done = false;
        self.non_finite = None;
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

    /// First op that produced a non-finite value, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        self.non_finite
    }

    fn push(&mut self, name: &'static str, value: Tensor, op: Op) -> Var {
        if self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(name);
        }
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push("constant", t, Op::Leaf)
    }

    pub fn scalar(&mut self, v: f64) -> Var {
        self.constant(Tensor::scalar(v))
    }

    pub fn zeros(&mut self, shape: &[usize]) -> Var {
        self.constant(Tensor::zeros(shape))
    }

    /// Brings a parameter onto the tape. Repeated calls return the same node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        if let Some(v) = self.params.get(&id) {
            return *v;
        }
        let v = self.push("param", store.value(id).clone(), Op::Param(id));
        self.params.insert(id, v);
        v
    }

    /// Row `row` of a matrix parameter, without copying the whole table.
    pub fn embed(&mut self, store: &ParamStore, table: ParamId, row: usize) -> Var {
        let t = store.value(table);
        assert!(
            row < t.rows(),
            "embedding row {row} out of range for table shape {:?}",
            t.shape()
        );
        let value = Tensor::vector(t.row(row).to_vec());
        self.push("embed", value, Op::EmbedRow(table, row))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert!(
            ta.shape().len() == 2 && tb.shape().len() == 2 && ta.cols() == tb.rows(),
            "matmul: shape mismatch {:?} x {:?}",
            ta.shape(),
            tb.shape()
        );
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let (da, db) = (ta.data(), tb.data());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = da[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let row = &db[p * n..(p + 1) * n];
                for (o, bv) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += aip * bv;
                }
            }
        }
        self.push("matmul", Tensor::matrix(m, n, out), Op::MatMul(a, b))
    }

    /// `[m, n] x [n] -> [m]`
    pub fn matvec(&mut self, a: Var, x: Var) -> Var {
        let (ta, tx) = (self.value(a), self.value(x));
        assert!(
            ta.shape().len() == 2 && tx.shape().len() == 1 && ta.cols() == tx.len(),
            "matvec: shape mismatch {:?} x {:?}",
            ta.shape(),
            tx.shape()
        );
        let xs = tx.data();
        let out: Vec<f64> = (0..ta.rows())
            .map(|i| ta.row(i).iter().zip(xs).map(|(a, b)| a * b).sum())
            .collect();
        self.push("matvec", Tensor::vector(out), Op::MatVec(a, x))
    }

    /// `[m] x [m, n] -> [n]`, i.e. `A^T x`.
    pub fn vecmat(&mut self, x: Var, a: Var) -> Var {
        let (tx, ta) = (self.value(x), self.value(a));
        assert!(
            ta.shape().len() == 2 && tx.shape().len() == 1 && ta.rows() == tx.len(),
            "vecmat: shape mismatch {:?} x {:?}",
            tx.shape(),
            ta.shape()
        );
        let mut out = vec![0.0; ta.cols()];
        for (i, xi) in tx.data().iter().enumerate() {
            for (o, a) in out.iter_mut().zip(ta.row(i)) {
                *o += xi * a;
            }
        }
        self.push("vecmat", Tensor::vector(out), Op::VecMat(x, a))
    }

    fn zip_with(&mut self, name: &'static str, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape(name, ta, tb);
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        let t = Tensor::new(ta.shape().to_vec(), data);
        self.push(name, t, op)
    }

    fn map(&mut self, name: &'static str, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let ta = self.value(a);
        let t = Tensor::new(ta.shape().to_vec(), ta.data().iter().map(|x| f(*x)).collect());
        self.push(name, t, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with("add", a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with("sub", a, b, Op::Sub(a, b), |x, y| x - y)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with("mul", a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn minimum(&mut self, a: Var, b: Var) -> Var {
        self.zip_with("minimum", a, b, Op::Minimum(a, b), f64::min)
    }

    /// Adds vector `v` to every row of matrix `m`.
    pub fn add_row(&mut self, m: Var, v: Var) -> Var {
        let (tm, tv) = (self.value(m), self.value(v));
        assert!(
            tm.shape().len() == 2 && tv.shape() == [tm.cols()],
            "add_row: shape mismatch {:?} + {:?}",
            tm.shape(),
            tv.shape()
        );
        let c = tm.cols();
        let data = tm
            .data()
            .iter()
            .enumerate()
            .map(|(i, x)| x + tv.data()[i % c])
            .collect();
        let t = Tensor::new(tm.shape().to_vec(), data);
        self.push("add_row", t, Op::AddRow(m, v))
    }

    /// `[n] x [d] -> [n, d]`
    pub fn outer(&mut self, u: Var, v: Var) -> Var {
        let (tu, tv) = (self.value(u), self.value(v));
        assert!(
            tu.shape().len() == 1 && tv.shape().len() == 1,
            "outer: expected vectors, got {:?} and {:?}",
            tu.shape(),
            tv.shape()
        );
        let mut data = Vec::with_capacity(tu.len() * tv.len());
        for a in tu.data() {
            data.extend(tv.data().iter().map(|b| a * b));
        }
        let t = Tensor::matrix(tu.len(), tv.len(), data);
        self.push("outer", t, Op::Outer(u, v))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map("scale", a, Op::Scale(a, c), |x| c * x)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        self.map("add_const", a, Op::AddConst(a), |x| x + c)
    }

    /// Scalar node times tensor.
    pub fn scalar_mul(&mut self, s: Var, x: Var) -> Var {
        let ts = self.value(s);
        assert_eq!(ts.len(), 1, "scalar_mul: expected a scalar, got shape {:?}", ts.shape());
        let c = ts.item();
        self.map("scalar_mul", x, Op::ScalarMul(s, x), |v| c * v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map("sigmoid", a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map("tanh", a, Op::Tanh(a), f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map("relu", a, Op::Relu(a), |x| x.max(0.0))
    }

    /// Softmax over the last axis (each row of a matrix).
    pub fn softmax(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let width = *ta.shape().last().expect("softmax of a scalar");
        assert!(width > 0, "softmax over an empty axis");
        let mut data = ta.data().to_vec();
        for row in data.chunks_mut(width) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        let t = Tensor::new(ta.shape().to_vec(), data);
        self.push("softmax", t, Op::Softmax(a))
    }

    /// Concatenates vectors.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut data = Vec::new();
        for p in parts {
            let t = self.value(*p);
            assert_eq!(
                t.shape().len(),
                1,
                "concat: expected vectors, got shape {:?}",
                t.shape()
            );
            data.extend_from_slice(t.data());
        }
        self.push("concat", Tensor::vector(data), Op::Concat(parts.to_vec()))
    }

    /// `len` elements of a vector starting at `start`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let t = self.value(a);
        assert!(
            t.shape().len() == 1 && start + len <= t.len(),
            "slice: range {start}..{} out of bounds for shape {:?}",
            start + len,
            t.shape()
        );
        let v = Tensor::vector(t.data()[start..start + len].to_vec());
        self.push("slice", v, Op::Slice(a, start))
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "stack: no rows");
        let width = self.value(rows[0]).len();
        let mut data = Vec::with_capacity(width * rows.len());
        for r in rows {
            let t = self.value(*r);
            assert!(
                t.shape() == [width],
                "stack: row shape {:?} differs from [{width}]",
                t.shape()
            );
            data.extend_from_slice(t.data());
        }
        let t = Tensor::matrix(rows.len(), width, data);
        self.push("stack", t, Op::Stack(rows.to_vec()))
    }

    /// Element `i` of a vector as a scalar.
    pub fn pick(&mut self, a: Var, i: usize) -> Var {
        let t = self.value(a);
        assert!(i < t.len(), "pick: index {i} out of bounds for shape {:?}", t.shape());
        let v = Tensor::scalar(t.data()[i]);
        self.push("pick", v, Op::Pick(a, i))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push("sum", Tensor::scalar(s), Op::Sum(a))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape("dot", ta, tb);
        let s = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        self.push("dot", Tensor::scalar(s), Op::Dot(a, b))
    }

    /// `ln(max(x, floor))`; the gradient is zero where the floor applies.
    pub fn ln_clamped(&mut self, a: Var, floor: f64) -> Var {
        self.map("ln", a, Op::LnClamped(a, floor), |x| x.max(floor).ln())
    }

    /// `out[index[i]] += x[i]` into a zero vector of length `len`.
    pub fn scatter_add(&mut self, x: Var, index: &[usize], len: usize) -> Var {
        let t = self.value(x);
        assert!(
            t.shape() == [index.len()],
            "scatter_add: value shape {:?} vs {} indices",
            t.shape(),
            index.len()
        );
        let mut out = vec![0.0; len];
        for (v, &i) in t.data().iter().zip(index) {
            assert!(i < len, "scatter_add: index {i} out of range {len}");
            out[i] += v;
        }
        self.push("scatter_add", Tensor::vector(out), Op::ScatterAdd(x, index.to_vec()))
    }

    /// Binary cross-entropy of `sigmoid(logit)` against `label`, with the
    /// positive term weighted by `pos_weight`.
    pub fn bce_with_logits(&mut self, logit: Var, label: f64, pos_weight: f64) -> Var {
        let z = self.value(logit).item();
        let loss = pos_weight * label * softplus(-z) + (1.0 - label) * softplus(z);
        self.push("bce", Tensor::scalar(loss), Op::BceWithLogits(logit, label, pos_weight))
    }

    /// Reverse pass from a scalar `loss`. Gradients are added to the
    /// trainable parameters' `grad` buffers (call
    /// [`ParamStore::zero_grad`] between steps).
    pub fn backward(&mut self, loss: Var, store: &mut ParamStore) -> Result<()> {
        if self.backward_done {
            return Err(Error::BackwardTwice);
        }
        if let Some(op) = self.non_finite {
            return Err(Error::NonFinite { op });
        }
        assert_eq!(
            self.value(loss).len(),
            1,
            "backward: loss must be a scalar, got shape {:?}",
            self.value(loss).shape()
        );
        self.backward_done = true;

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let nodes = &self.nodes;
            let val = |v: Var| nodes[v.0].value.data();
            let len = |v: Var| nodes[v.0].value.len();
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => {
                    let p = store.get_mut(*id);
                    if p.trainable {
                        for (pg, d) in p.grad.data_mut().iter_mut().zip(&g) {
                            *pg += d;
                        }
                    }
                }
                Op::EmbedRow(id, row) => {
                    let p = store.get_mut(*id);
                    if p.trainable {
                        let c = p.value.cols();
                        for (pg, d) in p.grad.data_mut()[row * c..(row + 1) * c].iter_mut().zip(&g) {
                            *pg += d;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (&nodes[a.0].value, &nodes[b.0].value);
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    let (da, db) = (ta.data(), tb.data());
                    let ga = acc(&mut grads, *a, m * k);
                    for i in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..n {
                                s += g[i * n + j] * db[p * n + j];
                            }
                            ga[i * k + p] += s;
                        }
                    }
                    let gb = acc(&mut grads, *b, k * n);
                    for i in 0..m {
                        for p in 0..k {
                            let aip = da[i * k + p];
                            for j in 0..n {
                                gb[p * n + j] += aip * g[i * n + j];
                            }
                        }
                    }
                }
                Op::MatVec(a, x) => {
                    let ta = &nodes[a.0].value;
                    let (m, n) = (ta.rows(), ta.cols());
                    let xs = val(*x);
                    let ga = acc(&mut grads, *a, m * n);
                    for (i, &gi) in g.iter().enumerate().take(m) {
                        if gi == 0.0 {
                            continue;
                        }
                        for (d, x) in ga[i * n..(i + 1) * n].iter_mut().zip(xs) {
                            *d += gi * x;
                        }
                    }
                    let gx = acc(&mut grads, *x, n);
                    for (i, &gi) in g.iter().enumerate().take(m) {
                        for (d, r) in gx.iter_mut().zip(ta.row(i)) {
                            *d += r * gi;
                        }
                    }
                }
                Op::VecMat(x, a) => {
                    let ta = &nodes[a.0].value;
                    let (m, n) = (ta.rows(), ta.cols());
                    let xs = val(*x);
                    let gx = acc(&mut grads, *x, m);
                    for (i, d) in gx.iter_mut().enumerate() {
                        *d += ta.row(i).iter().zip(&g).map(|(a, d)| a * d).sum::<f64>();
                    }
                    let ga = acc(&mut grads, *a, m * n);
                    for i in 0..m {
                        for j in 0..n {
                            ga[i * n + j] += xs[i] * g[j];
                        }
                    }
                }
                Op::Add(a, b) => {
                    for (t, d) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *t += d;
                    }
                    for (t, d) in acc(&mut grads, *b, g.len()).iter_mut().zip(&g) {
                        *t += d;
                    }
                }
                Op::Sub(a, b) => {
                    for (t, d) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *t += d;
                    }
                    for (t, d) in acc(&mut grads, *b, g.len()).iter_mut().zip(&g) {
                        *t -= d;
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    let ga = acc(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * vb[i];
                    }
                    let gb = acc(&mut grads, *b, g.len());
                    for i in 0..g.len() {
                        gb[i] += g[i] * va[i];
                    }
                }
                Op::Minimum(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    let take_a: Vec<bool> = va.iter().zip(vb).map(|(x, y)| x <= y).collect();
                    let ga = acc(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        if take_a[i] {
                            ga[i] += g[i];
                        }
                    }
                    let gb = acc(&mut grads, *b, g.len());
                    for i in 0..g.len() {
                        if !take_a[i] {
                            gb[i] += g[i];
                        }
                    }
                }
                Op::AddRow(m, v) => {
                    let c = len(*v);
                    for (t, d) in acc(&mut grads, *m, g.len()).iter_mut().zip(&g) {
                        *t += d;
                    }
                    let gv = acc(&mut grads, *v, c);
                    for (i, d) in g.iter().enumerate() {
                        gv[i % c] += d;
                    }
                }
                Op::Outer(u, v) => {
                    let (vu, vv) = (val(*u), val(*v));
                    let (n, d) = (vu.len(), vv.len());
                    let gu = acc(&mut grads, *u, n);
                    for i in 0..n {
                        gu[i] += (0..d).map(|j| g[i * d + j] * vv[j]).sum::<f64>();
                    }
                    let gv = acc(&mut grads, *v, d);
                    for i in 0..n {
                        for j in 0..d {
                            gv[j] += g[i * d + j] * vu[i];
                        }
                    }
                }
                Op::Scale(a, c) => {
                    for (t, d) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *t += c * d;
                    }
                }
                Op::AddConst(a) => {
                    for (t, d) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *t += d;
                    }
                }
                Op::ScalarMul(s, x) => {
                    let c = val(*s)[0];
                    let vx = val(*x);
                    let ds: f64 = g.iter().zip(vx).map(|(d, x)| d * x).sum();
                    acc(&mut grads, *s, 1)[0] += ds;
                    for (t, d) in acc(&mut grads, *x, g.len()).iter_mut().zip(&g) {
                        *t += c * d;
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    let ga = acc(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    let ga = acc(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * (1.0 - y[i] * y[i]);
                    }
                }
                Op::Relu(a) => {
                    let x = val(*a);
                    let ga = acc(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        if x[i] > 0.0 {
                            ga[i] += g[i];
                        }
                    }
                }
                Op::Softmax(a) => {
                    let y = node.value.data();
                    let width = *node.value.shape().last().unwrap();
                    let ga = acc(&mut grads, *a, g.len());
                    for start in (0..g.len()).step_by(width) {
                        let r = start..start + width;
                        let s: f64 = g[r.clone()].iter().zip(&y[r.clone()]).map(|(d, y)| d * y).sum();
                        for i in r {
                            ga[i] += y[i] * (g[i] - s);
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = len(*p);
                        for (t, d) in acc(&mut grads, *p, n).iter_mut().zip(&g[off..off + n]) {
                            *t += d;
                        }
                        off += n;
                    }
                }
                Op::Slice(a, start) => {
                    let n = len(*a);
                    for (t, d) in acc(&mut grads, *a, n)[*start..start + g.len()].iter_mut().zip(&g) {
                        *t += d;
                    }
                }
                Op::Stack(rows) => {
                    let w = g.len() / rows.len();
                    for (r, v) in rows.iter().enumerate() {
                        for (t, d) in acc(&mut grads, *v, w).iter_mut().zip(&g[r * w..(r + 1) * w]) {
                            *t += d;
                        }
                    }
                }
                Op::Pick(a, i) => {
                    let n = len(*a);
                    acc(&mut grads, *a, n)[*i] += g[0];
                }
                Op::Sum(a) => {
                    let n = len(*a);
                    acc(&mut grads, *a, n).iter_mut().for_each(|t| *t += g[0]);
                }
                Op::Dot(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    let n = va.len();
                    let ga = acc(&mut grads, *a, n);
                    for i in 0..n {
                        ga[i] += g[0] * vb[i];
                    }
                    let gb = acc(&mut grads, *b, n);
                    for i in 0..n {
                        gb[i] += g[0] * va[i];
                    }
                }
                Op::LnClamped(a, floor) => {
                    let x = val(*a);
                    let ga = acc(&mut grads, *a, g.len());
                    for i in 0..g.len() {
                        if x[i] > *floor {
                            ga[i] += g[i] / x[i];
                        }
                    }
                }
                Op::ScatterAdd(x, index) => {
                    let gx = acc(&mut grads, *x, index.len());
                    for (t, &i) in gx.iter_mut().zip(index) {
                        *t += g[i];
                    }
                }
                Op::BceWithLogits(z, label, w) => {
                    let s = sigmoid(val(*z)[0]);
                    let d = w * label * (s - 1.0) + (1.0 - label) * s;
                    acc(&mut grads, *z, 1)[0] += g[0] * d;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_uniform_and_sigmoid_zero() {
        let mut g = Graph::new();
        let x = g.constant(Tensor::vector(vec![0.0; 3]));
        let s = g.softmax(x);
        for v in g.value(s).data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let z = g.scalar(0.0);
        let sg = g.sigmoid(z);
        assert_eq!(g.value(sg).item(), 0.5);
    }

    #[test]
    fn matmul_hand_computed() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]));
        let b = g.constant(Tensor::matrix(3, 2, vec![7., 8., 9., 10., 11., 12.]));
        let c = g.matmul(a, b);
        assert_eq!(g.value(c).data(), &[58., 64., 139., 154.]);
    }

    #[test]
    #[should_panic(expected = "[2, 3]")]
    fn shape_mismatch_names_shapes() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::matrix(2, 3, vec![0.0; 6]));
        let b = g.constant(Tensor::matrix(2, 3, vec![0.0; 6]));
        g.matmul(a, b);
    }

    #[test]
    fn sum_of_param_has_unit_gradient() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![0.3, -1.0, 2.0]), true);
        let mut g = Graph::new();
        let v = g.param(&store, p);
        let l = g.sum(v);
        g.backward(l, &mut store).unwrap();
        assert_eq!(store.get(p).grad.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn half_squared_norm_gradient_is_identity() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![0.3, -1.0, 2.0]), true);
        let unused = store.add("q", Tensor::vector(vec![5.0]), true);
        let mut g = Graph::new();
        let v = g.param(&store, p);
        let d = g.dot(v, v);
        let l = g.scale(d, 0.5);
        g.backward(l, &mut store).unwrap();
        assert_eq!(store.get(p).grad.data(), &[0.3, -1.0, 2.0]);
        assert_eq!(store.get(unused).grad.data(), &[0.0]);
    }

    #[test]
    fn backward_twice_is_an_error() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::scalar(1.0), true);
        let mut g = Graph::new();
        let v = g.param(&store, p);
        g.backward(v, &mut store).unwrap();
        assert!(matches!(g.backward(v, &mut store), Err(Error::BackwardTwice)));
        g.reset();
        let v = g.param(&store, p);
        assert!(g.backward(v, &mut store).is_ok());
    }

    #[test]
    fn non_finite_values_trip_backward() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::scalar(1.0), true);
        let mut g = Graph::new();
        let v = g.param(&store, p);
        let big = g.scale(v, f64::MAX);
        let inf = g.scale(big, 10.0);
        assert_eq!(g.non_finite(), Some("scale"));
        assert!(matches!(g.backward(inf, &mut store), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn frozen_param_receives_no_gradient() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![1.0, 2.0]), false);
        let mut g = Graph::new();
        let v = g.param(&store, p);
        let l = g.sum(v);
        g.backward(l, &mut store).unwrap();
        assert_eq!(store.get(p).grad.data(), &[0.0, 0.0]);
    }
}
