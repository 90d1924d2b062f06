//! Define-by-run computation graph with reverse-mode gradients.
//!
//! Every op appends a node holding its forward value. [`Graph::backward`]
//! walks the nodes in reverse and returns the gradient of a scalar with
//! respect to every bound parameter. Backward accumulates in `f64`.

use std::sync::Arc;

use super::params::{Gradients, ParamId, ParamStore};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

/// Probabilities below this are clamped inside `log` / cross-entropy.
pub const PROB_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    GradScale(Var, f64),
    Concat(Var, Var),
    Relu(Var),
    Softmax(Var),
    MaskedSoftmax(Var),
    Log(Var),
    MeanRows(Var, Vec<(usize, usize)>),
    Gather(Var, Vec<usize>),
    CrossEntropy(Var, Vec<usize>),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node<T> {
    value: Arc<Tensor<T>>,
    op: Op,
    /// Whether any parameter feeds this node.
    needs_grad: bool,
}

#[derive(Debug, Clone)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    relu_margin: f64,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            relu_margin: f64::INFINITY,
        }
    }

    fn push(&mut self, name: &'static str, value: Vec<f64>, rows: usize, cols: usize, op: Op) -> Result<Var> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("forward {name}")));
        }
        let value = Tensor::from_f64(rows, cols, &value)?;
        Ok(self.push_tensor(value, op))
    }

    fn push_tensor(&mut self, value: Tensor<T>, op: Op) -> Var {
        self.push_shared(Arc::new(value), op)
    }

    fn push_shared(&mut self, value: Arc<Tensor<T>>, op: Op) -> Var {
        let needs_grad = match &op {
            Op::Leaf => false,
            Op::Param(_) => true,
            Op::MatMul(a, b) | Op::MatMulT(a, b) | Op::Add(a, b) | Op::AddRow(a, b) | Op::Concat(a, b) => {
                self.needs(*a) || self.needs(*b)
            }
            Op::Scale(a, _)
            | Op::GradScale(a, _)
            | Op::Relu(a)
            | Op::Softmax(a)
            | Op::MaskedSoftmax(a)
            | Op::Log(a)
            | Op::MeanRows(a, _)
            | Op::Gather(a, _)
            | Op::CrossEntropy(a, _)
            | Op::Sum(a) => self.needs(*a),
        };
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    fn vals(&self, v: Var) -> Vec<f64> {
        self.nodes[v.0].value.to_f64_vec()
    }

    fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    /// Smallest `|x|` seen by any ReLU so far; tells how close the graph sits
    /// to a non-differentiable point.
    pub fn relu_margin(&self) -> f64 {
        self.relu_margin
    }

    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push_tensor(t, Op::Leaf)
    }

    /// Binds a parameter by value; its gradient is reported by `backward`.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        self.push_shared(Arc::clone(&store.get(id).value), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let ([n, k], [k2, m]) = (self.shape(a), self.shape(b));
        if k != k2 {
            return Err(shape_err("matmul", format!("{n}x{k} · {k2}x{m}")));
        }
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut out = vec![0f64; n * m];
        for i in 0..n {
            let acc = &mut out[i * m..(i + 1) * m];
            for kk in 0..k {
                let x = av[i * k + kk].to_f64();
                if x == 0.0 {
                    continue;
                }
                axpy(acc, &bv[kk * m..(kk + 1) * m], x);
            }
        }
        self.push("matmul", out, n, m, Op::MatMul(a, b))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let ([n, k], [m, k2]) = (self.shape(a), self.shape(b));
        if k != k2 {
            return Err(shape_err("matmul_t", format!("{n}x{k} · ({m}x{k2})ᵀ")));
        }
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut out = vec![0f64; n * m];
        for i in 0..n {
            let ar = &av[i * k..(i + 1) * k];
            for j in 0..m {
                out[i * m + j] = dot(ar, &bv[j * k..(j + 1) * k]);
            }
        }
        self.push("matmul_t", out, n, m, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err("add", format!("{sa:?} + {sb:?}")));
        }
        let out = self
            .vals(a)
            .iter()
            .zip(self.vals(b))
            .map(|(x, y)| x + y)
            .collect();
        self.push("add", out, sa[0], sa[1], Op::Add(a, b))
    }

    /// Adds a `1 × m` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let ([n, m], sr) = (self.shape(a), self.shape(row));
        if sr != [1, m] {
            return Err(shape_err("add_row", format!("[{n}, {m}] + {sr:?}")));
        }
        let r = self.vals(row);
        let out = self
            .vals(a)
            .iter()
            .enumerate()
            .map(|(i, x)| x + r[i % m])
            .collect();
        self.push("add_row", out, n, m, Op::AddRow(a, row))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let [n, m] = self.shape(a);
        let out = self.vals(a).iter().map(|x| c * x).collect();
        self.push("scale", out, n, m, Op::Scale(a, c))
    }

    /// Identity forward; multiplies the incoming gradient by `k` on the way back.
    pub fn scale_gradient(&mut self, a: Var, k: f64) -> Result<Var> {
        let [n, m] = self.shape(a);
        let out = self.vals(a);
        self.push("scale_gradient", out, n, m, Op::GradScale(a, k))
    }

    /// Concatenation along the last axis.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let ([n, p], [n2, q]) = (self.shape(a), self.shape(b));
        if n != n2 {
            return Err(shape_err("concat", format!("{n}x{p} ⊕ {n2}x{q}")));
        }
        let (av, bv) = (self.vals(a), self.vals(b));
        let mut out = Vec::with_capacity(n * (p + q));
        for i in 0..n {
            out.extend_from_slice(&av[i * p..(i + 1) * p]);
            out.extend_from_slice(&bv[i * q..(i + 1) * q]);
        }
        self.push("concat", out, n, p + q, Op::Concat(a, b))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let [n, m] = self.shape(a);
        let v = self.vals(a);
        let margin = v.iter().fold(f64::INFINITY, |acc, x| acc.min(x.abs()));
        self.relu_margin = self.relu_margin.min(margin);
        let out = v.iter().map(|&x| x.max(0.0)).collect();
        self.push("relu", out, n, m, Op::Relu(a))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let [n, m] = self.shape(a);
        let mut out = self.vals(a);
        for row in out.chunks_mut(m.max(1)) {
            softmax_in_place(row, None);
        }
        self.push("softmax", out, n, m, Op::Softmax(a))
    }

    /// Row-wise softmax over the entries where `mask` is set; others are 0.
    pub fn masked_softmax(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        let [n, m] = self.shape(a);
        if mask.len() != n * m {
            return Err(shape_err(
                "masked_softmax",
                format!("mask of {} for {n}x{m}", mask.len()),
            ));
        }
        let mut out = self.vals(a);
        for (i, row) in out.chunks_mut(m.max(1)).enumerate() {
            let mrow = &mask[i * m..(i + 1) * m];
            if !mrow.iter().any(|&b| b) {
                return Err(Error::invalid(format!("masked_softmax: row {i} has no open entry")));
            }
            softmax_in_place(row, Some(mrow));
        }
        self.push("masked_softmax", out, n, m, Op::MaskedSoftmax(a))
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let [n, m] = self.shape(a);
        let out = self.vals(a).iter().map(|x| x.ln()).collect();
        self.push("log", out, n, m, Op::Log(a))
    }

    /// One output row per inclusive row range: the mean of those rows.
    pub fn mean_rows(&mut self, a: Var, ranges: &[(usize, usize)]) -> Result<Var> {
        let [n, m] = self.shape(a);
        let v = self.vals(a);
        let mut out = Vec::with_capacity(ranges.len() * m);
        for &(s, e) in ranges {
            if s > e || e >= n {
                return Err(shape_err("mean_rows", format!("range {s}..={e} for {n} rows")));
            }
            let cnt = (e + 1 - s) as f64;
            let mut acc = vec![0f64; m];
            for r in s..=e {
                for (o, x) in acc.iter_mut().zip(&v[r * m..(r + 1) * m]) {
                    *o += x;
                }
            }
            out.extend(acc.into_iter().map(|x| x / cnt));
        }
        self.push("mean_rows", out, ranges.len(), m, Op::MeanRows(a, ranges.to_vec()))
    }

    /// Selects rows by index; serves as both embedding lookup and row projection.
    pub fn gather(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let [n, m] = self.shape(a);
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(shape_err("gather", format!("row {bad} of {n}")));
        }
        let v = self.value(a).data();
        let mut out = Vec::with_capacity(indices.len() * m);
        for &i in indices {
            out.extend(v[i * m..(i + 1) * m].iter().map(|x| x.to_f64()));
        }
        self.push("gather", out, indices.len(), m, Op::Gather(a, indices.to_vec()))
    }

    pub fn embedding_lookup(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        self.gather(table, ids)
    }

    /// `-Σ_i ln p[i, target_i]` over rows of a probability matrix.
    pub fn cross_entropy(&mut self, probs: Var, targets: &[usize]) -> Result<Var> {
        let [n, m] = self.shape(probs);
        if targets.len() != n {
            return Err(shape_err(
                "cross_entropy",
                format!("{} targets for {n} rows", targets.len()),
            ));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= m) {
            return Err(shape_err("cross_entropy", format!("target {bad} of {m} classes")));
        }
        let p = self.value(probs);
        let loss: f64 = targets
            .iter()
            .enumerate()
            .map(|(i, &t)| -p.get(i, t).max(PROB_FLOOR).ln())
            .sum();
        self.push("cross_entropy", vec![loss], 1, 1, Op::CrossEntropy(probs, targets.to_vec()))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.vals(a).iter().sum();
        self.push("sum", vec![s], 1, 1, Op::Sum(a))
    }

    /// Gradients of the scalar `loss` with respect to every bound parameter.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != [1, 1] {
            return Err(shape_err("backward", format!("loss shape {:?}", self.shape(loss))));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);
        let mut params: Vec<(ParamId, Vec<f64>)> = Vec::new();

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let [n, m] = node.value.shape();
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => match params.iter_mut().find(|(p, _)| p == id) {
                    Some((_, acc)) => acc.iter_mut().zip(&g).for_each(|(a, x)| *a += x),
                    None => params.push((*id, g)),
                },
                Op::MatMul(a, b) => {
                    let k = self.shape(*a)[1];
                    if self.needs(*a) {
                        let bv = self.value(*b).data();
                        let ga = acc(&mut grads, *a, n * k);
                        for i in 0..n {
                            let gr = &g[i * m..(i + 1) * m];
                            for kk in 0..k {
                                ga[i * k + kk] += dot(gr, &bv[kk * m..(kk + 1) * m]);
                            }
                        }
                    }
                    if self.needs(*b) {
                        let av = self.value(*a).data();
                        let gb = acc(&mut grads, *b, k * m);
                        for i in 0..n {
                            let gr = &g[i * m..(i + 1) * m];
                            for kk in 0..k {
                                let x = av[i * k + kk].to_f64();
                                if x != 0.0 {
                                    add_into(&mut gb[kk * m..(kk + 1) * m], gr, x);
                                }
                            }
                        }
                    }
                }
                Op::MatMulT(a, b) => {
                    // out = a · bᵀ, a: n×k, b: m×k
                    let k = self.shape(*a)[1];
                    if self.needs(*a) {
                        let bv = self.value(*b).data();
                        let ga = acc(&mut grads, *a, n * k);
                        for i in 0..n {
                            for j in 0..m {
                                let x = g[i * m + j];
                                if x != 0.0 {
                                    axpy(&mut ga[i * k..(i + 1) * k], &bv[j * k..(j + 1) * k], x);
                                }
                            }
                        }
                    }
                    if self.needs(*b) {
                        let av = self.value(*a).data();
                        let gb = acc(&mut grads, *b, m * k);
                        for i in 0..n {
                            for j in 0..m {
                                let x = g[i * m + j];
                                if x != 0.0 {
                                    axpy(&mut gb[j * k..(j + 1) * k], &av[i * k..(i + 1) * k], x);
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(acc(&mut grads, *a, n * m), &g, 1.0);
                    add_into(acc(&mut grads, *b, n * m), &g, 1.0);
                }
                Op::AddRow(a, r) => {
                    add_into(acc(&mut grads, *a, n * m), &g, 1.0);
                    let gr = acc(&mut grads, *r, m);
                    for row in g.chunks(m) {
                        add_into(gr, row, 1.0);
                    }
                }
                Op::Scale(a, c) | Op::GradScale(a, c) => {
                    add_into(acc(&mut grads, *a, n * m), &g, *c);
                }
                Op::Concat(a, b) => {
                    let p = self.shape(*a)[1];
                    let q = m - p;
                    let ga = acc(&mut grads, *a, n * p);
                    for i in 0..n {
                        add_into(&mut ga[i * p..(i + 1) * p], &g[i * m..i * m + p], 1.0);
                    }
                    let gb = acc(&mut grads, *b, n * q);
                    for i in 0..n {
                        add_into(&mut gb[i * q..(i + 1) * q], &g[i * m + p..(i + 1) * m], 1.0);
                    }
                }
                Op::Relu(a) => {
                    let x = self.value(*a).data();
                    let ga = acc(&mut grads, *a, n * m);
                    for ((o, gi), xi) in ga.iter_mut().zip(&g).zip(x) {
                        if xi.to_f64() > 0.0 {
                            *o += gi;
                        }
                    }
                }
                Op::Softmax(a) | Op::MaskedSoftmax(a) => {
                    let y = node.value.to_f64_vec();
                    let ga = acc(&mut grads, *a, n * m);
                    for i in 0..n {
                        let yr = &y[i * m..(i + 1) * m];
                        let gr = &g[i * m..(i + 1) * m];
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for j in 0..m {
                            ga[i * m + j] += yr[j] * (gr[j] - dot);
                        }
                    }
                }
                Op::Log(a) => {
                    let x = self.value(*a).data();
                    let ga = acc(&mut grads, *a, n * m);
                    for ((o, gi), xi) in ga.iter_mut().zip(&g).zip(x) {
                        *o += gi / xi.to_f64();
                    }
                }
                Op::MeanRows(a, ranges) => {
                    let rows = self.shape(*a)[0];
                    let ga = acc(&mut grads, *a, rows * m);
                    for (r, &(s, e)) in ranges.iter().enumerate() {
                        let w = 1.0 / (e + 1 - s) as f64;
                        for src in s..=e {
                            add_into(&mut ga[src * m..(src + 1) * m], &g[r * m..(r + 1) * m], w);
                        }
                    }
                }
                Op::Gather(a, idx) => {
                    let rows = self.shape(*a)[0];
                    let ga = acc(&mut grads, *a, rows * m);
                    for (r, &src) in idx.iter().enumerate() {
                        add_into(&mut ga[src * m..(src + 1) * m], &g[r * m..(r + 1) * m], 1.0);
                    }
                }
                Op::CrossEntropy(p, targets) => {
                    let pv = self.value(*p);
                    let c = pv.cols();
                    let ga = acc(&mut grads, *p, pv.rows() * c);
                    for (i, &t) in targets.iter().enumerate() {
                        ga[i * c + t] -= g[0] / pv.get(i, t).max(PROB_FLOOR);
                    }
                }
                Op::Sum(a) => {
                    let [r, c] = self.shape(*a);
                    acc(&mut grads, *a, r * c).iter_mut().for_each(|o| *o += g[0]);
                }
            }
        }
        params.sort_by_key(|(id, _)| *id);
        if params.iter().any(|(_, g)| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("backward gradient".into()));
        }
        Ok(Gradients { entries: params })
    }
}

fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

/// Eight independent partial sums so the loop vectorizes; the summation
/// order is fixed, so results stay reproducible.
fn dot<A: Real, B: Real>(a: &[A], b: &[B]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut lanes = [0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            lanes[l] += x[l].to_f64() * y[l].to_f64();
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x.to_f64() * y.to_f64())
        .sum();
    lanes.iter().sum::<f64>() + tail
}

fn axpy<B: Real>(dst: &mut [f64], src: &[B], w: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += w * s.to_f64();
    }
}

fn add_into(dst: &mut [f64], src: &[f64], w: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += w * s;
    }
}

/// Stabilized softmax over a row; masked-out entries become exactly zero.
fn softmax_in_place(row: &mut [f64], mask: Option<&[bool]>) {
    let open = |j: usize| mask.map_or(true, |m| m[j]);
    let max = (0..row.len())
        .filter(|&j| open(j))
        .map(|j| row[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for j in 0..row.len() {
        row[j] = if open(j) { (row[j] - max).exp() } else { 0.0 };
        total += row[j];
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}
