use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    /// x[m×n] + row-broadcast bias (numel n).
    AddRowBroadcast(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    SoftmaxRows(Var),
    LayerNormRows(Var, f64),
    Sum(Var),
    Mean(Var),
    ConcatCols(Vec<Var>),
    SelectRow(Var, usize),
}

#[derive(Debug)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Vec<f64>,
    requires_grad: bool,
}

/// Eager computation tape. Nodes are appended in execution order, so inputs
/// always precede their consumers; backward walks the record once in reverse.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn rows_cols(shape: &[usize]) -> (usize, usize) {
    match shape.len() {
        1 => (shape[0], 1),
        2 => (shape[0], shape[1]),
        _ => (shape[0], shape[1..].iter().product()),
    }
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

    fn push(&mut self, op: Op, shape: Vec<usize>, values: Vec<f64>, requires_grad: bool) -> Var {
        debug_assert!(values.iter().all(|v| v.is_finite()), "non-finite op output");
        let grad = vec![0.0; values.len()];
        self.nodes.push(Node { op, shape, values, grad, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Push a parameter tensor; its gradient is retrievable after backward.
    pub fn param(&mut self, t: &Tensor) -> Var {
        self.push(Op::Leaf, t.shape.clone(), t.values.clone(), true)
    }

    /// Push a non-differentiable input.
    pub fn constant(&mut self, t: &Tensor) -> Var {
        self.push(Op::Leaf, t.shape.clone(), t.values.clone(), false)
    }

    pub fn constant_vec(&mut self, shape: Vec<usize>, values: Vec<f64>) -> Result<Var> {
        let t = Tensor::new(shape, values)?;
        Ok(self.constant(&t))
    }

    pub fn values(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].values
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn scalar(&self, v: Var) -> Result<f64> {
        let n = &self.nodes[v.0];
        if n.values.len() != 1 {
            return Err(Error::contract(format!("expected scalar, shape {:?}", n.shape)));
        }
        Ok(n.values[0])
    }

    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    // ---- forward ops ----

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = rows_cols(self.shape(a));
        let (k2, n) = rows_cols(self.shape(b));
        if k != k2 {
            return Err(Error::contract(format!(
                "matmul shape mismatch: {:?} x {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let av = &self.nodes[a.0].values;
        let bv = &self.nodes[b.0].values;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aik = av[i * k + p];
                if aik == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMul(a, b), vec![m, n], out, rg))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (m, n) = rows_cols(self.shape(a));
        let av = &self.nodes[a.0].values;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = av[i * n + j];
            }
        }
        let rg = self.rg(a);
        self.push(Op::Transpose(a), vec![n, m], out, rg)
    }

    fn zip_same_shape(&mut self, a: Var, b: Var, name: &str) -> Result<()> {
        if self.nodes[a.0].values.len() != self.nodes[b.0].values.len() {
            return Err(Error::contract(format!(
                "{name} shape mismatch: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same_shape(a, b, "add")?;
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x + y)
            .collect();
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a) || self.rg(b));
        Ok(self.push(Op::Add(a, b), shape, out, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same_shape(a, b, "sub")?;
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x - y)
            .collect();
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a) || self.rg(b));
        Ok(self.push(Op::Sub(a, b), shape, out, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_same_shape(a, b, "mul")?;
        let out: Vec<f64> = self.nodes[a.0]
            .values
            .iter()
            .zip(&self.nodes[b.0].values)
            .map(|(x, y)| x * y)
            .collect();
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a) || self.rg(b));
        Ok(self.push(Op::Mul(a, b), shape, out, rg))
    }

    /// `x[m×n] + b` with `b` broadcast across rows (numel of `b` must be n).
    pub fn add_row_broadcast(&mut self, x: Var, b: Var) -> Result<Var> {
        let (m, n) = rows_cols(self.shape(x));
        if self.nodes[b.0].values.len() != n {
            return Err(Error::contract(format!(
                "row-broadcast bias numel {} != {} columns",
                self.nodes[b.0].values.len(),
                n
            )));
        }
        let xv = &self.nodes[x.0].values;
        let bv = &self.nodes[b.0].values;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] = xv[i * n + j] + bv[j];
            }
        }
        let (shape, rg) = (self.nodes[x.0].shape.clone(), self.rg(x) || self.rg(b));
        Ok(self.push(Op::AddRowBroadcast(x, b), shape, out, rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|x| x * c).collect();
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a));
        self.push(Op::Scale(a, c), shape, out, rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out: Vec<f64> = self.nodes[a.0].values.iter().map(|x| x.max(0.0)).collect();
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a));
        self.push(Op::Relu(a), shape, out, rg)
    }

    /// Row-wise softmax, stabilized by subtracting each row's max.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let (m, n) = rows_cols(self.shape(a));
        let av = &self.nodes[a.0].values;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &av[i * n..(i + 1) * n];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for j in 0..n {
                let e = (row[j] - mx).exp();
                out[i * n + j] = e;
                denom += e;
            }
            for j in 0..n {
                out[i * n + j] /= denom;
            }
        }
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a));
        self.push(Op::SoftmaxRows(a), shape, out, rg)
    }

    /// Row-wise layer normalization (no learnable affine).
    pub fn layer_norm_rows(&mut self, a: Var, eps: f64) -> Var {
        let (m, n) = rows_cols(self.shape(a));
        let av = &self.nodes[a.0].values;
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &av[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for j in 0..n {
                out[i * n + j] = (row[j] - mean) * inv;
            }
        }
        let (shape, rg) = (self.nodes[a.0].shape.clone(), self.rg(a));
        self.push(Op::LayerNormRows(a, eps), shape, out, rg)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.nodes[a.0].values.iter().sum();
        let rg = self.rg(a);
        self.push(Op::Sum(a), vec![1], vec![s], rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let len = self.nodes[a.0].values.len();
        let s: f64 = self.nodes[a.0].values.iter().sum::<f64>() / len as f64;
        let rg = self.rg(a);
        self.push(Op::Mean(a), vec![1], vec![s], rg)
    }

    /// Concatenate 2-D inputs with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::contract("concat_cols with no inputs"));
        }
        let m = rows_cols(self.shape(parts[0])).0;
        let mut total = 0;
        for &p in parts {
            let (mp, np) = rows_cols(self.shape(p));
            if mp != m {
                return Err(Error::contract("concat_cols row count mismatch"));
            }
            total += np;
        }
        let mut out = vec![0.0; m * total];
        let mut off = 0;
        for &p in parts {
            let (_, np) = rows_cols(self.shape(p));
            let pv = &self.nodes[p.0].values;
            for i in 0..m {
                out[i * total + off..i * total + off + np]
                    .copy_from_slice(&pv[i * np..(i + 1) * np]);
            }
            off += np;
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Op::ConcatCols(parts.to_vec()), vec![m, total], out, rg))
    }

    pub fn select_row(&mut self, a: Var, row: usize) -> Result<Var> {
        let (m, n) = rows_cols(self.shape(a));
        if row >= m {
            return Err(Error::contract(format!("row {row} out of {m}")));
        }
        let out = self.nodes[a.0].values[row * n..(row + 1) * n].to_vec();
        let rg = self.rg(a);
        Ok(self.push(Op::SelectRow(a, row), vec![1, n], out, rg))
    }

    // ---- backward ----

    /// Populate gradients of every `requires_grad` node reachable from `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.nodes[loss.0].values.len() != 1 {
            return Err(Error::contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        for n in &mut self.nodes {
            n.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.nodes[loss.0].grad[0] = 1.0;
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad {
                continue;
            }
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (m, k) = rows_cols(&self.nodes[a.0].shape.clone());
                    let n = rows_cols(&self.nodes[b.0].shape.clone()).1;
                    let g = self.nodes[idx].grad.clone();
                    if self.rg(a) {
                        let bv = self.nodes[b.0].values.clone();
                        let ga = &mut self.nodes[a.0].grad;
                        for i in 0..m {
                            for p in 0..k {
                                let mut s = 0.0;
                                for j in 0..n {
                                    s += g[i * n + j] * bv[p * n + j];
                                }
                                ga[i * k + p] += s;
                            }
                        }
                    }
                    if self.rg(b) {
                        let av = self.nodes[a.0].values.clone();
                        let gb = &mut self.nodes[b.0].grad;
                        for p in 0..k {
                            for i in 0..m {
                                let aip = av[i * k + p];
                                if aip == 0.0 {
                                    continue;
                                }
                                for j in 0..n {
                                    gb[p * n + j] += aip * g[i * n + j];
                                }
                            }
                        }
                    }
                }
                Op::Transpose(a) => {
                    let (n, m) = rows_cols(&self.nodes[idx].shape.clone());
                    let g = self.nodes[idx].grad.clone();
                    let ga = &mut self.nodes[a.0].grad;
                    for i in 0..n {
                        for j in 0..m {
                            ga[j * n + i] += g[i * m + j];
                        }
                    }
                }
                Op::Add(a, b) => {
                    let g = self.nodes[idx].grad.clone();
                    if self.rg(a) {
                        for (ga, gi) in self.nodes[a.0].grad.iter_mut().zip(&g) {
                            *ga += gi;
                        }
                    }
                    if self.rg(b) {
                        for (gb, gi) in self.nodes[b.0].grad.iter_mut().zip(&g) {
                            *gb += gi;
                        }
                    }
                }
                Op::Sub(a, b) => {
                    let g = self.nodes[idx].grad.clone();
                    if self.rg(a) {
                        for (ga, gi) in self.nodes[a.0].grad.iter_mut().zip(&g) {
                            *ga += gi;
                        }
                    }
                    if self.rg(b) {
                        for (gb, gi) in self.nodes[b.0].grad.iter_mut().zip(&g) {
                            *gb -= gi;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let g = self.nodes[idx].grad.clone();
                    if self.rg(a) {
                        let bv = self.nodes[b.0].values.clone();
                        for ((ga, gi), bvi) in self.nodes[a.0].grad.iter_mut().zip(&g).zip(&bv) {
                            *ga += gi * bvi;
                        }
                    }
                    if self.rg(b) {
                        let av = self.nodes[a.0].values.clone();
                        for ((gb, gi), avi) in self.nodes[b.0].grad.iter_mut().zip(&g).zip(&av) {
                            *gb += gi * avi;
                        }
                    }
                }
                Op::AddRowBroadcast(x, b) => {
                    let (m, n) = rows_cols(&self.nodes[idx].shape.clone());
                    let g = self.nodes[idx].grad.clone();
                    if self.rg(x) {
                        for (gx, gi) in self.nodes[x.0].grad.iter_mut().zip(&g) {
                            *gx += gi;
                        }
                    }
                    if self.rg(b) {
                        let gb = &mut self.nodes[b.0].grad;
                        for i in 0..m {
                            for j in 0..n {
                                gb[j] += g[i * n + j];
                            }
                        }
                    }
                }
                Op::Scale(a, c) => {
                    let g = self.nodes[idx].grad.clone();
                    for (ga, gi) in self.nodes[a.0].grad.iter_mut().zip(&g) {
                        *ga += gi * c;
                    }
                }
                Op::Relu(a) => {
                    let g = self.nodes[idx].grad.clone();
                    let av = self.nodes[a.0].values.clone();
                    for ((ga, gi), x) in self.nodes[a.0].grad.iter_mut().zip(&g).zip(&av) {
                        if *x > 0.0 {
                            *ga += gi;
                        }
                    }
                }
                Op::SoftmaxRows(a) => {
                    let (m, n) = rows_cols(&self.nodes[idx].shape.clone());
                    let y = self.nodes[idx].values.clone();
                    let g = self.nodes[idx].grad.clone();
                    let ga = &mut self.nodes[a.0].grad;
                    for i in 0..m {
                        let dot: f64 =
                            (0..n).map(|j| g[i * n + j] * y[i * n + j]).sum();
                        for j in 0..n {
                            ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
                        }
                    }
                }
                Op::LayerNormRows(a, eps) => {
                    let (m, n) = rows_cols(&self.nodes[idx].shape.clone());
                    let y = self.nodes[idx].values.clone();
                    let g = self.nodes[idx].grad.clone();
                    let av = self.nodes[a.0].values.clone();
                    let ga = &mut self.nodes[a.0].grad;
                    for i in 0..m {
                        let row = &av[i * n..(i + 1) * n];
                        let mean = row.iter().sum::<f64>() / n as f64;
                        let var =
                            row.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
                        let inv = 1.0 / (var + eps).sqrt();
                        let gmean: f64 = (0..n).map(|j| g[i * n + j]).sum::<f64>() / n as f64;
                        let gydot: f64 =
                            (0..n).map(|j| g[i * n + j] * y[i * n + j]).sum::<f64>() / n as f64;
                        for j in 0..n {
                            ga[i * n + j] +=
                                inv * (g[i * n + j] - gmean - y[i * n + j] * gydot);
                        }
                    }
                }
                Op::Sum(a) => {
                    let g0 = self.nodes[idx].grad[0];
                    for ga in self.nodes[a.0].grad.iter_mut() {
                        *ga += g0;
                    }
                }
                Op::Mean(a) => {
                    let g0 = self.nodes[idx].grad[0];
                    let len = self.nodes[a.0].values.len() as f64;
                    for ga in self.nodes[a.0].grad.iter_mut() {
                        *ga += g0 / len;
                    }
                }
                Op::ConcatCols(parts) => {
                    let (m, total) = rows_cols(&self.nodes[idx].shape.clone());
                    let g = self.nodes[idx].grad.clone();
                    let mut off = 0;
                    for p in parts {
                        let np = rows_cols(&self.nodes[p.0].shape.clone()).1;
                        if self.rg(p) {
                            let gp = &mut self.nodes[p.0].grad;
                            for i in 0..m {
                                for j in 0..np {
                                    gp[i * np + j] += g[i * total + off + j];
                                }
                            }
                        }
                        off += np;
                    }
                }
                Op::SelectRow(a, row) => {
                    let n = rows_cols(&self.nodes[idx].shape.clone()).1;
                    let g = self.nodes[idx].grad.clone();
                    let ga = &mut self.nodes[a.0].grad;
                    for j in 0..n {
                        ga[row * n + j] += g[j];
                    }
                }
            }
        }
        Ok(())
    }

    /// Copy the gradient accumulated for `var` into `param.grad`.
    pub fn write_grad(&self, var: Var, param: &mut Tensor) {
        param.grad = Some(self.nodes[var.0].grad.clone());
    }
}
