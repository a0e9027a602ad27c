//! Transformer encoder for capacity forecasting: learned scalar embedding,
//! sinusoidal positional encoding, multi-head scaled dot-product
//! self-attention, position-wise FFN, linear last-position readout.
//!
//! Residual connections and layer normalization wrap both sublayers by
//! default; `use_residual_norm: false` strips them down to the bare
//! attention/FFN stack.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adam_step, AdamConfig, AdamState, Tape, Tensor, Var};

const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_hidden: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_true")]
    pub use_residual_norm: bool,
    #[serde(default = "default_true")]
    pub use_positional_encoding: bool,
}

fn default_true() -> bool {
    true
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            d_model: 16,
            heads: 2,
            layers: 1,
            ffn_hidden: 16,
            dropout: 0.0,
            use_residual_norm: true,
            use_positional_encoding: true,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model < 2 || self.d_model % 2 != 0 {
            return Err(Error::config(format!("d_model must be even and >= 2, got {}", self.d_model)));
        }
        if self.heads == 0 || self.d_model % self.heads != 0 {
            return Err(Error::config(format!(
                "heads must divide d_model ({} heads, d_model {})",
                self.heads, self.d_model
            )));
        }
        if !(self.layers == 1 || self.layers == 2) {
            return Err(Error::config(format!("layers must be 1 or 2, got {}", self.layers)));
        }
        if self.ffn_hidden == 0 {
            return Err(Error::config("ffn_hidden must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.heads
    }
}

/// Precomputed sin/cos table, row `pos`, column `2k` = sin(pos / 10000^{2k/d}),
/// column `2k+1` the matching cos.
#[derive(Debug, Clone)]
pub struct PositionalEncodingTable {
    pub table: Tensor,
}

pub fn positional_encoding(max_len: usize, d_model: usize) -> Result<PositionalEncodingTable> {
    if max_len == 0 {
        return Err(Error::config("positional encoding needs max_len >= 1"));
    }
    if d_model < 2 || d_model % 2 != 0 {
        return Err(Error::config(format!("d_model must be even and >= 2, got {d_model}")));
    }
    let mut values = vec![0.0; max_len * d_model];
    for pos in 0..max_len {
        for k in 0..d_model / 2 {
            let angle = pos as f64 / 10_000f64.powf(2.0 * k as f64 / d_model as f64);
            values[pos * d_model + 2 * k] = angle.sin();
            values[pos * d_model + 2 * k + 1] = angle.cos();
        }
    }
    Ok(PositionalEncodingTable { table: Tensor::new(vec![max_len, d_model], values)? })
}

/// Plain scaled dot-product attention: softmax(QKᵀ/√d_k)·V.
pub fn attention(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    let weights = attention_weights(q, k)?;
    if v.rows() != k.rows() {
        return Err(Error::contract(format!(
            "attention: V has {} rows, K has {}",
            v.rows(),
            k.rows()
        )));
    }
    let (n, dk) = (q.rows(), v.cols());
    let mut out = vec![0.0; n * dk];
    for i in 0..n {
        for j in 0..k.rows() {
            let w = weights.values[i * k.rows() + j];
            for c in 0..dk {
                out[i * dk + c] += w * v.values[j * dk + c];
            }
        }
    }
    Tensor::new(vec![n, dk], out)
}

/// Row-stochastic attention weight matrix softmax(QKᵀ/√d_k).
pub fn attention_weights(q: &Tensor, k: &Tensor) -> Result<Tensor> {
    if q.shape.len() != 2 || k.shape.len() != 2 || q.cols() != k.cols() {
        return Err(Error::contract(format!(
            "attention: Q {:?} and K {:?} must be 2-D with equal widths",
            q.shape, k.shape
        )));
    }
    let (n, m, dk) = (q.rows(), k.rows(), q.cols());
    let scale = 1.0 / (dk as f64).sqrt();
    let mut weights = vec![0.0; n * m];
    for i in 0..n {
        let row = &mut weights[i * m..(i + 1) * m];
        for (j, w) in row.iter_mut().enumerate() {
            let mut dot = 0.0;
            for c in 0..dk {
                dot += q.values[i * dk + c] * k.values[j * dk + c];
            }
            *w = dot * scale;
        }
        softmax_in_place(row);
    }
    Tensor::new(vec![n, m], weights)
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Plain FFN core: ReLU(x·W1 + b1)·W2 + b2, applied per row.
pub fn ffn_core(x: &Tensor, w1: &Tensor, b1: &Tensor, w2: &Tensor, b2: &Tensor) -> Result<Tensor> {
    let (n, d) = (x.rows(), x.cols());
    let h = w1.cols();
    if w1.rows() != d || w2.rows() != h || w2.cols() != d || b1.numel() != h || b2.numel() != d {
        return Err(Error::contract(format!(
            "ffn: shapes x {:?}, W1 {:?}, b1 {:?}, W2 {:?}, b2 {:?} do not conform",
            x.shape, w1.shape, b1.shape, w2.shape, b2.shape
        )));
    }
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        let mut hidden = vec![0.0; h];
        for (j, hv) in hidden.iter_mut().enumerate() {
            let mut acc = b1.values[j];
            for c in 0..d {
                acc += x.values[i * d + c] * w1.values[c * h + j];
            }
            *hv = acc.max(0.0);
        }
        for c in 0..d {
            let mut acc = b2.values[c];
            for (j, hv) in hidden.iter().enumerate() {
                acc += hv * w2.values[j * d + c];
            }
            out[i * d + c] = acc;
        }
    }
    Tensor::new(vec![n, d], out)
}

#[derive(Debug, Clone)]
pub struct HeadParams {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
}

#[derive(Debug, Clone)]
pub struct LayerParams {
    pub heads: Vec<HeadParams>,
    pub wo: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// Full encoder model: embedding, positional table, attention/FFN layers,
/// linear readout.
#[derive(Debug, Clone)]
pub struct EncoderModel {
    pub cfg: EncoderConfig,
    pub max_len: usize,
    pub embed_w: Tensor,
    pub embed_b: Tensor,
    pub pe: PositionalEncodingTable,
    pub layers: Vec<LayerParams>,
    pub readout_w: Tensor,
    pub readout_b: Tensor,
}

pub struct EncoderVars {
    pub embed_w: Var,
    pub embed_b: Var,
    pub layers: Vec<LayerVars>,
    pub readout_w: Var,
    pub readout_b: Var,
}

pub struct LayerVars {
    pub heads: Vec<(Var, Var, Var)>,
    pub wo: Var,
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl EncoderVars {
    /// Every parameter handle, in the same order as `param_tensors`.
    pub fn all(&self) -> Vec<Var> {
        let mut out = vec![self.embed_w, self.embed_b];
        for l in &self.layers {
            for &(q, k, v) in &l.heads {
                out.extend([q, k, v]);
            }
            out.extend([l.wo, l.w1, l.b1, l.w2, l.b2]);
        }
        out.extend([self.readout_w, self.readout_b]);
        out
    }
}

impl EncoderModel {
    pub fn init(cfg: &EncoderConfig, max_len: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_model;
        let dk = cfg.d_k();
        let layers = (0..cfg.layers)
            .map(|_| LayerParams {
                heads: (0..cfg.heads)
                    .map(|_| HeadParams {
                        wq: Tensor::uniform_init(vec![d, dk], d, rng),
                        wk: Tensor::uniform_init(vec![d, dk], d, rng),
                        wv: Tensor::uniform_init(vec![d, dk], d, rng),
                    })
                    .collect(),
                wo: Tensor::uniform_init(vec![d, d], d, rng),
                w1: Tensor::uniform_init(vec![d, cfg.ffn_hidden], d, rng),
                b1: Tensor::zeros(vec![cfg.ffn_hidden]).with_grad(),
                w2: Tensor::uniform_init(vec![cfg.ffn_hidden, d], cfg.ffn_hidden, rng),
                b2: Tensor::zeros(vec![d]).with_grad(),
            })
            .collect();
        Ok(EncoderModel {
            cfg: cfg.clone(),
            max_len,
            embed_w: Tensor::uniform_init(vec![1, d], 1, rng),
            embed_b: Tensor::zeros(vec![d]).with_grad(),
            pe: positional_encoding(max_len, d)?,
            layers,
            readout_w: Tensor::uniform_init(vec![d, 1], d, rng),
            readout_b: Tensor::zeros(vec![1, 1]).with_grad(),
        })
    }

    pub fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.embed_w, &self.embed_b];
        for l in &self.layers {
            for h in &l.heads {
                out.extend([&h.wq, &h.wk, &h.wv]);
            }
            out.extend([&l.wo, &l.w1, &l.b1, &l.w2, &l.b2]);
        }
        out.extend([&self.readout_w, &self.readout_b]);
        out
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.embed_w, &mut self.embed_b];
        for l in &mut self.layers {
            for h in &mut l.heads {
                out.extend([&mut h.wq, &mut h.wk, &mut h.wv]);
            }
            out.extend([&mut l.wo, &mut l.w1, &mut l.b1, &mut l.w2, &mut l.b2]);
        }
        out.extend([&mut self.readout_w, &mut self.readout_b]);
        out
    }

    pub fn push_params(&self, tape: &mut Tape) -> EncoderVars {
        EncoderVars {
            embed_w: tape.param(&self.embed_w),
            embed_b: tape.param(&self.embed_b),
            layers: self
                .layers
                .iter()
                .map(|l| LayerVars {
                    heads: l
                        .heads
                        .iter()
                        .map(|h| (tape.param(&h.wq), tape.param(&h.wk), tape.param(&h.wv)))
                        .collect(),
                    wo: tape.param(&l.wo),
                    w1: tape.param(&l.w1),
                    b1: tape.param(&l.b1),
                    w2: tape.param(&l.w2),
                    b2: tape.param(&l.b2),
                })
                .collect(),
            readout_w: tape.param(&self.readout_w),
            readout_b: tape.param(&self.readout_b),
        }
    }

    pub fn pull_grads(&mut self, tape: &Tape, vars: &EncoderVars) {
        tape.write_grad(vars.embed_w, &mut self.embed_w);
        tape.write_grad(vars.embed_b, &mut self.embed_b);
        for (l, lv) in self.layers.iter_mut().zip(&vars.layers) {
            for (h, hv) in l.heads.iter_mut().zip(&lv.heads) {
                tape.write_grad(hv.0, &mut h.wq);
                tape.write_grad(hv.1, &mut h.wk);
                tape.write_grad(hv.2, &mut h.wv);
            }
            tape.write_grad(lv.wo, &mut l.wo);
            tape.write_grad(lv.w1, &mut l.w1);
            tape.write_grad(lv.b1, &mut l.b1);
            tape.write_grad(lv.w2, &mut l.w2);
            tape.write_grad(lv.b2, &mut l.b2);
        }
        tape.write_grad(vars.readout_w, &mut self.readout_w);
        tape.write_grad(vars.readout_b, &mut self.readout_b);
    }

    pub fn params_finite(&self) -> bool {
        self.param_tensors().iter().all(|t| t.all_finite())
    }

    /// Tape forward for one window: scalar prediction Var of shape [1 × 1].
    /// `dropout_rng` enables inverted-dropout masks on both sublayer cores;
    /// pass `None` for inference (and whenever `cfg.dropout == 0`).
    pub fn forward_vars(
        &self,
        tape: &mut Tape,
        window: &[f64],
        vars: &EncoderVars,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let x = tape.constant_vec(vec![window.len(), 1], window.to_vec())?;
        self.forward_from_var(tape, x, vars, dropout_rng.as_deref_mut())
    }

    /// Tape forward from an already-recorded [len × 1] column, so gradients
    /// can flow back into an upstream denoiser.
    pub fn forward_from_var(
        &self,
        tape: &mut Tape,
        x: Var,
        vars: &EncoderVars,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let shape = tape.shape(x).to_vec();
        if shape.len() != 2 || shape[1] != 1 {
            return Err(Error::contract(format!(
                "encoder forward: expected a [len × 1] column, got {shape:?}"
            )));
        }
        let len = shape[0];
        if len == 0 {
            return Err(Error::contract("encoder forward: empty window"));
        }
        if len > self.max_len {
            return Err(Error::contract(format!(
                "encoder forward: window length {len} exceeds max_len {}",
                self.max_len
            )));
        }
        let d = self.cfg.d_model;
        let mut h = tape.matmul(x, vars.embed_w)?;
        h = tape.add_row_broadcast(h, vars.embed_b)?;
        if self.cfg.use_positional_encoding {
            let pe_rows = self.pe.table.values[..len * d].to_vec();
            let pe = tape.constant_vec(vec![len, d], pe_rows)?;
            h = tape.add(h, pe)?;
        }
        for lv in &vars.layers {
            let mut heads = Vec::with_capacity(lv.heads.len());
            for &(wq, wk, wv) in &lv.heads {
                let q = tape.matmul(h, wq)?;
                let k = tape.matmul(h, wk)?;
                let v = tape.matmul(h, wv)?;
                let kt = tape.transpose(k);
                let scores = tape.matmul(q, kt)?;
                let scores = tape.scale(scores, 1.0 / (self.cfg.d_k() as f64).sqrt());
                let attn = tape.softmax_rows(scores);
                heads.push(tape.matmul(attn, v)?);
            }
            let concat = tape.concat_cols(&heads)?;
            let mut sub = tape.matmul(concat, lv.wo)?;
            sub = self.maybe_dropout(tape, sub, len, d, &mut dropout_rng)?;
            h = if self.cfg.use_residual_norm {
                let res = tape.add(h, sub)?;
                tape.layer_norm_rows(res, LAYER_NORM_EPS)
            } else {
                sub
            };

            let pre = tape.matmul(h, lv.w1)?;
            let pre = tape.add_row_broadcast(pre, lv.b1)?;
            let act = tape.relu(pre);
            let out = tape.matmul(act, lv.w2)?;
            let mut sub = tape.add_row_broadcast(out, lv.b2)?;
            sub = self.maybe_dropout(tape, sub, len, d, &mut dropout_rng)?;
            h = if self.cfg.use_residual_norm {
                let res = tape.add(h, sub)?;
                tape.layer_norm_rows(res, LAYER_NORM_EPS)
            } else {
                sub
            };
        }
        let last = tape.select_row(h, len - 1)?;
        let y = tape.matmul(last, vars.readout_w)?;
        tape.add(y, vars.readout_b)
    }

    fn maybe_dropout(
        &self,
        tape: &mut Tape,
        x: Var,
        rows: usize,
        cols: usize,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> Result<Var> {
        let p = self.cfg.dropout;
        if p == 0.0 {
            return Ok(x);
        }
        let Some(rng) = rng.as_deref_mut() else { return Ok(x) };
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> =
            (0..rows * cols).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
        let mask = tape.constant_vec(vec![rows, cols], mask)?;
        tape.mul(x, mask)
    }

    /// One-step-ahead prediction without gradient tracking.
    pub fn predict(&self, window: &[f64]) -> Result<f64> {
        let mut tape = Tape::new();
        let vars = self.push_params(&mut tape);
        let y = self.forward_vars(&mut tape, window, &vars, None)?;
        tape.scalar(y)
    }

    /// Autoregressive multi-step rollout: each prediction is pushed onto the
    /// sliding window that produces the next one.
    pub fn forecast(&self, seed_window: &[f64], steps: usize) -> Result<Vec<f64>> {
        let mut window = seed_window.to_vec();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let y = self.predict(&window)?;
            out.push(y);
            window.remove(0);
            window.push(y);
        }
        Ok(out)
    }

    /// Multi-head sublayer core for one layer (no residual/norm): per-head
    /// attention on projected Q/K/V, concatenation, W^O projection.
    pub fn multi_head_core(&self, layer: usize, x: &Tensor) -> Result<Tensor> {
        let lp = self
            .layers
            .get(layer)
            .ok_or_else(|| Error::contract(format!("layer {layer} out of range")))?;
        let (n, d) = (x.rows(), x.cols());
        if d != self.cfg.d_model {
            return Err(Error::contract(format!(
                "multi_head: input width {d} != d_model {}",
                self.cfg.d_model
            )));
        }
        let dk = self.cfg.d_k();
        let mut concat = vec![0.0; n * d];
        for (hidx, head) in lp.heads.iter().enumerate() {
            let q = plain_matmul(x, &head.wq)?;
            let k = plain_matmul(x, &head.wk)?;
            let v = plain_matmul(x, &head.wv)?;
            let ctx = attention(&q, &k, &v)?;
            for i in 0..n {
                for c in 0..dk {
                    concat[i * d + hidx * dk + c] = ctx.values[i * dk + c];
                }
            }
        }
        plain_matmul(&Tensor::new(vec![n, d], concat)?, &lp.wo)
    }
}

fn plain_matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.cols() != b.rows() {
        return Err(Error::contract(format!("matmul: {:?} × {:?}", a.shape, b.shape)));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            let mut acc = 0.0;
            for c in 0..k {
                acc += a.values[i * k + c] * b.values[c * m + j];
            }
            out[i * m + j] = acc;
        }
    }
    Tensor::new(vec![n, m], out)
}

/// Sum-of-squares forecasting loss over supervised (window, target) pairs,
/// plus `alpha` times the squared Frobenius norm of every parameter.
pub fn encoder_loss_vars(
    tape: &mut Tape,
    model: &EncoderModel,
    vars: &EncoderVars,
    windows: &[Vec<f64>],
    targets: &[f64],
    alpha: f64,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<Var> {
    if windows.is_empty() || windows.len() != targets.len() {
        return Err(Error::contract("encoder loss: need matching, nonempty windows/targets"));
    }
    let mut rng = dropout_rng;
    let mut total: Option<Var> = None;
    for (w, &t) in windows.iter().zip(targets) {
        let y = model.forward_vars(tape, w, vars, rng.as_deref_mut())?;
        let tv = tape.constant_vec(vec![1, 1], vec![t])?;
        let r = tape.sub(tv, y)?;
        let sq = tape.mul(r, r)?;
        let sq = tape.sum(sq);
        total = Some(match total {
            Some(acc) => tape.add(acc, sq)?,
            None => sq,
        });
    }
    let mut loss = total.expect("nonempty");
    if alpha > 0.0 {
        let mut pen: Option<Var> = None;
        for var in encoder_var_list(vars) {
            let sq = tape.mul(var, var)?;
            let s = tape.sum(sq);
            pen = Some(match pen {
                Some(acc) => tape.add(acc, s)?,
                None => s,
            });
        }
        let pen = tape.scale(pen.expect("params"), alpha);
        loss = tape.add(loss, pen)?;
    }
    Ok(loss)
}

fn encoder_var_list(vars: &EncoderVars) -> Vec<Var> {
    vars.all()
}

/// Train the encoder alone on supervised windows with Adam. Returns the
/// per-epoch loss curve.
pub fn train_encoder(
    model: &mut EncoderModel,
    windows: &[Vec<f64>],
    targets: &[f64],
    lr: f64,
    epochs: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let adam = AdamConfig::new(lr)?;
    let mut state = AdamState::for_params(&model.param_tensors());
    let mut curve = Vec::with_capacity(epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for epoch in 0..epochs {
        let mut tape = Tape::new();
        let vars = model.push_params(&mut tape);
        let drop_rng = if model.cfg.dropout > 0.0 { Some(&mut rng) } else { None };
        let loss = encoder_loss_vars(&mut tape, model, &vars, windows, targets, alpha, drop_rng)?;
        let lv = tape.scalar(loss)?;
        if !lv.is_finite() {
            return Err(Error::Diverged { branch: "encoder".into(), epoch });
        }
        curve.push(lv);
        tape.backward(loss)?;
        model.pull_grads(&tape, &vars);
        adam_step(&mut model.param_tensors_mut(), &mut state, &adam)?;
        if !model.params_finite() {
            return Err(Error::Diverged { branch: "encoder".into(), epoch });
        }
    }
    Ok(curve)
}
