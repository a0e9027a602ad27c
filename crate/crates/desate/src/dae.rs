//! Denoising autoencoder: ReLU encoder, identity decoder, Frobenius-norm
//! weight penalty. Reconstruction targets the clean window by default; the
//! literal corrupted-target variant sits behind a config flag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{corrupt, NoiseSpec};
use crate::numerics::{adam_step, AdamConfig, AdamState, Tape, Tensor, Var};

/// Encoder/decoder parameters. `w` is [hidden × m], `w0` is [m × hidden].
#[derive(Debug, Clone)]
pub struct DaeModel {
    pub w: Tensor,
    pub b: Tensor,
    pub w0: Tensor,
    pub b0: Tensor,
    pub hidden: usize,
    pub m: usize,
}

impl DaeModel {
    pub fn init(m: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        DaeModel {
            w: Tensor::uniform_init(vec![hidden, m], m, rng),
            b: Tensor::zeros(vec![hidden]).with_grad(),
            w0: Tensor::uniform_init(vec![m, hidden], hidden, rng),
            b0: Tensor::zeros(vec![m]).with_grad(),
            hidden,
            m,
        }
    }

    /// z = ReLU(W·x_corr + b)
    pub fn encode(&self, x_corr: &[f64]) -> Result<Vec<f64>> {
        if x_corr.len() != self.m {
            return Err(Error::contract(format!(
                "encode: window length {} != m = {}",
                x_corr.len(),
                self.m
            )));
        }
        let mut z = vec![0.0; self.hidden];
        for h in 0..self.hidden {
            let mut acc = self.b.values[h];
            for j in 0..self.m {
                acc += self.w.values[h * self.m + j] * x_corr[j];
            }
            z[h] = acc.max(0.0);
        }
        Ok(z)
    }

    /// x̂ = W₀·z + b₀ (identity output activation)
    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.hidden {
            return Err(Error::contract(format!(
                "decode: latent length {} != hidden = {}",
                z.len(),
                self.hidden
            )));
        }
        let mut x = vec![0.0; self.m];
        for j in 0..self.m {
            let mut acc = self.b0.values[j];
            for h in 0..self.hidden {
                acc += self.w0.values[j * self.hidden + h] * z[h];
            }
            x[j] = acc;
        }
        Ok(x)
    }

    pub fn reconstruct(&self, x_corr: &[f64]) -> Result<Vec<f64>> {
        self.decode(&self.encode(x_corr)?)
    }

    /// Tape forward over a batch of windows (rows of `x_corr`): returns the
    /// reconstruction [n × m].
    pub fn forward_batch(&self, tape: &mut Tape, x_corr: Var, params: &DaeVars) -> Result<Var> {
        let wt = tape.transpose(params.w);
        let pre = tape.matmul(x_corr, wt)?;
        let pre = tape.add_row_broadcast(pre, params.b)?;
        let z = tape.relu(pre);
        let w0t = tape.transpose(params.w0);
        let dec = tape.matmul(z, w0t)?;
        tape.add_row_broadcast(dec, params.b0)
    }

    pub fn push_params(&self, tape: &mut Tape) -> DaeVars {
        DaeVars {
            w: tape.param(&self.w),
            b: tape.param(&self.b),
            w0: tape.param(&self.w0),
            b0: tape.param(&self.b0),
        }
    }

    pub fn pull_grads(&mut self, tape: &Tape, vars: &DaeVars) {
        tape.write_grad(vars.w, &mut self.w);
        tape.write_grad(vars.b, &mut self.b);
        tape.write_grad(vars.w0, &mut self.w0);
        tape.write_grad(vars.b0, &mut self.b0);
    }

    pub fn params_finite(&self) -> bool {
        [&self.w, &self.b, &self.w0, &self.b0].iter().all(|t| t.all_finite())
    }
}

/// Tape handles for one forward pass of the model's parameters.
#[derive(Debug, Clone, Copy)]
pub struct DaeVars {
    pub w: Var,
    pub b: Var,
    pub w0: Var,
    pub b0: Var,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DaeTrainConfig {
    /// Weight-penalty coefficient on ‖W‖²_F + ‖W₀‖²_F.
    pub alpha: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Reconstruct the corrupted window instead of the clean one (the
    /// literal objective); off by default.
    #[serde(default)]
    pub target_corrupted: bool,
}

fn default_hidden() -> usize {
    16
}

impl Default for DaeTrainConfig {
    fn default() -> Self {
        DaeTrainConfig {
            alpha: 1e-5,
            lr: 1e-3,
            epochs: 300,
            seed: 0,
            hidden: 16,
            target_corrupted: false,
        }
    }
}

impl DaeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.lr <= 0.0 {
            return Err(Error::config(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden must be >= 1"));
        }
        Ok(())
    }
}

/// L_d = mean((target − x̂)²) + α·(‖W‖²_F + ‖W₀‖²_F), evaluated outside the
/// tape. The mean runs over every scalar entry of the batch.
pub fn dae_loss(model: &DaeModel, x_corr: &[Vec<f64>], target: &[Vec<f64>], alpha: f64) -> Result<f64> {
    if x_corr.is_empty() || x_corr.len() != target.len() {
        return Err(Error::contract("dae_loss: need matching, nonempty window batches"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (xc, t) in x_corr.iter().zip(target) {
        let rec = model.reconstruct(xc)?;
        for (r, tv) in rec.iter().zip(t) {
            let d = tv - r;
            sum += d * d;
            count += 1;
        }
    }
    Ok(sum / count as f64 + alpha * (model.w.frobenius_sq() + model.w0.frobenius_sq()))
}

/// Result of a training run: the model plus the per-epoch loss curve.
pub struct DaeTrainOutcome {
    pub model: DaeModel,
    pub loss_curve: Vec<f64>,
}

/// Train on clean windows, resampling the corruption each epoch.
pub fn train_dae(
    windows: &[Vec<f64>],
    noise: &NoiseSpec,
    cfg: &DaeTrainConfig,
) -> Result<DaeTrainOutcome> {
    cfg.validate()?;
    if windows.is_empty() {
        return Err(Error::contract("train_dae: no windows"));
    }
    let m = windows[0].len();
    if windows.iter().any(|w| w.len() != m) {
        return Err(Error::contract("train_dae: ragged windows"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = DaeModel::init(m, cfg.hidden, &mut rng);
    let adam = AdamConfig::new(cfg.lr)?;
    let mut state =
        AdamState::for_params(&[&model.w, &model.b, &model.w0, &model.b0]);
    let mut loss_curve = Vec::with_capacity(cfg.epochs);

    let clean = Tensor::from_rows(windows)?;
    for epoch in 0..cfg.epochs {
        let mut spec = noise.clone();
        spec.seed = cfg.seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let corrupted: Vec<Vec<f64>> =
            windows.iter().map(|w| corrupt(w, &spec)).collect::<Result<_>>()?;
        let corr = Tensor::from_rows(&corrupted)?;

        let mut tape = Tape::new();
        let x = tape.constant(&corr);
        let target = if cfg.target_corrupted { tape.constant(&corr) } else { tape.constant(&clean) };
        let vars = model.push_params(&mut tape);
        let xhat = model.forward_batch(&mut tape, x, &vars)?;
        let resid = tape.sub(target, xhat)?;
        let sq = tape.mul(resid, resid)?;
        let mut loss = tape.mean(sq);
        if cfg.alpha > 0.0 {
            let wsq = tape.mul(vars.w, vars.w)?;
            let w0sq = tape.mul(vars.w0, vars.w0)?;
            let wsum = tape.sum(wsq);
            let w0sum = tape.sum(w0sq);
            let pen = tape.add(wsum, w0sum)?;
            let pen = tape.scale(pen, cfg.alpha);
            loss = tape.add(loss, pen)?;
        }
        let lv = tape.scalar(loss)?;
        if !lv.is_finite() {
            return Err(Error::Diverged { branch: "dae".into(), epoch });
        }
        loss_curve.push(lv);
        tape.backward(loss)?;
        model.pull_grads(&tape, &vars);
        adam_step(
            &mut [&mut model.w, &mut model.b, &mut model.w0, &mut model.b0],
            &mut state,
            &adam,
        )?;
        if !model.params_finite() {
            return Err(Error::Diverged { branch: "dae".into(), epoch });
        }
    }
    Ok(DaeTrainOutcome { model, loss_curve })
}
