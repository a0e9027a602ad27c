//! Branch assembly: corrupt → denoise → window → encode, trained under the
//! joint objective (forecast SSE + δ·reconstruction + α·L2), plus branch
//! evaluation with argmin-RE selection, RUL estimation, and grid search.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dae::{self, DaeModel, DaeTrainConfig};
use crate::data::CapacitySeries;
use crate::encoder::{EncoderConfig, EncoderModel};
use crate::error::{Error, Result};
use crate::metrics;
use crate::noise::{corrupt, NoiseFamily, NoiseSpec};
use crate::numerics::{adam_step, AdamConfig, AdamState, Tape, Tensor, Var};
use crate::wavelet::{wavelet_denoise, WaveletConfig};

/// Fraction of rated capacity below which a cell is at end of life.
pub const DEFAULT_EOL_THRESHOLD: f64 = 0.7;
pub const DEFAULT_WINDOW: usize = 16;

const EPOCH_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenoiserConfig {
    Dae(DaeTrainConfig),
    Wavelet(WaveletConfig),
}

impl DenoiserConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            DenoiserConfig::Dae(_) => "dae",
            DenoiserConfig::Wavelet(_) => "wavelet",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DenoiserConfig::Dae(cfg) => cfg.validate(),
            DenoiserConfig::Wavelet(cfg) => cfg.validate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainSchedule {
    /// Denoiser and encoder optimized together through the joint objective.
    #[default]
    Joint,
    /// Denoiser trained first, then frozen while the encoder trains.
    Sequential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Task-balance weight on the reconstruction term.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// L2 penalty coefficient over all learnable parameters.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub lr: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// First series index whose target enters the forecast term; defaults to
    /// the first supervised target (the window length m).
    #[serde(default)]
    pub forecast_start: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub schedule: TrainSchedule,
}

fn default_delta() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    1e-5
}
fn default_epochs() -> usize {
    2000
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            delta: 1.0,
            alpha: 1e-5,
            lr: 1e-3,
            epochs: 2000,
            forecast_start: None,
            seed: 0,
            schedule: TrainSchedule::Joint,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 0.0 {
            return Err(Error::config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.alpha < 0.0 {
            return Err(Error::config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        Ok(())
    }
}

/// One (noise family, denoiser, encoder) triple trained independently.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchConfig {
    pub id: String,
    pub noise: NoiseSpec,
    pub denoiser: DenoiserConfig,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

impl BranchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::config("branch id must be nonempty"));
        }
        if self.window == 0 {
            return Err(Error::config("window length must be >= 1"));
        }
        self.noise.validate()?;
        self.denoiser.validate()?;
        self.encoder.validate()?;
        self.train.validate()
    }
}

#[derive(Debug)]
pub struct TrainedBranch {
    pub config: BranchConfig,
    pub dae: Option<DaeModel>,
    pub encoder: EncoderModel,
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMetrics {
    /// Relative error on RUL cycle counts (autoregressive rollout).
    pub re: f64,
    /// Mean absolute error on teacher-forced capacity predictions.
    pub mae: f64,
    /// Root mean square error on teacher-forced capacity predictions.
    pub rmse: f64,
    /// Mean per-cycle relative error on capacity, reported alongside the
    /// RUL-based RE for transparency.
    pub re_capacity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_branch: BTreeMap<String, BranchMetrics>,
    pub argmin_branch: BTreeMap<String, String>,
    pub selected: String,
    pub eol_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RulEstimate {
    pub eol_threshold: f64,
    pub predicted_eol_cycle: usize,
    pub actual_eol_cycle: usize,
    pub rul_error_cycles: usize,
    pub predicted_crossed: bool,
    pub actual_crossed: bool,
}

/// x'_i = x_i / C₀.
pub fn normalize(series: &CapacitySeries) -> Result<Vec<f64>> {
    if series.rated_capacity_ah <= 0.0 {
        return Err(Error::data(format!(
            "rated capacity must be positive, got {}",
            series.rated_capacity_ah
        )));
    }
    let mut out = Vec::with_capacity(series.capacity_ah.len());
    for (i, &c) in series.capacity_ah.iter().enumerate() {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::data(format!(
                "nonpositive capacity {c} at cycle {}",
                series.cycles[i]
            )));
        }
        out.push(c / series.rated_capacity_ah);
    }
    if out.iter().any(|&v| v > 1.05) {
        log::warn!(
            "battery {}: normalized capacity exceeds 1.05; check rated capacity",
            series.battery_id
        );
    }
    Ok(out)
}

/// Overlapping (window, next-value target) pairs.
/// Count = floor((n − m − 1)/stride) + 1.
pub fn make_windows(x: &[f64], m: usize, stride: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    if m == 0 || stride == 0 {
        return Err(Error::config("window length and stride must be >= 1"));
    }
    let n = x.len();
    if n < m + 1 {
        return Err(Error::data(format!("series of length {n} too short for window {m} + target")));
    }
    let mut out = Vec::new();
    let mut t = 0;
    while t + m < n {
        out.push((x[t..t + m].to_vec(), x[t + m]));
        t += stride;
    }
    debug_assert_eq!(out.len(), (n - m - 1) / stride + 1);
    Ok(out)
}

/// Joint objective evaluated on plain values:
/// Σ(x_t − x̂_t)² + δ·Σ r² + α·Σ‖θ‖²_F.
pub fn joint_loss(
    predictions: &[f64],
    targets: &[f64],
    recon_residuals: &[f64],
    params: &[&Tensor],
    cfg: &TrainConfig,
) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::contract(format!(
            "joint_loss: {} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let forecast: f64 =
        predictions.iter().zip(targets).map(|(p, t)| (t - p) * (t - p)).sum();
    let recon: f64 = recon_residuals.iter().map(|r| r * r).sum();
    let penalty: f64 = params.iter().map(|p| p.frobenius_sq()).sum();
    Ok(forecast + cfg.delta * recon + cfg.alpha * penalty)
}

fn first_crossing(trajectory: &[f64], threshold: f64) -> (usize, bool) {
    match trajectory.iter().position(|&v| v < threshold) {
        Some(i) => (i, true),
        None => (trajectory.len(), false),
    }
}

/// First-crossing EOL on aligned normalized trajectories. A trajectory that
/// never crosses gets EOL = last index + 1 and is flagged.
pub fn estimate_rul(predicted: &[f64], actual: &[f64], threshold: f64) -> Result<RulEstimate> {
    if predicted.is_empty() || actual.is_empty() {
        return Err(Error::contract("estimate_rul: empty trajectory"));
    }
    if !(0.0 < threshold && threshold < 1.0) {
        return Err(Error::config(format!("EOL threshold must be in (0,1), got {threshold}")));
    }
    let (p, p_crossed) = first_crossing(predicted, threshold);
    let (a, a_crossed) = first_crossing(actual, threshold);
    Ok(RulEstimate {
        eol_threshold: threshold,
        predicted_eol_cycle: p,
        actual_eol_cycle: a,
        rul_error_cycles: p.abs_diff(a),
        predicted_crossed: p_crossed,
        actual_crossed: a_crossed,
    })
}

impl TrainedBranch {
    /// Denoised test-time input windows aligned with clean targets.
    fn test_inputs(&self, test_x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let m = self.config.window;
        let pairs = make_windows(test_x, m, 1)?;
        let targets: Vec<f64> = pairs.iter().map(|(_, t)| *t).collect();
        let inputs = match (&self.config.denoiser, &self.dae) {
            (DenoiserConfig::Wavelet(cfg), _) => {
                let denoised = wavelet_denoise(test_x, cfg)?;
                make_windows(&denoised, m, 1)?.into_iter().map(|(w, _)| w).collect()
            }
            (DenoiserConfig::Dae(_), Some(model)) => pairs
                .iter()
                .map(|(w, _)| model.reconstruct(w))
                .collect::<Result<Vec<_>>>()?,
            (DenoiserConfig::Dae(_), None) => {
                return Err(Error::contract(format!(
                    "branch {}: DAE branch has no trained DAE model",
                    self.config.id
                )))
            }
        };
        Ok((inputs, targets))
    }

    /// Teacher-forced one-step predictions plus an autoregressive rollout
    /// from the start of the test horizon.
    pub fn predict_test(&self, test_x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let (inputs, targets) = self.test_inputs(test_x)?;
        let one_step: Vec<f64> =
            inputs.iter().map(|w| self.encoder.predict(w)).collect::<Result<_>>()?;
        let rollout = self.encoder.forecast(&inputs[0], targets.len())?;
        Ok((one_step, rollout, targets))
    }
}

/// Evaluate every branch on the test horizon and select the argmin-RE branch.
pub fn evaluate(
    branches: &[TrainedBranch],
    test_x: &[f64],
    eol_threshold: f64,
) -> Result<MetricsReport> {
    if branches.is_empty() {
        return Err(Error::contract("evaluate: no branches"));
    }
    let mut per_branch = BTreeMap::new();
    for branch in branches {
        let m = evaluate_branch(branch, test_x, eol_threshold)?;
        if per_branch.insert(branch.config.id.clone(), m).is_some() {
            return Err(Error::config(format!("duplicate branch id {}", branch.config.id)));
        }
    }
    assemble_report(per_branch, eol_threshold)
}

/// Metrics for a single trained branch.
pub fn evaluate_branch(
    branch: &TrainedBranch,
    test_x: &[f64],
    eol_threshold: f64,
) -> Result<BranchMetrics> {
    let (one_step, rollout, targets) = branch.predict_test(test_x)?;
    let mae = metrics::mae(&targets, &one_step)?;
    let rmse = metrics::rmse(&targets, &one_step)?;
    if rmse + 1e-9 < mae {
        return Err(Error::contract(format!(
            "branch {}: RMSE {rmse} < MAE {mae}",
            branch.config.id
        )));
    }
    let re_capacity = targets
        .iter()
        .zip(&one_step)
        .map(|(t, p)| metrics::relative_error(*t, *p))
        .sum::<Result<f64>>()?
        / targets.len() as f64;
    let rul = estimate_rul(&rollout, &targets, eol_threshold)?;
    // RE on RUL cycle counts; a zero-cycle actual RUL falls back to a
    // denominator of one cycle to stay defined.
    let re = rul.rul_error_cycles as f64 / (rul.actual_eol_cycle.max(1)) as f64;
    Ok(BranchMetrics { re, mae, rmse, re_capacity })
}

/// Argmin maps and selection from already-computed branch metrics. Ties break
/// toward the lexicographically smallest branch id.
pub fn assemble_report(
    per_branch: BTreeMap<String, BranchMetrics>,
    eol_threshold: f64,
) -> Result<MetricsReport> {
    if per_branch.is_empty() {
        return Err(Error::contract("assemble_report: no branches"));
    }
    let argmin = |f: fn(&BranchMetrics) -> f64| -> String {
        let mut best: Option<(&String, f64)> = None;
        for (id, m) in &per_branch {
            let v = f(m);
            if best.map_or(true, |(_, bv)| v < bv) {
                best = Some((id, v));
            }
        }
        best.expect("nonempty").0.clone()
    };
    let mut argmin_branch = BTreeMap::new();
    argmin_branch.insert("re".to_string(), argmin(|m| m.re));
    argmin_branch.insert("mae".to_string(), argmin(|m| m.mae));
    argmin_branch.insert("rmse".to_string(), argmin(|m| m.rmse));
    let selected = argmin_branch["re"].clone();
    Ok(MetricsReport { per_branch, argmin_branch, selected, eol_threshold })
}

/// Train one branch on a normalized training series.
pub fn train_branch(branch: &BranchConfig, train_x: &[f64]) -> Result<TrainedBranch> {
    branch.validate()?;
    let m = branch.window;
    if train_x.len() < m + 1 {
        return Err(Error::data(format!(
            "branch {}: training series of length {} too short for window {m}",
            branch.id,
            train_x.len()
        )));
    }
    let t_start = branch.train.forecast_start.unwrap_or(m);
    if t_start >= train_x.len() {
        return Err(Error::config(format!(
            "branch {}: forecast start {t_start} leaves no supervised targets",
            branch.id
        )));
    }
    match &branch.denoiser {
        DenoiserConfig::Wavelet(wcfg) => train_wavelet_branch(branch, wcfg, train_x, t_start),
        DenoiserConfig::Dae(dcfg) => match branch.train.schedule {
            TrainSchedule::Joint => train_dae_branch_joint(branch, dcfg, train_x, t_start),
            TrainSchedule::Sequential => {
                train_dae_branch_sequential(branch, dcfg, train_x, t_start)
            }
        },
    }
}

/// Clean supervised pairs whose target index is ≥ t_start.
fn supervised_pairs(x: &[f64], m: usize, t_start: usize) -> Result<Vec<(usize, Vec<f64>, f64)>> {
    let pairs = make_windows(x, m, 1)?;
    let kept: Vec<(usize, Vec<f64>, f64)> = pairs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| i + m >= t_start)
        .map(|(i, (w, t))| (i, w, t))
        .collect();
    if kept.is_empty() {
        return Err(Error::config("forecast region contains no supervised targets"));
    }
    Ok(kept)
}

fn epoch_noise(base: &NoiseSpec, seed: u64, epoch: usize) -> NoiseSpec {
    let mut spec = base.clone();
    spec.seed = seed ^ (epoch as u64).wrapping_mul(EPOCH_SALT);
    spec
}

fn train_wavelet_branch(
    branch: &BranchConfig,
    wcfg: &WaveletConfig,
    train_x: &[f64],
    t_start: usize,
) -> Result<TrainedBranch> {
    let m = branch.window;
    let train = &branch.train;
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut encoder = EncoderModel::init(&branch.encoder, m, &mut rng)?;
    let adam = AdamConfig::new(train.lr)?;
    let mut state = AdamState::for_params(&encoder.param_tensors());
    let clean = supervised_pairs(train_x, m, t_start)?;
    let mut curve = Vec::with_capacity(train.epochs);
    for epoch in 0..train.epochs {
        let spec = epoch_noise(&branch.noise, train.seed, epoch);
        let corrupted = corrupt(train_x, &spec)?;
        let denoised = wavelet_denoise(&corrupted, wcfg)?;
        let windows: Vec<Vec<f64>> =
            clean.iter().map(|(i, _, _)| denoised[*i..*i + m].to_vec()).collect();
        let targets: Vec<f64> = clean.iter().map(|(_, _, t)| *t).collect();

        let mut tape = Tape::new();
        let vars = encoder.push_params(&mut tape);
        let loss = crate::encoder::encoder_loss_vars(
            &mut tape, &encoder, &vars, &windows, &targets, train.alpha, None,
        )?;
        let lv = tape.scalar(loss)?;
        if !lv.is_finite() {
            return Err(Error::Diverged { branch: branch.id.clone(), epoch });
        }
        curve.push(lv);
        tape.backward(loss)?;
        encoder.pull_grads(&tape, &vars);
        adam_step(&mut encoder.param_tensors_mut(), &mut state, &adam)?;
        if !encoder.params_finite() {
            return Err(Error::Diverged { branch: branch.id.clone(), epoch });
        }
    }
    Ok(TrainedBranch { config: branch.clone(), dae: None, encoder, loss_curve: curve })
}

fn train_dae_branch_joint(
    branch: &BranchConfig,
    dcfg: &DaeTrainConfig,
    train_x: &[f64],
    t_start: usize,
) -> Result<TrainedBranch> {
    let m = branch.window;
    let train = &branch.train;
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut dae_model = DaeModel::init(m, dcfg.hidden, &mut rng);
    let mut encoder = EncoderModel::init(&branch.encoder, m, &mut rng)?;
    let adam = AdamConfig::new(train.lr)?;
    let mut state = {
        let mut ps: Vec<&Tensor> =
            vec![&dae_model.w, &dae_model.b, &dae_model.w0, &dae_model.b0];
        ps.extend(encoder.param_tensors());
        AdamState::for_params(&ps)
    };
    let clean = supervised_pairs(train_x, m, t_start)?;
    let clean_rows: Vec<Vec<f64>> = clean.iter().map(|(_, w, _)| w.clone()).collect();
    let clean_tensor = Tensor::from_rows(&clean_rows)?;
    let targets: Vec<f64> = clean.iter().map(|(_, _, t)| *t).collect();
    let mut curve = Vec::with_capacity(train.epochs);

    for epoch in 0..train.epochs {
        let spec = epoch_noise(&branch.noise, train.seed, epoch);
        let corrupted_series = corrupt(train_x, &spec)?;
        let corr_rows: Vec<Vec<f64>> =
            clean.iter().map(|(i, _, _)| corrupted_series[*i..*i + m].to_vec()).collect();
        let corr_tensor = Tensor::from_rows(&corr_rows)?;

        let mut tape = Tape::new();
        let dae_vars = dae_model.push_params(&mut tape);
        let enc_vars = encoder.push_params(&mut tape);
        let corr = tape.constant(&corr_tensor);
        let recon = dae_model.forward_batch(&mut tape, corr, &dae_vars)?;

        // forecast term over the DAE's reconstructions
        let mut loss: Option<Var> = None;
        for (row, &target) in targets.iter().enumerate() {
            let input_row = tape.select_row(recon, row)?;
            let col = tape.transpose(input_row);
            let pred = encoder.forward_from_var(&mut tape, col, &enc_vars, None)?;
            let tv = tape.constant_vec(vec![1, 1], vec![target])?;
            let r = tape.sub(tv, pred)?;
            let sq = tape.mul(r, r)?;
            let sq = tape.sum(sq);
            loss = Some(match loss {
                Some(acc) => tape.add(acc, sq)?,
                None => sq,
            });
        }
        let mut loss = loss.expect("supervised pairs nonempty");

        if train.delta > 0.0 {
            let target = if dcfg.target_corrupted {
                tape.constant(&corr_tensor)
            } else {
                tape.constant(&clean_tensor)
            };
            let resid = tape.sub(target, recon)?;
            let sq = tape.mul(resid, resid)?;
            let s = tape.sum(sq);
            let s = tape.scale(s, train.delta);
            loss = tape.add(loss, s)?;
        }

        if train.alpha > 0.0 {
            let mut all_vars = vec![dae_vars.w, dae_vars.b, dae_vars.w0, dae_vars.b0];
            all_vars.extend(enc_vars.all());
            let mut pen: Option<Var> = None;
            for v in all_vars {
                let sq = tape.mul(v, v)?;
                let s = tape.sum(sq);
                pen = Some(match pen {
                    Some(acc) => tape.add(acc, s)?,
                    None => s,
                });
            }
            let pen = tape.scale(pen.expect("params"), train.alpha);
            loss = tape.add(loss, pen)?;
        }

        let lv = tape.scalar(loss)?;
        if !lv.is_finite() {
            return Err(Error::Diverged { branch: branch.id.clone(), epoch });
        }
        curve.push(lv);
        tape.backward(loss)?;
        dae_model.pull_grads(&tape, &dae_vars);
        encoder.pull_grads(&tape, &enc_vars);
        {
            let mut ps: Vec<&mut Tensor> = vec![
                &mut dae_model.w,
                &mut dae_model.b,
                &mut dae_model.w0,
                &mut dae_model.b0,
            ];
            ps.extend(encoder.param_tensors_mut());
            adam_step(&mut ps, &mut state, &adam)?;
        }
        if !dae_model.params_finite() || !encoder.params_finite() {
            return Err(Error::Diverged { branch: branch.id.clone(), epoch });
        }
    }
    Ok(TrainedBranch { config: branch.clone(), dae: Some(dae_model), encoder, loss_curve: curve })
}

fn train_dae_branch_sequential(
    branch: &BranchConfig,
    dcfg: &DaeTrainConfig,
    train_x: &[f64],
    t_start: usize,
) -> Result<TrainedBranch> {
    let m = branch.window;
    let train = &branch.train;
    let clean = supervised_pairs(train_x, m, t_start)?;
    let all_windows: Vec<Vec<f64>> =
        make_windows(train_x, m, 1)?.into_iter().map(|(w, _)| w).collect();
    let mut dae_cfg = dcfg.clone();
    dae_cfg.seed = train.seed;
    let dae_out = dae::train_dae(&all_windows, &branch.noise, &dae_cfg)?;
    let dae_model = dae_out.model;

    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mut encoder = EncoderModel::init(&branch.encoder, m, &mut rng)?;
    let adam = AdamConfig::new(train.lr)?;
    let mut state = AdamState::for_params(&encoder.param_tensors());
    let targets: Vec<f64> = clean.iter().map(|(_, _, t)| *t).collect();
    let mut curve = Vec::with_capacity(train.epochs);
    for epoch in 0..train.epochs {
        let spec = epoch_noise(&branch.noise, train.seed, epoch);
        let corrupted_series = corrupt(train_x, &spec)?;
        let windows: Vec<Vec<f64>> = clean
            .iter()
            .map(|(i, _, _)| dae_model.reconstruct(&corrupted_series[*i..*i + m]))
            .collect::<Result<_>>()?;
        let mut tape = Tape::new();
        let vars = encoder.push_params(&mut tape);
        let loss = crate::encoder::encoder_loss_vars(
            &mut tape, &encoder, &vars, &windows, &targets, train.alpha, None,
        )?;
        let lv = tape.scalar(loss)?;
        if !lv.is_finite() {
            return Err(Error::Diverged { branch: branch.id.clone(), epoch });
        }
        curve.push(lv);
        tape.backward(loss)?;
        encoder.pull_grads(&tape, &vars);
        adam_step(&mut encoder.param_tensors_mut(), &mut state, &adam)?;
        if !encoder.params_finite() {
            return Err(Error::Diverged { branch: branch.id.clone(), epoch });
        }
    }
    Ok(TrainedBranch { config: branch.clone(), dae: Some(dae_model), encoder, loss_curve: curve })
}

/// Grid axes swept by `grid_search`; the default mirrors the reference grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridAxes {
    pub learning_rates: Vec<f64>,
    pub layers: Vec<usize>,
    pub hidden_dims: Vec<usize>,
    pub noise_levels: Vec<f64>,
}

impl Default for GridAxes {
    fn default() -> Self {
        GridAxes {
            learning_rates: vec![1e-3, 1e-2],
            layers: vec![1, 2],
            hidden_dims: vec![16, 32],
            noise_levels: vec![0.001, 0.01, 0.05],
        }
    }
}

impl GridAxes {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty()
            || self.layers.is_empty()
            || self.hidden_dims.is_empty()
            || self.noise_levels.is_empty()
        {
            return Err(Error::config("grid axes must all be nonempty"));
        }
        Ok(())
    }

    pub fn trial_count(&self) -> usize {
        self.learning_rates.len()
            * self.layers.len()
            * self.hidden_dims.len()
            * self.noise_levels.len()
    }
}

/// Everything a grid trial shares besides the swept axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridBase {
    pub family: NoiseFamily,
    pub denoiser: DenoiserConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_eol")]
    pub eol_threshold: f64,
    #[serde(default)]
    pub schedule: TrainSchedule,
}

fn default_eol() -> f64 {
    DEFAULT_EOL_THRESHOLD
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub noise_family: String,
    pub denoiser_kind: String,
    pub lr: f64,
    pub nol: usize,
    pub hd: usize,
    pub alpha: f64,
    pub nl: f64,
    pub delta: f64,
    pub seed: u64,
    pub re: Option<f64>,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Build the branch configuration for one grid point.
pub fn trial_branch_config(base: &GridBase, lr: f64, nol: usize, hd: usize, nl: f64, id: &str) -> BranchConfig {
    let mut denoiser = base.denoiser.clone();
    if let DenoiserConfig::Dae(cfg) = &mut denoiser {
        // one hidden-dimension knob across the whole model
        cfg.hidden = hd;
        cfg.alpha = base.alpha;
        cfg.lr = lr;
    }
    BranchConfig {
        id: id.to_string(),
        noise: NoiseSpec::from_level(base.family, nl, base.seed),
        denoiser,
        encoder: EncoderConfig {
            d_model: hd,
            heads: 2,
            layers: nol,
            ffn_hidden: hd,
            ..Default::default()
        },
        train: TrainConfig {
            delta: base.delta,
            alpha: base.alpha,
            lr,
            epochs: base.epochs,
            forecast_start: None,
            seed: base.seed,
            schedule: base.schedule,
        },
        window: base.window,
    }
}

/// Cartesian sweep over the grid axes. Trial failures are recorded in the
/// returned table; the sweep never aborts. Rows come back sorted by RE, with
/// failed trials last.
pub fn grid_search(
    base: &GridBase,
    axes: &GridAxes,
    train_x: &[f64],
    test_x: &[f64],
) -> Result<Vec<TrialRecord>> {
    axes.validate()?;
    let mut points = Vec::new();
    for &lr in &axes.learning_rates {
        for &nol in &axes.layers {
            for &hd in &axes.hidden_dims {
                for &nl in &axes.noise_levels {
                    points.push((lr, nol, hd, nl));
                }
            }
        }
    }
    let mut records: Vec<TrialRecord> = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(lr, nol, hd, nl))| {
            let trial_id = format!("t{idx:03}");
            let cfg = trial_branch_config(base, lr, nol, hd, nl, &trial_id);
            let start = Instant::now();
            let outcome = train_branch(&cfg, train_x)
                .and_then(|b| evaluate_branch(&b, test_x, base.eol_threshold));
            let wall_seconds = start.elapsed().as_secs_f64();
            let mut rec = TrialRecord {
                trial_id,
                noise_family: base.family.name().to_string(),
                denoiser_kind: base.denoiser.kind().to_string(),
                lr,
                nol,
                hd,
                alpha: base.alpha,
                nl,
                delta: base.delta,
                seed: base.seed,
                re: None,
                mae: None,
                rmse: None,
                wall_seconds,
                error: None,
            };
            match outcome {
                Ok(m) => {
                    rec.re = Some(m.re);
                    rec.mae = Some(m.mae);
                    rec.rmse = Some(m.rmse);
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect();
    records.sort_by(|a, b| {
        let ka = a.re.unwrap_or(f64::INFINITY);
        let kb = b.re.unwrap_or(f64::INFINITY);
        ka.partial_cmp(&kb).unwrap().then_with(|| a.trial_id.cmp(&b.trial_id))
    });
    Ok(records)
}

pub const TRIAL_TABLE_HEADER: [&str; 14] = [
    "trial_id",
    "noise_family",
    "denoiser_kind",
    "LR",
    "NoL",
    "HD",
    "alpha",
    "NL",
    "delta",
    "seed",
    "RE",
    "MAE",
    "RMSE",
    "wall_seconds",
];

pub fn write_trial_table(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRIAL_TABLE_HEADER)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.trial_id.clone(),
            r.noise_family.clone(),
            r.denoiser_kind.clone(),
            r.lr.to_string(),
            r.nol.to_string(),
            r.hd.to_string(),
            r.alpha.to_string(),
            r.nl.to_string(),
            r.delta.to_string(),
            r.seed.to_string(),
            fmt(r.re),
            fmt(r.mae),
            fmt(r.rmse),
            r.wall_seconds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::data(format!("flushing trial table: {e}")))
}

pub fn read_trial_table(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(TRIAL_TABLE_HEADER) {
        return Err(Error::data(format!(
            "unexpected trial table header in {}: {headers:?}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let parse_f = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|_| {
                Error::data(format!(
                    "row {}: non-numeric value {:?} in column {}",
                    row_idx + 2,
                    field(i),
                    TRIAL_TABLE_HEADER[i]
                ))
            })
        };
        let parse_opt = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                parse_f(i).map(Some)
            }
        };
        out.push(TrialRecord {
            trial_id: field(0).to_string(),
            noise_family: field(1).to_string(),
            denoiser_kind: field(2).to_string(),
            lr: parse_f(3)?,
            nol: parse_f(4)? as usize,
            hd: parse_f(5)? as usize,
            alpha: parse_f(6)?,
            nl: parse_f(7)?,
            delta: parse_f(8)?,
            seed: parse_f(9)? as u64,
            re: parse_opt(10)?,
            mae: parse_opt(11)?,
            rmse: parse_opt(12)?,
            wall_seconds: parse_f(13)?,
            error: None,
        });
    }
    Ok(out)
}
