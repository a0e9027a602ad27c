//! Versioned JSON checkpoints for trained branches. Every tensor is stored
//! with an explicit shape header and re-validated on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dae::DaeModel;
use crate::encoder::{positional_encoding, EncoderModel, HeadParams, LayerParams};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::pipeline::{BranchConfig, TrainedBranch};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorBlob {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl TensorBlob {
    fn from_tensor(t: &Tensor) -> Self {
        TensorBlob { shape: t.shape.clone(), values: t.values.clone() }
    }

    fn into_tensor(self, expect: &[usize], name: &str) -> Result<Tensor> {
        if self.shape != expect {
            return Err(Error::data(format!(
                "checkpoint tensor {name}: shape {:?} does not match expected {:?}",
                self.shape, expect
            )));
        }
        Ok(Tensor::new(self.shape, self.values)
            .map_err(|e| Error::data(format!("checkpoint tensor {name}: {e}")))?
            .with_grad())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DaeBlob {
    hidden: usize,
    m: usize,
    w: TensorBlob,
    b: TensorBlob,
    w0: TensorBlob,
    b0: TensorBlob,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeadBlob {
    wq: TensorBlob,
    wk: TensorBlob,
    wv: TensorBlob,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerBlob {
    heads: Vec<HeadBlob>,
    wo: TensorBlob,
    w1: TensorBlob,
    b1: TensorBlob,
    w2: TensorBlob,
    b2: TensorBlob,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EncoderBlob {
    max_len: usize,
    embed_w: TensorBlob,
    embed_b: TensorBlob,
    layers: Vec<LayerBlob>,
    readout_w: TensorBlob,
    readout_b: TensorBlob,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: BranchConfig,
    dae: Option<DaeBlob>,
    encoder: EncoderBlob,
    pub loss_curve: Vec<f64>,
}

pub fn save_checkpoint(branch: &TrainedBranch, path: &Path) -> Result<()> {
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        config: branch.config.clone(),
        dae: branch.dae.as_ref().map(|d| DaeBlob {
            hidden: d.hidden,
            m: d.m,
            w: TensorBlob::from_tensor(&d.w),
            b: TensorBlob::from_tensor(&d.b),
            w0: TensorBlob::from_tensor(&d.w0),
            b0: TensorBlob::from_tensor(&d.b0),
        }),
        encoder: EncoderBlob {
            max_len: branch.encoder.max_len,
            embed_w: TensorBlob::from_tensor(&branch.encoder.embed_w),
            embed_b: TensorBlob::from_tensor(&branch.encoder.embed_b),
            layers: branch
                .encoder
                .layers
                .iter()
                .map(|l| LayerBlob {
                    heads: l
                        .heads
                        .iter()
                        .map(|h| HeadBlob {
                            wq: TensorBlob::from_tensor(&h.wq),
                            wk: TensorBlob::from_tensor(&h.wk),
                            wv: TensorBlob::from_tensor(&h.wv),
                        })
                        .collect(),
                    wo: TensorBlob::from_tensor(&l.wo),
                    w1: TensorBlob::from_tensor(&l.w1),
                    b1: TensorBlob::from_tensor(&l.b1),
                    w2: TensorBlob::from_tensor(&l.w2),
                    b2: TensorBlob::from_tensor(&l.b2),
                })
                .collect(),
            readout_w: TensorBlob::from_tensor(&branch.encoder.readout_w),
            readout_b: TensorBlob::from_tensor(&branch.encoder.readout_b),
        },
        loss_curve: branch.loss_curve.clone(),
    };
    let json = serde_json::to_string(&ckpt)?;
    std::fs::write(path, json)
        .map_err(|e| Error::data(format!("cannot write checkpoint {}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<TrainedBranch> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read checkpoint {}: {e}", path.display())))?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("invalid checkpoint {}: {e}", path.display())))?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::data(format!(
            "checkpoint {} has version {}, expected {CHECKPOINT_VERSION}",
            path.display(),
            ckpt.version
        )));
    }
    let cfg = &ckpt.config;
    cfg.validate()?;
    let d = cfg.encoder.d_model;
    let dk = cfg.encoder.d_k();
    let ffn = cfg.encoder.ffn_hidden;
    let enc = ckpt.encoder;

    let dae = match ckpt.dae {
        Some(blob) => Some(DaeModel {
            w: blob.w.into_tensor(&[blob.hidden, blob.m], "dae.w")?,
            b: blob.b.into_tensor(&[blob.hidden], "dae.b")?,
            w0: blob.w0.into_tensor(&[blob.m, blob.hidden], "dae.w0")?,
            b0: blob.b0.into_tensor(&[blob.m], "dae.b0")?,
            hidden: blob.hidden,
            m: blob.m,
        }),
        None => None,
    };

    if enc.layers.len() != cfg.encoder.layers {
        return Err(Error::data(format!(
            "checkpoint has {} encoder layers, config says {}",
            enc.layers.len(),
            cfg.encoder.layers
        )));
    }
    let mut layers = Vec::with_capacity(enc.layers.len());
    for (li, l) in enc.layers.into_iter().enumerate() {
        if l.heads.len() != cfg.encoder.heads {
            return Err(Error::data(format!(
                "checkpoint layer {li} has {} heads, config says {}",
                l.heads.len(),
                cfg.encoder.heads
            )));
        }
        let heads = l
            .heads
            .into_iter()
            .enumerate()
            .map(|(hi, h)| {
                Ok(HeadParams {
                    wq: h.wq.into_tensor(&[d, dk], &format!("layer{li}.head{hi}.wq"))?,
                    wk: h.wk.into_tensor(&[d, dk], &format!("layer{li}.head{hi}.wk"))?,
                    wv: h.wv.into_tensor(&[d, dk], &format!("layer{li}.head{hi}.wv"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        layers.push(LayerParams {
            heads,
            wo: l.wo.into_tensor(&[d, d], &format!("layer{li}.wo"))?,
            w1: l.w1.into_tensor(&[d, ffn], &format!("layer{li}.w1"))?,
            b1: l.b1.into_tensor(&[ffn], &format!("layer{li}.b1"))?,
            w2: l.w2.into_tensor(&[ffn, d], &format!("layer{li}.w2"))?,
            b2: l.b2.into_tensor(&[d], &format!("layer{li}.b2"))?,
        });
    }
    let encoder = EncoderModel {
        cfg: cfg.encoder.clone(),
        max_len: enc.max_len,
        embed_w: enc.embed_w.into_tensor(&[1, d], "embed_w")?,
        embed_b: enc.embed_b.into_tensor(&[d], "embed_b")?,
        pe: positional_encoding(enc.max_len, d)?,
        layers,
        readout_w: enc.readout_w.into_tensor(&[d, 1], "readout_w")?,
        readout_b: enc.readout_b.into_tensor(&[1, 1], "readout_b")?,
    };
    Ok(TrainedBranch { config: ckpt.config, dae, encoder, loss_curve: ckpt.loss_curve })
}
