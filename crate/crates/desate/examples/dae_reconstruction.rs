//! Train a denoising autoencoder on corrupted capacity windows and measure
//! how much of the injected noise it removes.

use desate::dae::{dae_loss, train_dae, DaeTrainConfig};
use desate::data::{synthetic_series, SyntheticModel};
use desate::noise::{corrupt, NoiseFamily, NoiseSpec};
use desate::pipeline::{make_windows, normalize};

fn main() {
    let series =
        synthetic_series(&SyntheticModel::Linear { fade_rate: 0.004 }, 100, 2.0, 3).unwrap();
    let x = normalize(&series).unwrap();
    let windows: Vec<Vec<f64>> =
        make_windows(&x, 16, 1).unwrap().into_iter().map(|(w, _)| w).collect();
    println!("{} training windows of length 16", windows.len());

    let noise = NoiseSpec::from_level(NoiseFamily::Gaussian, 0.05, 11);
    let cfg = DaeTrainConfig { hidden: 16, lr: 1e-2, epochs: 400, seed: 11, ..Default::default() };
    let out = train_dae(&windows, &noise, &cfg).unwrap();
    println!(
        "trained {} epochs: loss {:.4e} -> {:.4e}",
        out.loss_curve.len(),
        out.loss_curve.first().unwrap(),
        out.loss_curve.last().unwrap()
    );

    // fresh corruption the model has never seen
    let eval_noise = NoiseSpec::from_level(NoiseFamily::Gaussian, 0.05, 999);
    let corrupted: Vec<Vec<f64>> =
        windows.iter().map(|w| corrupt(w, &eval_noise).unwrap()).collect();
    let before: f64 = corrupted
        .iter()
        .zip(&windows)
        .map(|(c, w)| c.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum::<f64>()
        / (windows.len() * 16) as f64;
    let after = dae_loss(&out.model, &corrupted, &windows, 0.0).unwrap();
    println!("corrupted-vs-clean MSE: {before:.4e}");
    println!("reconstructed-vs-clean MSE: {after:.4e}");
    println!("noise reduction factor: {:.2}x", before / after);

    let z = out.model.encode(&corrupted[0]).unwrap();
    println!("latent representation of the first window: {} values, all >= 0", z.len());
}
