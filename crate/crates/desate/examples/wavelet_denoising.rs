//! Wavelet shrinkage on a noisy degradation curve: forward transform,
//! per-level thresholding, exact inverse.

use desate::noise::{corrupt, NoiseFamily, NoiseSpec};
use desate::wavelet::{
    dwt, idwt, wavelet_denoise, BoundaryMode, ThresholdMode, WaveletConfig, WaveletFamily,
};

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn main() {
    let clean: Vec<f64> = (0..256)
        .map(|i| 1.0 - 0.0015 * i as f64 + 0.02 * (i as f64 * 0.2).sin())
        .collect();
    let spec = NoiseSpec::from_level(NoiseFamily::Gaussian, 0.05, 99);
    let noisy = corrupt(&clean, &spec).unwrap();
    println!("noisy-vs-clean MSE: {:.3e}", mse(&noisy, &clean));

    // perfect reconstruction without thresholding
    let cfg = WaveletConfig {
        family: WaveletFamily::Daubechies4,
        levels: 3,
        mode: ThresholdMode::Hard,
        epsilon: 0.0,
        boundary: BoundaryMode::SymmetricPad,
    };
    let pyr = dwt(&noisy, &cfg).unwrap();
    let back = idwt(&pyr, &cfg, noisy.len()).unwrap();
    let rt: f64 = noisy.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("round-trip max abs error (3-level db4): {rt:.2e}");
    println!(
        "pyramid: approx {} coefficients, details {:?}",
        pyr.approx.len(),
        pyr.details.iter().map(Vec::len).collect::<Vec<_>>()
    );

    println!("\nshrinkage rules at epsilon = 0.05:");
    for mode in [ThresholdMode::Soft, ThresholdMode::Hard, ThresholdMode::Garrote] {
        let cfg = WaveletConfig { mode, epsilon: 0.05, ..cfg };
        let denoised = wavelet_denoise(&noisy, &cfg).unwrap();
        println!("  {mode:?}: denoised-vs-clean MSE {:.3e}", mse(&denoised, &clean));
    }
}
