//! Small hyperparameter sweep over learning rate, depth, width, and noise
//! level, with the ranked trial table written to a CSV.

use desate::data::{synthetic_series, SyntheticModel};
use desate::noise::NoiseFamily;
use desate::pipeline::{
    grid_search, normalize, write_trial_table, DenoiserConfig, GridAxes, GridBase, TrainSchedule,
};
use desate::wavelet::{BoundaryMode, ThresholdMode, WaveletConfig, WaveletFamily};

fn main() {
    let series =
        synthetic_series(&SyntheticModel::Linear { fade_rate: 0.0028 }, 140, 2.0, 5).unwrap();
    let x = normalize(&series).unwrap();
    let (train_x, test_x) = x.split_at(x.len() / 2);

    let base = GridBase {
        family: NoiseFamily::Gaussian,
        denoiser: DenoiserConfig::Wavelet(WaveletConfig {
            family: WaveletFamily::Haar,
            levels: 2,
            mode: ThresholdMode::Hard,
            epsilon: 0.01,
            boundary: BoundaryMode::SymmetricPad,
        }),
        alpha: 1e-5,
        delta: 1.0,
        epochs: 300,
        seed: 5,
        window: 12,
        eol_threshold: 0.7,
        schedule: TrainSchedule::Joint,
    };
    let axes = GridAxes {
        learning_rates: vec![1e-3, 1e-2],
        layers: vec![1],
        hidden_dims: vec![16],
        noise_levels: vec![0.001, 0.01, 0.05],
    };
    println!("sweeping {} trials...", axes.trial_count());
    let records = grid_search(&base, &axes, train_x, test_x).unwrap();

    println!("\nranked by RE:");
    println!("{:<6} {:>7} {:>4} {:>4} {:>6} {:>8} {:>8} {:>8}", "trial", "LR", "NoL", "HD", "NL", "RE", "MAE", "RMSE");
    for r in &records {
        println!(
            "{:<6} {:>7} {:>4} {:>4} {:>6} {:>8.4} {:>8.4} {:>8.4}",
            r.trial_id,
            r.lr,
            r.nol,
            r.hd,
            r.nl,
            r.re.unwrap_or(f64::NAN),
            r.mae.unwrap_or(f64::NAN),
            r.rmse.unwrap_or(f64::NAN)
        );
    }

    let out = std::env::temp_dir().join("desate_grid_trials.csv");
    write_trial_table(&out, &records).unwrap();
    println!("\ntrial table written to {}", out.display());
}
