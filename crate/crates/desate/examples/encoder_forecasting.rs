//! Train the self-attention encoder as a one-step capacity forecaster, then
//! roll it out autoregressively past the end of its training range.

use desate::encoder::{train_encoder, EncoderConfig, EncoderModel};
use desate::pipeline::make_windows;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    // capacity fade with a slight curve
    let series: Vec<f64> = (0..80).map(|i| 1.0 - 0.004 * i as f64 - 1e-5 * (i * i) as f64).collect();
    let m = 12;
    let pairs = make_windows(&series[..60], m, 1).unwrap();
    let windows: Vec<Vec<f64>> = pairs.iter().map(|(w, _)| w.clone()).collect();
    let targets: Vec<f64> = pairs.iter().map(|(_, t)| *t).collect();

    let cfg = EncoderConfig { d_model: 16, heads: 2, layers: 1, ffn_hidden: 16, ..Default::default() };
    let mut model = EncoderModel::init(&cfg, m, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let curve = train_encoder(&mut model, &windows, &targets, 1e-2, 500, 1e-6, 21).unwrap();
    println!(
        "trained {} epochs: loss {:.4e} -> {:.4e}",
        curve.len(),
        curve.first().unwrap(),
        curve.last().unwrap()
    );

    println!("\nteacher-forced one-step predictions (training range):");
    for i in [0, 20, 40] {
        let y = model.predict(&windows[i]).unwrap();
        println!("  target {:.5}  predicted {:.5}", targets[i], y);
    }

    println!("\nautoregressive rollout beyond the training range:");
    let seed_window = series[60 - m..60].to_vec();
    let forecast = model.forecast(&seed_window, 20).unwrap();
    for (k, (f, a)) in forecast.iter().zip(&series[60..]).enumerate() {
        if k % 5 == 0 {
            println!("  step {k:>2}: forecast {f:.5}  actual {a:.5}");
        }
    }
}
