//! Tape-based reverse-mode differentiation on a tiny two-layer network,
//! cross-checked against central finite differences.

use desate::numerics::{adam_step, AdamConfig, AdamState, Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loss_value(w1: &Tensor, w2: &Tensor, x: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let (w1v, w2v, xv) = (tape.param(w1), tape.param(w2), tape.constant(x));
    let h = tape.matmul(xv, w1v).unwrap();
    let h = tape.relu(h);
    let y = tape.matmul(h, w2v).unwrap();
    let sq = tape.mul(y, y).unwrap();
    let l = tape.sum(sq);
    tape.scalar(l).unwrap()
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut w1 = Tensor::uniform_init(vec![3, 4], 3, &mut rng);
    let mut w2 = Tensor::uniform_init(vec![4, 1], 4, &mut rng);
    let x = Tensor::new(vec![2, 3], vec![0.5, -0.2, 0.8, 0.1, 0.9, -0.4]).unwrap();

    // one forward/backward pass
    let mut tape = Tape::new();
    let (w1v, w2v, xv) = (tape.param(&w1), tape.param(&w2), tape.constant(&x));
    let h = tape.matmul(xv, w1v).unwrap();
    let h = tape.relu(h);
    let y = tape.matmul(h, w2v).unwrap();
    let sq = tape.mul(y, y).unwrap();
    let loss = tape.sum(sq);
    println!("loss = {:.6}", tape.scalar(loss).unwrap());
    tape.backward(loss).unwrap();

    // compare a few gradient entries against finite differences
    println!("\ngradient check on w1 (analytic vs central differences):");
    let eps = 1e-6;
    for idx in 0..4 {
        let mut plus = w1.clone();
        plus.values[idx] += eps;
        let mut minus = w1.clone();
        minus.values[idx] -= eps;
        let fd = (loss_value(&plus, &w2, &x) - loss_value(&minus, &w2, &x)) / (2.0 * eps);
        let an = tape.grad(w1v)[idx];
        println!("  w1[{idx}]: {an:+.8}  vs  {fd:+.8}");
    }

    // a few Adam steps shrink the loss
    println!("\nminimizing with Adam:");
    tape.write_grad(w1v, &mut w1);
    tape.write_grad(w2v, &mut w2);
    let cfg = AdamConfig::new(0.05).unwrap();
    let mut state = AdamState::for_params(&[&w1, &w2]);
    for step in 1..=5 {
        adam_step(&mut [&mut w1, &mut w2], &mut state, &cfg).unwrap();
        let mut t = Tape::new();
        let (a, b, xv) = (t.param(&w1), t.param(&w2), t.constant(&x));
        let h = t.matmul(xv, a).unwrap();
        let h = t.relu(h);
        let y = t.matmul(h, b).unwrap();
        let sq = t.mul(y, y).unwrap();
        let l = t.sum(sq);
        println!("  step {step}: loss = {:.6}", t.scalar(l).unwrap());
        t.backward(l).unwrap();
        t.write_grad(a, &mut w1);
        t.write_grad(b, &mut w2);
    }
}
