//! 1-D multi-level DWT/IDWT with soft, hard, and garrote shrinkage.
//!
//! Analysis is the Mallat cascade. `SymmetricPad` reflects the signal at the
//! edges and keeps `(n + F - 1) / 2` coefficients per band; `PeriodicPad` is
//! the circular (periodized) transform with exactly `ceil(n / 2)` per band,
//! which preserves energy for orthogonal families on even lengths. Both modes
//! reconstruct exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveletFamily {
    Haar,
    Daubechies4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Soft,
    Hard,
    Garrote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMode {
    SymmetricPad,
    PeriodicPad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletConfig {
    pub family: WaveletFamily,
    pub levels: usize,
    pub mode: ThresholdMode,
    pub epsilon: f64,
    pub boundary: BoundaryMode,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        WaveletConfig {
            family: WaveletFamily::Daubechies4,
            levels: 2,
            mode: ThresholdMode::Hard,
            epsilon: 0.01,
            boundary: BoundaryMode::SymmetricPad,
        }
    }
}

impl WaveletConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::config("wavelet levels must be >= 1"));
        }
        if self.epsilon < 0.0 || !self.epsilon.is_finite() {
            return Err(Error::config(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Final-level approximation band plus detail bands, coarsest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPyramid {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
}

impl CoefficientPyramid {
    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }
}

/// Reconstruction (synthesis) low-pass filter, lowest index first.
fn rec_lo(family: WaveletFamily) -> &'static [f64] {
    match family {
        WaveletFamily::Haar => &[std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        WaveletFamily::Daubechies4 => &[
            0.230_377_813_308_855_23,
            0.714_846_570_552_541_5,
            0.630_880_767_929_590_4,
            -0.027_983_769_416_983_85,
            -0.187_034_811_718_881_14,
            0.030_841_381_835_986_965,
            0.032_883_011_666_982_945,
            -0.010_597_401_784_997_278,
        ],
    }
}

struct FilterBank {
    rec_lo: Vec<f64>,
    rec_hi: Vec<f64>,
    dec_lo: Vec<f64>,
    dec_hi: Vec<f64>,
}

fn filter_bank(family: WaveletFamily) -> FilterBank {
    let h = rec_lo(family).to_vec();
    let f = h.len();
    // quadrature mirror: g[k] = (-1)^k h[F-1-k]
    let g: Vec<f64> = (0..f)
        .map(|k| if k % 2 == 0 { h[f - 1 - k] } else { -h[f - 1 - k] })
        .collect();
    let dec_lo: Vec<f64> = h.iter().rev().cloned().collect();
    let dec_hi: Vec<f64> = g.iter().rev().cloned().collect();
    FilterBank { rec_lo: h, rec_hi: g, dec_lo, dec_hi }
}

pub fn filter_length(family: WaveletFamily) -> usize {
    rec_lo(family).len()
}

/// Deepest admissible decomposition for a signal of this length.
pub fn max_levels(signal_len: usize, family: WaveletFamily) -> usize {
    let f = filter_length(family);
    if signal_len < f {
        0
    } else {
        let l = ((signal_len as f64) / (f as f64)).log2().floor() as usize;
        l.max(1)
    }
}

/// Half-sample symmetric extension index (reflects repeatedly).
fn sym_index(k: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let mut k = k.rem_euclid(period);
    if k >= n as isize {
        k = period - 1 - k;
    }
    k as usize
}

fn band_len(n: usize, f: usize, boundary: BoundaryMode) -> usize {
    match boundary {
        BoundaryMode::SymmetricPad => (n + f - 1) / 2,
        BoundaryMode::PeriodicPad => n.div_ceil(2),
    }
}

/// One analysis level: signal of length n -> (approx, detail).
fn analyze(signal: &[f64], bank: &FilterBank, boundary: BoundaryMode) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let f = bank.dec_lo.len();
    match boundary {
        BoundaryMode::SymmetricPad => {
            let o = (n + f - 1) / 2;
            let mut approx = vec![0.0; o];
            let mut detail = vec![0.0; o];
            for i in 0..o {
                let mut a = 0.0;
                let mut d = 0.0;
                for j in 0..f {
                    let k = 2 * i as isize + 1 - j as isize;
                    let x = signal[sym_index(k, n)];
                    a += bank.dec_lo[j] * x;
                    d += bank.dec_hi[j] * x;
                }
                approx[i] = a;
                detail[i] = d;
            }
            (approx, detail)
        }
        BoundaryMode::PeriodicPad => {
            // replicate the last sample so the circular transform sees an
            // even length
            let mut buf;
            let s: &[f64] = if n % 2 == 1 {
                buf = signal.to_vec();
                buf.push(signal[n - 1]);
                &buf
            } else {
                signal
            };
            let ne = s.len();
            let o = ne / 2;
            let mut approx = vec![0.0; o];
            let mut detail = vec![0.0; o];
            for i in 0..o {
                let mut a = 0.0;
                let mut d = 0.0;
                for j in 0..f {
                    let k = (2 * i as isize + 1 - j as isize).rem_euclid(ne as isize) as usize;
                    a += bank.dec_lo[j] * s[k];
                    d += bank.dec_hi[j] * s[k];
                }
                approx[i] = a;
                detail[i] = d;
            }
            (approx, detail)
        }
    }
}

/// One synthesis level: (approx, detail) -> signal of length `out_len`.
fn synthesize(
    approx: &[f64],
    detail: &[f64],
    bank: &FilterBank,
    boundary: BoundaryMode,
    out_len: usize,
) -> Result<Vec<f64>> {
    if approx.len() != detail.len() {
        return Err(Error::contract(format!(
            "band length mismatch: approx {} vs detail {}",
            approx.len(),
            detail.len()
        )));
    }
    let f = bank.rec_lo.len();
    let expect = band_len(out_len, f, boundary);
    if approx.len() != expect {
        return Err(Error::contract(format!(
            "pyramid inconsistent: band length {} does not reconstruct {} samples (want {expect})",
            approx.len(),
            out_len
        )));
    }
    match boundary {
        BoundaryMode::SymmetricPad => {
            let mut out = vec![0.0; out_len];
            for (o, (&a, &d)) in approx.iter().zip(detail).enumerate() {
                let base = 2 * o as isize + 2 - f as isize;
                for j in 0..f {
                    let n = base + j as isize;
                    if n >= 0 && (n as usize) < out_len {
                        out[n as usize] += a * bank.rec_lo[j] + d * bank.rec_hi[j];
                    }
                }
            }
            Ok(out)
        }
        BoundaryMode::PeriodicPad => {
            let ne = if out_len % 2 == 1 { out_len + 1 } else { out_len };
            let mut out = vec![0.0; ne];
            for (i, (&a, &d)) in approx.iter().zip(detail).enumerate() {
                for j in 0..f {
                    let n = (2 * i as isize + 1 - j as isize).rem_euclid(ne as isize) as usize;
                    out[n] += a * bank.dec_lo[j] + d * bank.dec_hi[j];
                }
            }
            out.truncate(out_len);
            Ok(out)
        }
    }
}

/// Per-level signal lengths `[n, len1, ..., len_levels]` for a cascade.
fn level_lengths(n: usize, cfg: &WaveletConfig) -> Vec<usize> {
    let f = filter_length(cfg.family);
    let mut lens = vec![n];
    let mut cur = n;
    for _ in 0..cfg.levels {
        cur = band_len(cur, f, cfg.boundary);
        lens.push(cur);
    }
    lens
}

pub fn dwt(signal: &[f64], cfg: &WaveletConfig) -> Result<CoefficientPyramid> {
    cfg.validate()?;
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("dwt: non-finite input"));
    }
    let admissible = max_levels(signal.len(), cfg.family);
    if cfg.levels > admissible {
        return Err(Error::config(format!(
            "signal of length {} supports at most {admissible} level(s) for this family, requested {}",
            signal.len(),
            cfg.levels
        )));
    }
    let bank = filter_bank(cfg.family);
    let mut approx = signal.to_vec();
    let mut details_fine_first = Vec::with_capacity(cfg.levels);
    for _ in 0..cfg.levels {
        let (a, d) = analyze(&approx, &bank, cfg.boundary);
        approx = a;
        details_fine_first.push(d);
    }
    details_fine_first.reverse(); // coarsest first
    Ok(CoefficientPyramid { approx, details: details_fine_first })
}

fn shrink_one(theta: f64, eps: f64, mode: ThresholdMode) -> f64 {
    match mode {
        ThresholdMode::Soft => theta.signum() * (theta.abs() - eps).max(0.0),
        ThresholdMode::Hard => {
            if theta.abs() >= eps {
                theta
            } else {
                0.0
            }
        }
        ThresholdMode::Garrote => {
            if theta == 0.0 {
                0.0
            } else {
                theta.signum() * (theta.abs() - eps).max(0.0) / (1.0 + eps / theta.abs())
            }
        }
    }
}

/// Shrink detail bands; the approximation band is left untouched.
pub fn threshold(pyr: &CoefficientPyramid, cfg: &WaveletConfig) -> CoefficientPyramid {
    CoefficientPyramid {
        approx: pyr.approx.clone(),
        details: pyr
            .details
            .iter()
            .map(|band| band.iter().map(|&t| shrink_one(t, cfg.epsilon, cfg.mode)).collect())
            .collect(),
    }
}

pub fn idwt(pyr: &CoefficientPyramid, cfg: &WaveletConfig, original_length: usize) -> Result<Vec<f64>> {
    cfg.validate()?;
    if pyr.details.len() != cfg.levels {
        return Err(Error::contract(format!(
            "pyramid has {} detail bands, config says {} levels",
            pyr.details.len(),
            cfg.levels
        )));
    }
    let lens = level_lengths(original_length, cfg);
    if pyr.approx.len() != lens[cfg.levels] {
        return Err(Error::contract(format!(
            "approx band length {} inconsistent with original length {original_length}",
            pyr.approx.len()
        )));
    }
    let bank = filter_bank(cfg.family);
    let mut approx = pyr.approx.clone();
    // details are coarsest first; level l detail pairs with lens[l+1] bands
    for (band_idx, detail) in pyr.details.iter().enumerate() {
        let level = cfg.levels - 1 - band_idx;
        approx = synthesize(&approx, detail, &bank, cfg.boundary, lens[level])?;
    }
    Ok(approx)
}

/// dwt -> threshold -> idwt; output length equals input length.
pub fn wavelet_denoise(signal: &[f64], cfg: &WaveletConfig) -> Result<Vec<f64>> {
    let pyr = dwt(signal, cfg)?;
    let shrunk = threshold(&pyr, cfg);
    idwt(&shrunk, cfg, signal.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn cfg(family: WaveletFamily, levels: usize, boundary: BoundaryMode) -> WaveletConfig {
        WaveletConfig { family, levels, mode: ThresholdMode::Soft, epsilon: 0.0, boundary }
    }

    #[test]
    fn db4_filter_is_orthonormal() {
        let h = rec_lo(WaveletFamily::Daubechies4);
        assert!((h.iter().sum::<f64>() - SQRT2).abs() < 1e-12);
        assert!((h.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        for lag in [2usize, 4, 6] {
            let ac: f64 = (0..h.len() - lag).map(|k| h[k] * h[k + lag]).sum();
            assert!(ac.abs() < 1e-12, "autocorrelation at lag {lag} = {ac}");
        }
    }

    #[test]
    fn haar_constant_signal_kills_details() {
        let c = cfg(WaveletFamily::Haar, 1, BoundaryMode::SymmetricPad);
        let pyr = dwt(&[1.0, 1.0, 1.0, 1.0], &c).unwrap();
        assert_eq!(pyr.approx.len(), 2);
        for a in &pyr.approx {
            assert!((a - SQRT2).abs() < 1e-12);
        }
        for d in &pyr.details[0] {
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn haar_pure_oscillation() {
        let c = cfg(WaveletFamily::Haar, 1, BoundaryMode::SymmetricPad);
        let pyr = dwt(&[1.0, -1.0], &c).unwrap();
        assert_eq!(pyr.approx, vec![0.0]);
        assert!((pyr.details[0][0] - SQRT2).abs() < 1e-12);
    }

    /// Independent reference: symmetric-extend, full convolution with the
    /// reversed filter, downsample at odd indices.
    fn naive_dwt_band(signal: &[f64], filter: &[f64], n_out: usize) -> Vec<f64> {
        let n = signal.len();
        (0..n_out)
            .map(|i| {
                (0..filter.len())
                    .map(|j| {
                        let k = 2 * i as isize + 1 - j as isize;
                        filter[j] * signal[sym_index(k, n)]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn db4_matches_naive_convolution_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let signal: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = cfg(WaveletFamily::Daubechies4, 1, BoundaryMode::SymmetricPad);
        let pyr = dwt(&signal, &c).unwrap();
        let bank = filter_bank(WaveletFamily::Daubechies4);
        let a_ref = naive_dwt_band(&signal, &bank.dec_lo, pyr.approx.len());
        let d_ref = naive_dwt_band(&signal, &bank.dec_hi, pyr.details[0].len());
        for (x, y) in pyr.approx.iter().zip(&a_ref) {
            assert!((x - y).abs() < 1e-10);
        }
        for (x, y) in pyr.details[0].iter().zip(&d_ref) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn too_short_signal_rejected() {
        let c = cfg(WaveletFamily::Daubechies4, 3, BoundaryMode::SymmetricPad);
        assert!(dwt(&[1.0; 16], &c).is_err());
    }

    #[test]
    fn round_trip_exact_all_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &n in &[4usize, 7, 16, 100, 257] {
            let signal: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for family in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
                let lmax = max_levels(n, family);
                if lmax == 0 {
                    continue;
                }
                for boundary in [BoundaryMode::SymmetricPad, BoundaryMode::PeriodicPad] {
                    for levels in 1..=lmax {
                        let c = cfg(family, levels, boundary);
                        let pyr = dwt(&signal, &c).unwrap();
                        assert!(pyr.coefficient_count() >= n);
                        let back = idwt(&pyr, &c, n).unwrap();
                        let err = signal
                            .iter()
                            .zip(&back)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max);
                        assert!(err <= 1e-9, "{family:?}/{boundary:?}/{levels}/{n}: {err}");
                    }
                }
            }
        }
    }

    #[test]
    fn db4_round_trip_length_100_three_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let signal: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = cfg(WaveletFamily::Daubechies4, 3, BoundaryMode::SymmetricPad);
        let pyr = dwt(&signal, &c).unwrap();
        let back = idwt(&pyr, &c, 100).unwrap();
        for (x, y) in signal.iter().zip(&back) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn periodic_mode_preserves_energy_even_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &n in &[16usize, 64, 128] {
            let signal: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for family in [WaveletFamily::Haar, WaveletFamily::Daubechies4] {
                let c = cfg(family, 1, BoundaryMode::PeriodicPad);
                let pyr = dwt(&signal, &c).unwrap();
                let e_sig: f64 = signal.iter().map(|x| x * x).sum();
                let e_coef: f64 = pyr.approx.iter().map(|x| x * x).sum::<f64>()
                    + pyr.details[0].iter().map(|x| x * x).sum::<f64>();
                assert!((e_sig - e_coef).abs() / e_sig < 1e-9, "{family:?} n={n}");
            }
        }
    }

    #[test]
    fn all_zero_pyramid_gives_zero_signal() {
        let c = cfg(WaveletFamily::Haar, 2, BoundaryMode::SymmetricPad);
        let pyr = dwt(&vec![0.0; 32], &c).unwrap();
        let back = idwt(&pyr, &c, 32).unwrap();
        assert!(back.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn inconsistent_pyramid_rejected() {
        let c = cfg(WaveletFamily::Haar, 1, BoundaryMode::SymmetricPad);
        let mut pyr = dwt(&[1.0, 2.0, 3.0, 4.0], &c).unwrap();
        pyr.approx.push(0.0);
        assert!(idwt(&pyr, &c, 4).is_err());
    }

    #[test]
    fn shrinkage_rules_direct_cases() {
        assert!((shrink_one(0.5, 0.2, ThresholdMode::Soft) - 0.3).abs() < 1e-15);
        assert_eq!(shrink_one(-0.1, 0.2, ThresholdMode::Soft), 0.0);
        assert_eq!(shrink_one(0.1, 0.2, ThresholdMode::Hard), 0.0);
        assert_eq!(shrink_one(0.3, 0.2, ThresholdMode::Hard), 0.3);
        assert!((shrink_one(1.0, 0.5, ThresholdMode::Garrote) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(shrink_one(0.0, 0.5, ThresholdMode::Garrote), 0.0);
    }

    #[test]
    fn shrinkage_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let theta: f64 = rng.gen_range(-3.0..3.0);
            let e1: f64 = rng.gen_range(0.0..1.0);
            let e2 = e1 + rng.gen_range(0.0..1.0);
            let soft = shrink_one(theta, e1, ThresholdMode::Soft);
            let hard = shrink_one(theta, e1, ThresholdMode::Hard);
            let gar = shrink_one(theta, e1, ThresholdMode::Garrote);
            // monotone shrinkage
            for v in [soft, hard, gar] {
                assert!(v.abs() <= theta.abs() + 1e-15);
            }
            // the garrote rule divides soft by (1 + eps/|theta|) >= 1
            assert!(gar.abs() <= soft.abs() + 1e-15);
            assert!(soft.abs() <= hard.abs() + 1e-15);
            // larger threshold never grows magnitude (soft/garrote)
            for mode in [ThresholdMode::Soft, ThresholdMode::Garrote] {
                assert!(shrink_one(theta, e2, mode).abs() <= shrink_one(theta, e1, mode).abs() + 1e-15);
            }
            // hard: zero set grows with the threshold
            if shrink_one(theta, e1, ThresholdMode::Hard) == 0.0 {
                assert_eq!(shrink_one(theta, e2, ThresholdMode::Hard), 0.0);
            }
        }
    }

    #[test]
    fn threshold_leaves_approx_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let signal: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut c = cfg(WaveletFamily::Daubechies4, 2, BoundaryMode::SymmetricPad);
        c.epsilon = 0.5;
        c.mode = ThresholdMode::Hard;
        let pyr = dwt(&signal, &c).unwrap();
        let shrunk = threshold(&pyr, &c);
        assert_eq!(pyr.approx, shrunk.approx);
    }

    #[test]
    fn denoise_zero_epsilon_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let signal: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut c = WaveletConfig::default();
        c.epsilon = 0.0;
        let out = wavelet_denoise(&signal, &c).unwrap();
        for (x, y) in signal.iter().zip(&out) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn denoise_constant_signal_any_epsilon() {
        let signal = vec![0.8; 40];
        for eps in [0.001, 0.01, 0.05] {
            let c = WaveletConfig { epsilon: eps, ..Default::default() };
            let out = wavelet_denoise(&signal, &c).unwrap();
            for (x, y) in signal.iter().zip(&out) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn denoise_reduces_noise_on_sine() {
        use crate::noise::{corrupt, NoiseFamily, NoiseSpec};
        let n = 256;
        let clean: Vec<f64> =
            (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / 64.0).sin()).collect();
        let spec = NoiseSpec::from_level(NoiseFamily::Gaussian, 0.05, 44);
        let noisy = corrupt(&clean, &spec).unwrap();
        let c = WaveletConfig {
            family: WaveletFamily::Daubechies4,
            levels: 3,
            mode: ThresholdMode::Hard,
            epsilon: 0.05,
            boundary: BoundaryMode::SymmetricPad,
        };
        let denoised = wavelet_denoise(&noisy, &c).unwrap();
        let rmse = |a: &[f64], b: &[f64]| {
            (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
        };
        assert!(rmse(&denoised, &clean) < rmse(&noisy, &clean));
    }
}
