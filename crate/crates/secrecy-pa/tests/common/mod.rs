//! Oracle estimators that replicate none of the library's computational
//! shortcuts, for cross-checking the production paths.

use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use secrecy_pa::model::{ChannelRealization, Side, SystemConfig, TransmitAlphabet};
use secrecy_pa::numerics::{sample_complex_gaussian, CVector};
use secrecy_pa::rates::RateEstimate;

/// Mutual information estimated entirely in the receiver's raw signal
/// space: the received vector is simulated physically (scaled codeword plus
/// shaped jamming plus thermal noise) and codeword likelihoods use the
/// Mahalanobis form with an explicitly inverted covariance. No whitening,
/// no shared buffers, plain accumulation.
pub fn mahalanobis_mi(
    chan: &ChannelRealization,
    beta: f64,
    side: Side,
    cfg: &SystemConfig,
    alphabet: &TransmitAlphabet,
    n_noise_samples: usize,
    seed: u64,
) -> RateEstimate {
    let h = chan.h(side);
    let n_rx = h.nrows();
    let n_tx = h.ncols();
    let p = cfg.total_power;
    let sigma2 = cfg.sigma2(side);

    let shaped = h * &chan.t_an;
    let mut w = (&shaped * shaped.adjoint()).scale((1.0 - beta) * p);
    for d in 0..n_rx {
        w[(d, d)] += Complex::new(sigma2, 0.0);
    }
    let w_inv = w.try_inverse().expect("noise covariance is positive definite");
    let mahalanobis = |d: &CVector| -> f64 { (d.adjoint() * &w_inv * d)[(0, 0)].re };

    let data_scale = (beta * p).sqrt();
    let an_scale = ((1.0 - beta) * p).sqrt();
    let images: Vec<CVector> = alphabet
        .vectors()
        .iter()
        .map(|x| (h * x).scale(data_scale))
        .collect();
    let k = images.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summands = Vec::with_capacity(k * n_noise_samples);
    for (i, image) in images.iter().enumerate() {
        for _ in 0..n_noise_samples {
            let an = sample_complex_gaussian(&mut rng, n_tx, 1.0).unwrap();
            let thermal = sample_complex_gaussian(&mut rng, n_rx, sigma2).unwrap();
            let received = image + (&shaped * an).scale(an_scale) + thermal;

            let m: Vec<f64> = images.iter().map(|g| mahalanobis(&(&received - g))).collect();
            let exponents: Vec<f64> = m.iter().map(|mj| m[i] - mj).collect();
            let max_e = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max_e + exponents.iter().map(|e| (e - max_e).exp()).sum::<f64>().ln();
            summands.push(((k as f64).ln() - lse) / std::f64::consts::LN_2);
        }
    }

    let n = summands.len() as f64;
    let value = summands.iter().sum::<f64>() / n;
    let var = summands.iter().map(|s| (s - value) * (s - value)).sum::<f64>() / (n - 1.0);
    RateEstimate {
        value,
        std_error: (var / n).sqrt(),
    }
}
