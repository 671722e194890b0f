//! Secure spatial modulation with artificial noise: how much transmit power
//! should carry data, and how much should jam the eavesdropper?
//!
//! A transmitter with `n_tx` antennas sends one PSK symbol on one active
//! antenna per channel use, so each codeword is a scaled standard basis
//! vector and information rides on both the symbol and the antenna index.
//! The remaining power is spent on artificial noise projected away from the
//! legitimate receiver. For a power fraction `beta` given to data, the
//! transmit vector is
//!
//! ```text
//! s = sqrt(beta P) e_i b_j + sqrt((1 - beta) P) T n
//! ```
//!
//! with `T` the artificial-noise shaping matrix and `n` a complex Gaussian
//! vector. The crate estimates the secrecy rate (legitimate mutual
//! information minus eavesdropper mutual information) of that scheme and
//! selects `beta` by several strategies: a closed form maximising a
//! SINR-times-ANSNR product, gradient ascent on a cut-off rate surrogate,
//! exhaustive grid search, and fixed splits as baselines.
//!
//! Modules are layered bottom up:
//!
//! * [`numerics`]: complex linear algebra helpers (Hermitian eigensolves,
//!   inverse matrix square roots, null-space projectors, Gaussian sampling).
//! * [`model`]: system configuration, transmit alphabet and channel draws.
//! * [`rates`]: Monte Carlo mutual information, secrecy rate, cut-off rate
//!   surrogate and its derivative in `beta`.
//! * [`allocators`]: the power allocation strategies themselves.
//! * [`harness`]: reproducible SNR sweeps and CDF experiments with CSV
//!   output, parallelised over channel realizations.

pub mod allocators;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod rates;
pub mod seeding;
