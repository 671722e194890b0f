//! System parameters, transmit alphabet, and random channel generation.
//!
//! A spatial modulation codeword activates exactly one of `n_tx` antennas
//! and sends one constellation symbol on it, so the alphabet is the set of
//! `n_tx * mod_order` vectors `e_i * b_j`. Channels to the legitimate
//! receiver (Bob) and the eavesdropper (Eve) are i.i.d. Rayleigh; each
//! realization also carries the artificial-noise shaping matrix, which by
//! default projects onto the null space of Bob's channel so the jamming
//! never touches him.

use nalgebra::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    fill_complex_gaussian, null_space_projector, CMatrix, CVector, NumericsError,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{field} must be a power of two >= 2, got {value}")]
    BadOrder { field: &'static str, value: usize },
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("{field} must be >= 1, got 0")]
    NoReceiveAntennas { field: &'static str },
    #[error("null-space artificial noise needs n_rx_bob < n_tx, got {n_rx_bob} >= {n_tx}")]
    NoAnDimensions { n_rx_bob: usize, n_tx: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which receiver a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bob,
    Eve,
}

/// How the artificial-noise shaping matrix is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnMode {
    /// Project onto the null space of Bob's channel; the jamming is
    /// invisible to Bob and only degrades Eve.
    NullSpace,
    /// Spread the jamming power evenly over all transmit antennas; both
    /// receivers see it.
    Isotropic,
}

/// Fixed parameters of one link configuration.
///
/// `total_power` is the whole transmit budget `P`, split between data and
/// artificial noise by the allocation fraction `beta`; the noise variances
/// are per receive antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx_bob: usize,
    pub n_rx_eve: usize,
    pub mod_order: usize,
    pub total_power: f64,
    pub sigma2_bob: f64,
    pub sigma2_eve: f64,
}

fn power_of_two_at_least_two(value: usize) -> bool {
    value >= 2 && value.is_power_of_two()
}

impl SystemConfig {
    /// Checks the mode-independent invariants: antenna and modulation
    /// orders are powers of two (their logs are the index bit counts),
    /// powers and noise variances are positive, receiver antenna counts
    /// are nonzero.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !power_of_two_at_least_two(self.n_tx) {
            return Err(ModelError::BadOrder {
                field: "n_tx",
                value: self.n_tx,
            });
        }
        if !power_of_two_at_least_two(self.mod_order) {
            return Err(ModelError::BadOrder {
                field: "mod_order",
                value: self.mod_order,
            });
        }
        if self.n_rx_bob == 0 {
            return Err(ModelError::NoReceiveAntennas { field: "n_rx_bob" });
        }
        if self.n_rx_eve == 0 {
            return Err(ModelError::NoReceiveAntennas { field: "n_rx_eve" });
        }
        for (field, value) in [
            ("total_power", self.total_power),
            ("sigma2_bob", self.sigma2_bob),
            ("sigma2_eve", self.sigma2_eve),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ModelError::NonPositive { field, value });
            }
        }
        Ok(())
    }

    /// Number of bits carried per channel use, `log2(n_tx * mod_order)`.
    pub fn bits_per_use(&self) -> u32 {
        (self.n_tx * self.mod_order).trailing_zeros()
    }

    pub fn n_rx(&self, side: Side) -> usize {
        match side {
            Side::Bob => self.n_rx_bob,
            Side::Eve => self.n_rx_eve,
        }
    }

    pub fn sigma2(&self, side: Side) -> f64 {
        match side {
            Side::Bob => self.sigma2_bob,
            Side::Eve => self.sigma2_eve,
        }
    }
}

/// The `n_tx * mod_order` spatial modulation codewords, indexed by
/// `k = antenna * mod_order + symbol`.
#[derive(Debug, Clone)]
pub struct TransmitAlphabet {
    vectors: Vec<CVector>,
    n_tx: usize,
    mod_order: usize,
}

impl TransmitAlphabet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn mod_order(&self) -> usize {
        self.mod_order
    }

    /// Maps a flat codeword index to its (antenna, symbol) pair.
    pub fn index_pair(&self, k: usize) -> (usize, usize) {
        assert!(k < self.vectors.len(), "codeword index {k} out of range");
        (k / self.mod_order, k % self.mod_order)
    }

    /// Maps an (antenna, symbol) pair to its flat codeword index.
    pub fn index_of(&self, antenna: usize, symbol: usize) -> usize {
        assert!(antenna < self.n_tx, "antenna index {antenna} out of range");
        assert!(symbol < self.mod_order, "symbol index {symbol} out of range");
        antenna * self.mod_order + symbol
    }
}

/// One random draw of both channels plus the artificial-noise shaping
/// matrix.
///
/// `t_an` is trace-normalized so that `trace(T T^H) = 1`; with the noise
/// vector at identity covariance this makes the expected jamming power
/// exactly the `(1 - beta) P` budget.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h_bob: CMatrix,
    pub h_eve: CMatrix,
    pub t_an: CMatrix,
}

impl ChannelRealization {
    pub fn h(&self, side: Side) -> &CMatrix {
        match side {
            Side::Bob => &self.h_bob,
            Side::Eve => &self.h_eve,
        }
    }
}

/// Unit-energy QPSK constellation in Gray traversal order: walking the list
/// moves 90 degrees at a time, so adjacent symbols differ in a single bit.
pub fn qpsk_constellation() -> Vec<Complex<f64>> {
    let u = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        Complex::new(u, u),
        Complex::new(-u, u),
        Complex::new(-u, -u),
        Complex::new(u, -u),
    ]
}

/// Unit-energy PSK constellation for any power-of-two order, in Gray
/// traversal order.
///
/// Order 2 is real BPSK, order 4 defers to [`qpsk_constellation`] so the
/// published `(+-1 +- i)/sqrt(2)` values are reproduced exactly, and larger
/// orders place points at phases offset by half a step so no symbol lies on
/// an axis.
pub fn psk_constellation(mod_order: usize) -> Vec<Complex<f64>> {
    assert!(
        power_of_two_at_least_two(mod_order),
        "PSK order must be a power of two >= 2, got {mod_order}"
    );
    match mod_order {
        2 => vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
        4 => qpsk_constellation(),
        m => (0..m)
            .map(|p| {
                let phase = std::f64::consts::TAU * (p as f64 + 0.5) / m as f64;
                let (s, c) = phase.sin_cos();
                Complex::new(c, s)
            })
            .collect(),
    }
}

/// Builds the spatial modulation alphabet `{e_i * b_j}` for a validated
/// configuration.
pub fn build_alphabet(cfg: &SystemConfig) -> TransmitAlphabet {
    cfg.validate()
        .expect("build_alphabet requires a valid SystemConfig");
    let constellation = psk_constellation(cfg.mod_order);
    let mut vectors = Vec::with_capacity(cfg.n_tx * cfg.mod_order);
    for antenna in 0..cfg.n_tx {
        for &symbol in &constellation {
            let mut x = CVector::zeros(cfg.n_tx);
            x[antenna] = symbol;
            vectors.push(x);
        }
    }
    TransmitAlphabet {
        vectors,
        n_tx: cfg.n_tx,
        mod_order: cfg.mod_order,
    }
}

fn sample_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    fill_complex_gaussian(rng, m.as_mut_slice(), 1.0);
    m
}

/// Draws one Rayleigh channel pair and builds the artificial-noise shaping
/// matrix for the requested mode.
///
/// Bob's channel is drawn first, then Eve's, each entry i.i.d. `CN(0, 1)`
/// in column-major order, so a fixed rng stream reproduces the realization
/// bit for bit.
///
/// # Errors
///
/// Configuration errors from [`SystemConfig::validate`];
/// [`ModelError::NoAnDimensions`] when null-space mode is asked for without
/// spare transmit dimensions; a rank-deficiency error from the projector
/// for (measure-zero) degenerate draws, which callers handle by resampling.
pub fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SystemConfig,
    an_mode: AnMode,
) -> Result<ChannelRealization, ModelError> {
    cfg.validate()?;
    if an_mode == AnMode::NullSpace && cfg.n_rx_bob >= cfg.n_tx {
        return Err(ModelError::NoAnDimensions {
            n_rx_bob: cfg.n_rx_bob,
            n_tx: cfg.n_tx,
        });
    }
    let h_bob = sample_matrix(rng, cfg.n_rx_bob, cfg.n_tx);
    let h_eve = sample_matrix(rng, cfg.n_rx_eve, cfg.n_tx);
    let t_an = match an_mode {
        AnMode::NullSpace => {
            let p = null_space_projector(&h_bob)?;
            // trace(P) counts the null-space dimensions, so P/sqrt(trace P)
            // has trace(T T^H) = trace(P^2)/trace(P) = 1.
            let trace = p.trace().re;
            p.unscale(trace.sqrt())
        }
        AnMode::Isotropic => {
            CMatrix::identity(cfg.n_tx, cfg.n_tx).unscale((cfg.n_tx as f64).sqrt())
        }
    };
    Ok(ChannelRealization { h_bob, h_eve, t_an })
}

/// Per-antenna noise variance that realizes a target SNR, defined as total
/// transmit power over noise variance: `sigma^2 = power * 10^(-snr_db/10)`.
pub fn noise_variance_from_snr(power: f64, snr_db: f64) -> f64 {
    assert!(
        power > 0.0 && power.is_finite(),
        "transmit power must be positive, got {power}"
    );
    power * 10f64.powf(-snr_db / 10.0)
}
