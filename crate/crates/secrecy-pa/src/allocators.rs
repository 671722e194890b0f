//! Power allocation strategies for the data/artificial-noise split.
//!
//! All four strategies pick a single scalar `beta` in (0, 1), the fraction
//! of the power budget carrying data:
//!
//! * [`max_p_sinr_ansnr`]: maximises the product of Bob's SINR and the
//!   AN-to-signal-plus-noise ratio at Eve. Both factors are ratios of
//!   affine functions of `beta`, so the product's stationarity condition is
//!   the quadratic `a beta^2 + 2 b beta - b = 0` with one root inside
//!   (0, 1); the allocation is closed form.
//! * [`gradient_ascent`]: multi-start ascent on the cut-off rate secrecy
//!   surrogate using its analytic derivative, with backtracking step
//!   halving.
//! * [`exhaustive_search`]: evaluates a metric (Monte Carlo secrecy rate or
//!   the surrogate) on a uniform grid and takes the argmax; the
//!   Monte Carlo metric reuses one noise set for every grid point, so the
//!   comparison across `beta` is low-variance.
//! * [`fixed_beta`]: a constant split, the baseline the adaptive methods
//!   are judged against.
//!
//! Returned splits are clamped to `[1e-6, 1 - 1e-6]`: the endpoints carry
//! either no data or no jamming and are never useful, but keeping strictly
//! inside (0, 1) protects downstream rate evaluations from degenerate
//! covariances.

use rand::Rng;
use thiserror::Error;

use crate::model::{ChannelRealization, SystemConfig, TransmitAlphabet};
use crate::rates::{
    approx_secrecy_rate, grad_approx_secrecy_rate, instantaneous_secrecy_rate,
    interference_covariances, MonteCarloSpec,
};

/// Smallest power split an allocator will return.
pub const BETA_FLOOR: f64 = 1e-6;
/// Largest power split an allocator will return.
pub const BETA_CEIL: f64 = 1.0 - 1e-6;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("fixed power split must lie strictly inside (0, 1), got {beta}")]
    BetaOutOfRange { beta: f64 },
}

/// Which strategy produced an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    MaxP,
    Gd,
    Es,
    Fixed,
}

/// Method-specific run records, mostly useful for debugging convergence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostics {
    MaxP {
        /// Set when `a_b * a_e = 0` leaves the product objective
        /// identically zero and the returned midpoint is arbitrary.
        degenerate: bool,
    },
    Gd {
        iterations_per_restart: Vec<usize>,
        best_restart: usize,
        /// False when any restart stopped only because it ran out of
        /// iterations.
        converged: bool,
    },
    Es {
        grid_points: usize,
    },
    Fixed,
}

/// A chosen power split plus the objective value the method saw there.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOutcome {
    pub beta: f64,
    pub method: MethodKind,
    /// Objective at `beta` under the method's own metric; zero for fixed
    /// splits, which have none.
    pub surrogate_value: f64,
    pub diagnostics: Diagnostics,
}

/// Coefficients of the SINR-ANSNR product objective.
///
/// Bob's SINR is `a_b beta / ((1 - beta) b_b + c_b)` and the AN-to-signal-
/// plus-noise ratio at Eve is `a_e (1 - beta) / (b_e beta + c_e)`; the six
/// base coefficients are channel traces and noise powers, and `a`, `b` are
/// the combinations entering the stationarity quadratic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductCoefficients {
    pub a_b: f64,
    pub a_e: f64,
    pub b_b: f64,
    pub c_b: f64,
    pub b_e: f64,
    pub c_e: f64,
    pub a: f64,
    pub b: f64,
}

impl ProductCoefficients {
    /// Assembles the derived quadratic coefficients `a = c_b b_e - c_e b_b`
    /// and `b = c_e b_b + c_e c_b` from the six base coefficients.
    pub fn from_parts(a_b: f64, a_e: f64, b_b: f64, c_b: f64, b_e: f64, c_e: f64) -> Self {
        ProductCoefficients {
            a_b,
            a_e,
            b_b,
            c_b,
            b_e,
            c_e,
            a: c_b * b_e - c_e * b_b,
            b: c_e * b_b + c_e * c_b,
        }
    }
}

/// Computes the product-objective coefficients for one channel draw.
pub fn product_coefficients(chan: &ChannelRealization, cfg: &SystemConfig) -> ProductCoefficients {
    let p = cfg.total_power;
    let (c_bob, c_eve) = interference_covariances(chan);
    ProductCoefficients::from_parts(
        p * chan.h_bob.norm_squared() / cfg.n_tx as f64,
        p * c_eve.trace().re,
        p * c_bob.trace().re,
        cfg.n_rx_bob as f64 * cfg.sigma2_bob,
        p * chan.h_eve.norm_squared() / cfg.n_tx as f64,
        cfg.n_rx_eve as f64 * cfg.sigma2_eve,
    )
}

/// The SINR-ANSNR product as a function of `beta`.
pub fn product_objective(coeffs: &ProductCoefficients, beta: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&beta),
        "beta must lie in [0, 1], got {beta}"
    );
    coeffs.a_b * coeffs.a_e * beta * (1.0 - beta)
        / (((1.0 - beta) * coeffs.b_b + coeffs.c_b) * (beta * coeffs.b_e + coeffs.c_e))
}

fn clamp_beta(beta: f64) -> f64 {
    beta.clamp(BETA_FLOOR, BETA_CEIL)
}

/// Closed-form allocation maximising the SINR-ANSNR product.
///
/// The interior stationary point of the product solves
/// `a beta^2 + 2 b beta - b = 0`; it is evaluated as
/// `beta = b / (b + sqrt(b^2 + a b))`, the rationalized twin of the
/// quadratic formula's `(-b + sqrt(b^2 + a b)) / a`, which survives `a = 0`
/// (where it gives exactly 1/2) and avoids cancellation for small `a`.
/// Since `b > 0` for any valid configuration, the root always lies in
/// (0, 1). When the numerator coefficient `a_b a_e` vanishes the objective
/// is identically zero; the midpoint is returned with a degenerate flag.
pub fn max_p_sinr_ansnr(chan: &ChannelRealization, cfg: &SystemConfig) -> AllocationOutcome {
    let coeffs = product_coefficients(chan, cfg);
    let (beta, degenerate) = if coeffs.a_b * coeffs.a_e == 0.0 {
        (0.5, true)
    } else {
        let discriminant = (coeffs.b * coeffs.b + coeffs.a * coeffs.b).max(0.0);
        (coeffs.b / (coeffs.b + discriminant.sqrt()), false)
    };
    let beta = clamp_beta(beta);
    AllocationOutcome {
        beta,
        method: MethodKind::MaxP,
        surrogate_value: product_objective(&coeffs, beta),
        diagnostics: Diagnostics::MaxP { degenerate },
    }
}

/// Settings for [`gradient_ascent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdOptions {
    /// Initial step size, reset at every iteration before backtracking.
    pub step0: f64,
    pub restarts: usize,
    pub max_iters: usize,
    /// Ascent stops once the surrogate derivative falls below this.
    pub grad_tol: f64,
}

impl Default for GdOptions {
    fn default() -> Self {
        GdOptions {
            step0: 0.1,
            restarts: 5,
            max_iters: 500,
            grad_tol: 1e-6,
        }
    }
}

/// Multi-start gradient ascent on the secrecy rate surrogate.
///
/// Each restart draws its start uniformly from (0.05, 0.95) and climbs with
/// steps `beta + eta * grad`, halving `eta` until the move stops decreasing
/// the surrogate; a move that lands exactly where it started (pinned at a
/// clamp bound, or the step underflowed) counts as stationary. The restart
/// with the best surrogate wins.
pub fn gradient_ascent<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    cfg: &SystemConfig,
    alphabet: &TransmitAlphabet,
    opts: &GdOptions,
    rng: &mut R,
) -> AllocationOutcome {
    assert!(opts.restarts >= 1, "need at least one restart");
    assert!(opts.step0 > 0.0, "step size must be positive");
    let mut best_beta = 0.5;
    let mut best_value = f64::NEG_INFINITY;
    let mut best_restart = 0;
    let mut iterations_per_restart = Vec::with_capacity(opts.restarts);
    let mut converged = true;
    for restart in 0..opts.restarts {
        let mut beta = rng.gen_range(0.05..0.95);
        let mut value = approx_secrecy_rate(chan, beta, cfg, alphabet);
        let mut iters = 0;
        loop {
            if iters >= opts.max_iters {
                converged = false;
                break;
            }
            let grad = grad_approx_secrecy_rate(chan, beta, cfg, alphabet);
            if grad.abs() < opts.grad_tol {
                break;
            }
            let mut eta = opts.step0;
            let (mut next_beta, mut next_value);
            loop {
                next_beta = clamp_beta(beta + eta * grad);
                next_value = approx_secrecy_rate(chan, next_beta, cfg, alphabet);
                if next_value >= value || next_beta == beta {
                    break;
                }
                eta *= 0.5;
                if eta < 1e-12 {
                    next_beta = beta;
                    next_value = value;
                    break;
                }
            }
            iters += 1;
            if next_beta == beta {
                break;
            }
            beta = next_beta;
            value = next_value;
        }
        iterations_per_restart.push(iters);
        if value > best_value {
            best_value = value;
            best_beta = beta;
            best_restart = restart;
        }
    }
    AllocationOutcome {
        beta: best_beta,
        method: MethodKind::Gd,
        surrogate_value: best_value,
        diagnostics: Diagnostics::Gd {
            iterations_per_restart,
            best_restart,
            converged,
        },
    }
}

/// Which objective [`exhaustive_search`] maximises on its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsMetric {
    /// Monte Carlo instantaneous secrecy rate, one shared noise set for
    /// every grid point.
    McSr,
    /// The closed-form cut-off rate surrogate.
    ApproxSr,
}

/// Grid search over `beta in {g, 2g, ..., 1 - g}`, ties broken toward the
/// smaller split.
pub fn exhaustive_search(
    chan: &ChannelRealization,
    cfg: &SystemConfig,
    alphabet: &TransmitAlphabet,
    grid_step: f64,
    metric: EsMetric,
    mc: &MonteCarloSpec,
) -> AllocationOutcome {
    assert!(
        grid_step > 0.0 && grid_step < 1.0,
        "grid step must lie in (0, 1), got {grid_step}"
    );
    let grid_points = (1.0 / grid_step - 1.0 + 1e-9).floor() as usize;
    assert!(
        grid_points >= 1,
        "grid step {grid_step} leaves no interior points"
    );
    let mut best_beta = f64::NAN;
    let mut best_value = f64::NEG_INFINITY;
    for k in 1..=grid_points {
        let beta = k as f64 * grid_step;
        let value = match metric {
            EsMetric::McSr => instantaneous_secrecy_rate(chan, beta, cfg, alphabet, mc).value,
            EsMetric::ApproxSr => approx_secrecy_rate(chan, beta, cfg, alphabet),
        };
        if value > best_value {
            best_value = value;
            best_beta = beta;
        }
    }
    AllocationOutcome {
        beta: best_beta,
        method: MethodKind::Es,
        surrogate_value: best_value,
        diagnostics: Diagnostics::Es { grid_points },
    }
}

/// A constant power split.
///
/// # Errors
///
/// [`AllocError::BetaOutOfRange`] unless `0 < beta < 1`.
pub fn fixed_beta(beta: f64) -> Result<AllocationOutcome, AllocError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(AllocError::BetaOutOfRange { beta });
    }
    Ok(AllocationOutcome {
        beta,
        method: MethodKind::Fixed,
        surrogate_value: 0.0,
        diagnostics: Diagnostics::Fixed,
    })
}
