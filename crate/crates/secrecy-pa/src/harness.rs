//! Reproducible experiment runner: SNR sweeps, secrecy rate CDFs, and
//! single-channel allocation queries, with CSV/JSON output.
//!
//! Experiments are described by a flat JSON config plus a couple of CLI
//! switches, and every random quantity is pinned down by the master seed:
//! each (SNR index, channel index) cell derives child seeds for its channel
//! draw, its optimiser randomness, and its rate evaluation noise through a
//! fixed mixing function, so results are independent of scheduling and
//! thread count. Within a cell all methods share the same channel
//! realization and the same evaluation noise, which makes the method
//! comparison paired rather than independent.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocators::{
    exhaustive_search, fixed_beta, gradient_ascent, max_p_sinr_ansnr, AllocationOutcome, EsMetric,
    GdOptions,
};
use crate::model::{
    build_alphabet, noise_variance_from_snr, sample_channel, AnMode, ChannelRealization,
    ModelError, SystemConfig, TransmitAlphabet,
};
use crate::numerics::NumericsError;
use crate::rates::{instantaneous_secrecy_rate, mutual_information_pair, MonteCarloSpec, RateEstimate};
use crate::seeding::child_seed;

/// Purpose tags mixed into child seeds so the channel draw, the optimiser,
/// the grid search, and the rate evaluation each get an unrelated stream.
const CHANNEL_TAG: u64 = 0x6368_616e;
const EVAL_TAG: u64 = 0x6576_616c;
const GD_TAG: u64 = 0x6764;
const ES_TAG: u64 = 0x6573;

/// Give up resampling degenerate channel draws after this many attempts;
/// rank-deficient Gaussian matrices have measure zero, so hitting the cap
/// means the configuration itself is broken.
const MAX_RESAMPLE_ATTEMPTS: u64 = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config file {path} is not valid JSON: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unknown method id '{spec}': expected max_p, gd, es:<step>:<mc_sr|approx_sr>, or fixed:<beta>")]
    BadMethod { spec: String },
    #[error("invalid experiment: {0}")]
    Model(#[from] ModelError),
    #[error("invalid experiment: {reason}")]
    Invalid { reason: String },
    #[error("could not start worker pool: {reason}")]
    ThreadPool { reason: String },
}

impl HarnessError {
    /// Process exit status for this error: 1 for I/O and environment
    /// failures, 2 for anything the user wrote wrong.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Io { .. } | HarnessError::ThreadPool { .. } => 1,
            _ => 2,
        }
    }
}

/// Where the secrecy rate's positive-part clipping is applied when
/// averaging over channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClipMode {
    /// Clip each channel's rate difference at zero, then average.
    PerRealization,
    /// Average the raw differences, clip the mean.
    PostAverage,
}

/// One allocation strategy as named on the command line or in the config:
/// `max_p`, `gd`, `es:<step>:<metric>`, or `fixed:<beta>`.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    MaxP,
    Gd(GdOptions),
    Es { grid_step: f64, metric: EsMetric },
    Fixed { beta: f64 },
}

impl FromStr for MethodSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::BadMethod {
            spec: s.to_string(),
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["max_p"] => Ok(MethodSpec::MaxP),
            ["gd"] => Ok(MethodSpec::Gd(GdOptions::default())),
            ["es", step, metric] => {
                let grid_step = step
                    .parse::<f64>()
                    .ok()
                    .filter(|g| *g > 0.0 && *g < 1.0)
                    .ok_or_else(bad)?;
                let metric = match *metric {
                    "mc_sr" => EsMetric::McSr,
                    "approx_sr" => EsMetric::ApproxSr,
                    _ => return Err(bad()),
                };
                Ok(MethodSpec::Es { grid_step, metric })
            }
            ["fixed", beta] => {
                let beta = beta
                    .parse::<f64>()
                    .ok()
                    .filter(|b| *b > 0.0 && *b < 1.0)
                    .ok_or_else(bad)?;
                Ok(MethodSpec::Fixed { beta })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::MaxP => write!(f, "max_p"),
            MethodSpec::Gd(_) => write!(f, "gd"),
            MethodSpec::Es { grid_step, metric } => {
                let metric = match metric {
                    EsMetric::McSr => "mc_sr",
                    EsMetric::ApproxSr => "approx_sr",
                };
                write!(f, "es:{grid_step}:{metric}")
            }
            MethodSpec::Fixed { beta } => write!(f, "fixed:{beta}"),
        }
    }
}

/// A full experiment description: link parameters, methods to compare,
/// SNR points, sampling depth, and the master seed everything derives from.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Link parameters; the noise variance fields are placeholders that get
    /// overwritten per SNR point.
    pub config: SystemConfig,
    pub an_mode: AnMode,
    pub methods: Vec<MethodSpec>,
    pub snr_db_list: Vec<f64>,
    pub n_channels: usize,
    /// Sampling depth for rate evaluations. The seed field is a default for
    /// direct library use; harness runs derive per-cell seeds from
    /// `master_seed` instead.
    pub mc: MonteCarloSpec,
    pub master_seed: u64,
    pub clip_mode: ClipMode,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.config.validate()?;
        if self.an_mode == AnMode::NullSpace && self.config.n_rx_bob >= self.config.n_tx {
            return Err(ModelError::NoAnDimensions {
                n_rx_bob: self.config.n_rx_bob,
                n_tx: self.config.n_tx,
            }
            .into());
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Invalid {
                reason: "the method list is empty".into(),
            });
        }
        for method in &self.methods {
            let ok = match method {
                MethodSpec::Es { grid_step, .. } => *grid_step > 0.0 && *grid_step < 1.0,
                MethodSpec::Fixed { beta } => *beta > 0.0 && *beta < 1.0,
                MethodSpec::Gd(opts) => opts.restarts >= 1 && opts.step0 > 0.0,
                MethodSpec::MaxP => true,
            };
            if !ok {
                return Err(HarnessError::Invalid {
                    reason: format!("method {method} has out-of-range parameters"),
                });
            }
        }
        if self.snr_db_list.is_empty() {
            return Err(HarnessError::Invalid {
                reason: "snr_db_list is empty".into(),
            });
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return Err(HarnessError::Invalid {
                reason: "snr_db_list contains a non-finite value".into(),
            });
        }
        if self.n_channels == 0 {
            return Err(HarnessError::Invalid {
                reason: "n_channels must be >= 1".into(),
            });
        }
        if self.mc.n_noise_samples == 0 {
            return Err(HarnessError::Invalid {
                reason: "n_noise_samples must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PowerField {
    Number(f64),
    Keyword(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_tx: usize,
    n_rx_bob: usize,
    n_rx_eve: usize,
    mod_order: usize,
    total_power: PowerField,
    an_mode: AnMode,
    snr_db_list: Vec<f64>,
    n_channels: usize,
    n_noise_samples: usize,
    master_seed: u64,
    methods: Vec<String>,
}

/// Loads and validates an experiment from a JSON config file.
///
/// `total_power` may be the string `"auto"`, which resolves to one unit of
/// power per transmit antenna (`P = n_tx`). Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
pub fn load_experiment(path: &Path, clip_mode: ClipMode) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawConfig = serde_json::from_str(&text).map_err(|source| HarnessError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let total_power = match raw.total_power {
        PowerField::Number(p) => p,
        PowerField::Keyword(ref word) if word == "auto" => raw.n_tx as f64,
        PowerField::Keyword(word) => {
            return Err(HarnessError::Invalid {
                reason: format!("total_power must be a number or \"auto\", got \"{word}\""),
            })
        }
    };
    let methods = raw
        .methods
        .iter()
        .map(|m| m.parse::<MethodSpec>())
        .collect::<Result<Vec<_>, _>>()?;
    let spec = ExperimentSpec {
        config: SystemConfig {
            n_tx: raw.n_tx,
            n_rx_bob: raw.n_rx_bob,
            n_rx_eve: raw.n_rx_eve,
            mod_order: raw.mod_order,
            total_power,
            // Placeholders; every run rewrites them from the SNR point.
            sigma2_bob: 1.0,
            sigma2_eve: 1.0,
        },
        an_mode: raw.an_mode,
        methods,
        snr_db_list: raw.snr_db_list,
        n_channels: raw.n_channels,
        mc: MonteCarloSpec {
            n_noise_samples: raw.n_noise_samples,
            seed: raw.master_seed,
        },
        master_seed: raw.master_seed,
        clip_mode,
    };
    spec.validate()?;
    Ok(spec)
}

/// One row of an SNR sweep: per-method averages over all channels at one
/// SNR point, plus how many degenerate channel draws had to be replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub method: String,
    pub beta_mean: f64,
    pub sr_mean: f64,
    pub sr_stderr: f64,
    pub n_channels: usize,
    pub resamples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

/// One per-channel secrecy rate sample; rows are grouped by method and
/// sorted ascending within each group, so row rank over `n_channels` is the
/// empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfRow {
    pub method: String,
    pub sr_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub rows: Vec<CdfRow>,
}

/// Result of a single-channel allocation query, serialized to JSON by the
/// CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocateReport {
    pub method: String,
    pub beta: f64,
    pub surrogate_value: f64,
    pub snr_db: f64,
    pub sr_bits: f64,
    pub sr_std_error: f64,
}

fn config_at_snr(spec: &ExperimentSpec, snr_db: f64) -> SystemConfig {
    let mut cfg = spec.config.clone();
    let sigma2 = noise_variance_from_snr(cfg.total_power, snr_db);
    cfg.sigma2_bob = sigma2;
    cfg.sigma2_eve = sigma2;
    cfg
}

fn sample_channel_resampling<F: Fn(u64) -> u64>(
    seed_for_attempt: F,
    cfg: &SystemConfig,
    an_mode: AnMode,
) -> (ChannelRealization, u64) {
    let mut attempt = 0u64;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for_attempt(attempt));
        match sample_channel(&mut rng, cfg, an_mode) {
            Ok(chan) => return (chan, attempt),
            Err(ModelError::Numerics(NumericsError::RankDeficient { .. })) => {
                assert!(
                    attempt < MAX_RESAMPLE_ATTEMPTS,
                    "channel sampling keeps producing rank-deficient draws; the configuration is degenerate"
                );
                attempt += 1;
            }
            Err(e) => unreachable!("experiment was validated up front: {e}"),
        }
    }
}

fn run_method(
    method: &MethodSpec,
    chan: &ChannelRealization,
    cfg: &SystemConfig,
    alphabet: &TransmitAlphabet,
    gd_seed: u64,
    es_seed: u64,
    n_noise_samples: usize,
) -> AllocationOutcome {
    match method {
        MethodSpec::MaxP => max_p_sinr_ansnr(chan, cfg),
        MethodSpec::Gd(opts) => {
            let mut rng = ChaCha8Rng::seed_from_u64(gd_seed);
            gradient_ascent(chan, cfg, alphabet, opts, &mut rng)
        }
        MethodSpec::Es { grid_step, metric } => {
            let search_mc = MonteCarloSpec {
                n_noise_samples,
                seed: es_seed,
            };
            exhaustive_search(chan, cfg, alphabet, *grid_step, *metric, &search_mc)
        }
        MethodSpec::Fixed { beta } => {
            fixed_beta(*beta).expect("fixed splits are range-checked during validation")
        }
    }
}

struct MethodCell {
    beta: f64,
    bob: RateEstimate,
    eve: RateEstimate,
}

struct CellResult {
    resamples: u64,
    per_method: Vec<MethodCell>,
}

fn run_cell(
    spec: &ExperimentSpec,
    alphabet: &TransmitAlphabet,
    snr_idx: usize,
    chan_idx: usize,
) -> CellResult {
    let cfg = config_at_snr(spec, spec.snr_db_list[snr_idx]);
    let s = snr_idx as u64;
    let k = chan_idx as u64;
    let (chan, resamples) = sample_channel_resampling(
        |attempt| child_seed(spec.master_seed, &[CHANNEL_TAG, s, k, attempt]),
        &cfg,
        spec.an_mode,
    );
    let eval_mc = MonteCarloSpec {
        n_noise_samples: spec.mc.n_noise_samples,
        seed: child_seed(spec.master_seed, &[EVAL_TAG, s, k]),
    };
    let gd_seed = child_seed(spec.master_seed, &[GD_TAG, s, k]);
    // The grid search consumes its own stream: reusing the evaluation seed
    // inside the search would let the argmax chase that noise set and bias
    // the subsequent evaluation upward.
    let es_seed = child_seed(spec.master_seed, &[ES_TAG, s, k]);
    let per_method = spec
        .methods
        .iter()
        .map(|method| {
            let outcome = run_method(
                method,
                &chan,
                &cfg,
                alphabet,
                gd_seed,
                es_seed,
                spec.mc.n_noise_samples,
            );
            let (bob, eve) = mutual_information_pair(&chan, outcome.beta, &cfg, alphabet, &eval_mc);
            MethodCell {
                beta: outcome.beta,
                bob,
                eve,
            }
        })
        .collect();
    CellResult {
        resamples,
        per_method,
    }
}

fn evaluate_grid(spec: &ExperimentSpec, alphabet: &TransmitAlphabet) -> Vec<CellResult> {
    let n = spec.n_channels;
    let total = spec.snr_db_list.len() * n;
    (0..total)
        .into_par_iter()
        .map(|idx| run_cell(spec, alphabet, idx / n, idx % n))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n as f64 - 1.0);
    (var / n as f64).sqrt()
}

/// Runs every configured method at every SNR point over `n_channels`
/// shared channel draws and averages the resulting secrecy rates.
///
/// Rows come out SNR-major in config order: all methods at the first SNR,
/// then all methods at the next. The `resamples` column counts replaced
/// degenerate channel draws at that SNR (shared by all of its rows, since
/// methods see the same channels).
pub fn run_snr_sweep(spec: &ExperimentSpec) -> Result<SweepTable, HarnessError> {
    spec.validate()?;
    let alphabet = build_alphabet(&spec.config);
    let cells = evaluate_grid(spec, &alphabet);
    let n = spec.n_channels;
    let mut rows = Vec::with_capacity(spec.snr_db_list.len() * spec.methods.len());
    for (s, &snr_db) in spec.snr_db_list.iter().enumerate() {
        let cell_range = &cells[s * n..(s + 1) * n];
        let resamples: u64 = cell_range.iter().map(|c| c.resamples).sum();
        for (m, method) in spec.methods.iter().enumerate() {
            let betas: Vec<f64> = cell_range.iter().map(|c| c.per_method[m].beta).collect();
            let diffs: Vec<f64> = cell_range
                .iter()
                .map(|c| c.per_method[m].bob.value - c.per_method[m].eve.value)
                .collect();
            let (sr_mean, sr_stderr) = match spec.clip_mode {
                ClipMode::PerRealization => {
                    let clipped: Vec<f64> = diffs.iter().map(|d| d.max(0.0)).collect();
                    (mean(&clipped), std_error(&clipped))
                }
                ClipMode::PostAverage => (mean(&diffs).max(0.0), std_error(&diffs)),
            };
            rows.push(SweepRow {
                snr_db,
                method: method.to_string(),
                beta_mean: mean(&betas),
                sr_mean,
                sr_stderr,
                n_channels: n,
                resamples,
            });
        }
    }
    Ok(SweepTable { rows })
}

/// Collects the per-channel clipped secrecy rate samples of every method at
/// a single SNR point, sorted ascending per method.
pub fn run_cdf(spec: &ExperimentSpec) -> Result<CdfTable, HarnessError> {
    spec.validate()?;
    if spec.snr_db_list.len() != 1 {
        return Err(HarnessError::Invalid {
            reason: format!(
                "a CDF run needs exactly one SNR point, got {}",
                spec.snr_db_list.len()
            ),
        });
    }
    let alphabet = build_alphabet(&spec.config);
    let cells = evaluate_grid(spec, &alphabet);
    let mut rows = Vec::with_capacity(spec.methods.len() * spec.n_channels);
    for (m, method) in spec.methods.iter().enumerate() {
        let mut samples: Vec<f64> = cells
            .iter()
            .map(|c| (c.per_method[m].bob.value - c.per_method[m].eve.value).max(0.0))
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).expect("secrecy rates are finite"));
        rows.extend(samples.into_iter().map(|sr_value| CdfRow {
            method: method.to_string(),
            sr_value,
        }));
    }
    Ok(CdfTable { rows })
}

/// Draws one channel from `channel_seed`, runs one method on it, and
/// evaluates the chosen split's secrecy rate, at the first SNR point of the
/// config.
///
/// All randomness (optimiser restarts, grid search noise, evaluation noise)
/// derives from `channel_seed`, so a (config, seed, method) triple pins the
/// report down completely.
pub fn allocate_once(
    spec: &ExperimentSpec,
    channel_seed: u64,
    method: &MethodSpec,
) -> Result<AllocateReport, HarnessError> {
    spec.validate()?;
    let snr_db = spec.snr_db_list[0];
    let cfg = config_at_snr(spec, snr_db);
    let alphabet = build_alphabet(&spec.config);
    let (chan, _) = sample_channel_resampling(
        |attempt| {
            if attempt == 0 {
                channel_seed
            } else {
                child_seed(channel_seed, &[CHANNEL_TAG, attempt])
            }
        },
        &cfg,
        spec.an_mode,
    );
    let outcome = run_method(
        method,
        &chan,
        &cfg,
        &alphabet,
        child_seed(channel_seed, &[GD_TAG]),
        child_seed(channel_seed, &[ES_TAG]),
        spec.mc.n_noise_samples,
    );
    let eval_mc = MonteCarloSpec {
        n_noise_samples: spec.mc.n_noise_samples,
        seed: child_seed(channel_seed, &[EVAL_TAG]),
    };
    let sr = instantaneous_secrecy_rate(&chan, outcome.beta, &cfg, &alphabet, &eval_mc);
    Ok(AllocateReport {
        method: method.to_string(),
        beta: outcome.beta,
        surrogate_value: outcome.surrogate_value,
        snr_db,
        sr_bits: sr.value,
        sr_std_error: sr.std_error,
    })
}

/// Formats a float with 9 significant digits, trailing zeros trimmed,
/// switching to exponent notation outside the range where plain decimal
/// stays compact.
fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let text = if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    };
    trim_float_text(text)
}

fn trim_float_text(text: String) -> String {
    if let Some(e_pos) = text.find('e') {
        let (mantissa, exponent) = text.split_at(e_pos);
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}{exponent}")
    } else if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

/// A table that knows its fixed CSV schema.
pub trait CsvTable {
    fn header(&self) -> &'static str;
    fn push_rows(&self, out: &mut String);
}

impl CsvTable for SweepTable {
    fn header(&self) -> &'static str {
        "snr_db,method,beta_mean,sr_mean,sr_stderr,n_channels,resamples"
    }

    fn push_rows(&self, out: &mut String) {
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                format_sig9(row.snr_db),
                row.method,
                format_sig9(row.beta_mean),
                format_sig9(row.sr_mean),
                format_sig9(row.sr_stderr),
                row.n_channels,
                row.resamples
            ));
        }
    }
}

impl CsvTable for CdfTable {
    fn header(&self) -> &'static str {
        "method,sr_value"
    }

    fn push_rows(&self, out: &mut String) {
        for row in &self.rows {
            out.push_str(&format!("{},{}\n", row.method, format_sig9(row.sr_value)));
        }
    }
}

/// Writes a table as UTF-8 CSV with LF line endings: header line, then one
/// line per row.
pub fn write_csv<T: CsvTable>(table: &T, path: &Path) -> Result<(), HarnessError> {
    let mut text = String::new();
    text.push_str(table.header());
    text.push('\n');
    table.push_rows(&mut text);
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}
