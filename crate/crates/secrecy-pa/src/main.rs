//! Command line front end: SNR sweeps and CDF collections to CSV, plus
//! single-channel allocation queries as JSON on stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use secrecy_pa::harness::{
    allocate_once, load_experiment, run_cdf, run_snr_sweep, write_csv, ClipMode, HarnessError,
    MethodSpec,
};

#[derive(Parser)]
#[command(
    name = "secrecy-pa",
    version,
    about = "Power allocation experiments for secure spatial modulation links"
)]
struct Cli {
    /// Worker threads for channel-parallel runs; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum ClipArg {
    #[value(name = "per_realization")]
    PerRealization,
    #[value(name = "post_average")]
    PostAverage,
}

impl From<ClipArg> for ClipMode {
    fn from(arg: ClipArg) -> Self {
        match arg {
            ClipArg::PerRealization => ClipMode::PerRealization,
            ClipArg::PostAverage => ClipMode::PostAverage,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Average secrecy rate versus SNR for every configured method.
    Sweep {
        /// Experiment description (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Where the positive-part clipping is applied when averaging.
        #[arg(long, value_enum, default_value_t = ClipArg::PerRealization)]
        clip: ClipArg,
    },
    /// Per-channel secrecy rate samples at a single SNR, for empirical CDFs.
    Cdf {
        /// Experiment description (JSON); must list exactly one SNR.
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one method on one seeded channel draw and print the result as
    /// JSON.
    Allocate {
        /// Experiment description (JSON); its first SNR point is used.
        #[arg(long)]
        config: PathBuf,
        /// Seed for the channel draw; all method randomness derives from it.
        #[arg(long)]
        seed: u64,
        /// Method id: max_p, gd, es:<step>:<mc_sr|approx_sr>, or
        /// fixed:<beta>.
        #[arg(long)]
        method: String,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| HarnessError::ThreadPool {
            reason: e.to_string(),
        })?;
    pool.install(|| match cli.command {
        Command::Sweep { config, out, clip } => {
            let spec = load_experiment(&config, clip.into())?;
            let table = run_snr_sweep(&spec)?;
            write_csv(&table, &out)
        }
        Command::Cdf { config, out } => {
            let spec = load_experiment(&config, ClipMode::PerRealization)?;
            let table = run_cdf(&spec)?;
            write_csv(&table, &out)
        }
        Command::Allocate {
            config,
            seed,
            method,
        } => {
            let spec = load_experiment(&config, ClipMode::PerRealization)?;
            let method: MethodSpec = method.parse()?;
            let report = allocate_once(&spec, seed, &method)?;
            println!(
                "{}",
                serde_json::to_string(&report).expect("reports are plain numbers and strings")
            );
            Ok(())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
