use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use badeconv::Error;

/// Badly approximable channel designs for multichannel boxcar deconvolution.
#[derive(Debug, Parser)]
#[command(name = "badeconv", version)]
struct Cli {
    /// Worker threads; defaults to every available core. Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a badly approximable M-tuple inside (a, b) and write it as JSON.
    Construct(ConstructArgs),
    /// Badness scan, Minkowski witness and continued-fraction audit of a tuple.
    Verify(VerifyArgs),
    /// Continued-fraction partial quotients of every coordinate.
    AuditCf(AuditArgs),
    /// Evaluate the lattice sum ℵ_k(j) of a tuple, with a growth fit over a j-range.
    Aleph(AlephArgs),
    /// Simulate noisy multichannel boxcar observations.
    Simulate(SimulateArgs),
    /// Run the thresholding estimator on a simulated dataset.
    Estimate(EstimateArgs),
    /// Monte-Carlo risk of several designs over an n-grid.
    Bench(BenchArgs),
    /// Closed-form calculators for the asymptotic rate.
    #[command(subcommand)]
    Theory(TheoryCommand),
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Tuple size M (1..=8).
    #[arg(long = "m", value_parser = clap::value_parser!(u32).range(1..=8))]
    pub m: u32,
    /// Left endpoint, "p/q" or decimal.
    #[arg(long, default_value = "1/2")]
    pub a: String,
    /// Right endpoint, "p/q" or decimal.
    #[arg(long, default_value = "1")]
    pub b: String,
    /// Working precision; default max(256, 32(M+1)⌈log₂Q⌉).
    #[arg(long)]
    pub precision_bits: Option<u32>,
    /// Output tuple JSON; a manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Tuple JSON.
    #[arg(long)]
    pub tuple: PathBuf,
    /// Largest denominator scanned.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub qmax: u64,
    /// Continued-fraction depth of the audit.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
    /// Also write the report (and a manifest) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Tuple JSON.
    #[arg(long)]
    pub tuple: PathBuf,
    /// Continued-fraction depth.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub depth: u64,
}

#[derive(Debug, Args)]
pub struct AlephArgs {
    /// Tuple JSON.
    #[arg(long)]
    pub tuple: PathBuf,
    /// Smallest level j.
    #[arg(long, default_value_t = 6)]
    pub j_min: u32,
    /// Largest level j.
    #[arg(long, default_value_t = 14)]
    pub j_max: u32,
    /// Power k (1..=4).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=4))]
    pub k: u32,
    /// Width of Ω_j in octaves; default 3 + log₂(π/3).
    #[arg(long)]
    pub r0: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct DesignArgs {
    /// Design kind: ba-tuple, uniform, single or rational.
    #[arg(long, default_value = "ba-tuple")]
    pub design: String,
    /// Channel count (ignored for ba-tuple, which takes M from the tuple).
    #[arg(long = "m", default_value_t = 2)]
    pub m: usize,
    /// Tuple JSON for ba-tuple designs, constructed on (2a, 2b).
    #[arg(long)]
    pub tuple: Option<PathBuf>,
    /// Left end of the channel interval.
    #[arg(long, default_value = "1/4")]
    pub a: String,
    /// Right end of the channel interval (at most 1/2).
    #[arg(long, default_value = "1/2")]
    pub b: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Test signal: trig, cos1, zero, bumps, doppler or step.
    #[arg(long, default_value = "trig")]
    pub signal: String,
    /// Samples per channel N (power of two, at least 16).
    #[arg(long = "n-per-channel", default_value_t = 4096)]
    pub n_per_channel: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output binary; the JSON sidecar and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Dataset binary written by `simulate`.
    #[arg(long)]
    pub data: PathBuf,
    /// Level and threshold rule: practical or theory.
    #[arg(long, default_value = "practical")]
    pub mode: String,
    /// Threshold constant; default 1 (practical) or 4 (theory).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Report JSON; a manifest is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the reconstruction on its grid as CSV (x,f_hat).
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Design spec, repeatable: ba-tuple:PATH, uniform:M, rational:M or single.
    #[arg(long = "design", required = true)]
    pub designs: Vec<String>,
    /// Test signal.
    #[arg(long, default_value = "trig")]
    pub signal: String,
    /// Total sample sizes n, comma separated; n/M must be a power of two.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<u64>,
    /// Monte-Carlo replicates per cell.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Level and threshold rule: practical or theory.
    #[arg(long, default_value = "practical")]
    pub mode: String,
    /// Threshold constant; default 1 (practical) or 4 (theory).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Left end of the channel interval.
    #[arg(long, default_value = "1/4")]
    pub a: String,
    /// Right end of the channel interval.
    #[arg(long, default_value = "1/2")]
    pub b: String,
    /// Output directory for risk.csv, report.json and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// M_n = max(1, round(ν·sqrt(ln n / ln ln n))).
    #[command(name = "choose-m", alias = "choose-M")]
    ChooseM {
        #[arg(long)]
        n: f64,
        #[arg(long, default_value_t = 1.0 / 6f64.sqrt())]
        nu: f64,
    },
    /// α_n with its main term and the three remainder terms.
    AlphaN {
        /// Sample size n (at least 16).
        #[arg(long, required_unless_present = "ln_n", conflicts_with = "ln_n")]
        n: Option<f64>,
        /// ln n instead of n, for sizes beyond f64.
        #[arg(long)]
        ln_n: Option<f64>,
        #[command(flatten)]
        smoothness: SmoothnessArgs,
        /// Channel constant ν; default ν_opt.
        #[arg(long)]
        nu: Option<f64>,
    },
    /// ν_opt = (3A₂)^(-1/2).
    NuOpt {
        #[command(flatten)]
        smoothness: SmoothnessArgs,
    },
}

#[derive(Debug, Args)]
pub struct SmoothnessArgs {
    /// Besov smoothness s.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Besov p ("inf" allowed).
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Besov q ("inf" allowed).
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Besov ball radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_)
        | Error::Parse(_)
        | Error::Interval(_)
        | Error::UnknownSignal(_)
        | Error::InsufficientPoints { .. } => 2,
        Error::Io { .. } | Error::Artifact { .. } | Error::Json(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .expect("thread pool is set once");
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let mut body = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": code,
            });
            match &e {
                Error::Io { path, .. } | Error::Artifact { path, .. } => {
                    body["path"] = path.display().to_string().into();
                }
                _ => {}
            }
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
