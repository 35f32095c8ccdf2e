use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use crate::report::Format;

#[derive(Debug, Parser, Serialize)]
#[command(name = "cdg", version, about = "Distribution, entropy and mixing of X -> aX + b mod q")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Omit the generation timestamp, so identical runs give identical bytes.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub no_timestamp: bool,
    /// Worker threads for parallel work (0: one per core).
    #[arg(long, env = "CDG_WORKERS", default_value_t = 0, global = true)]
    #[serde(skip)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WalkArgs {
    /// Multiplier a ≥ 2.
    #[arg(long, default_value_t = 2)]
    pub a: u64,
    /// Step law: "offset:weight,..." or "u{b1,b2,...}".
    #[arg(long, default_value = "u{-1,0,1}", allow_hyphen_values = true)]
    pub step: String,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact entropy curve H(μ_n) and rate estimates.
    Entropy(EntropyArgs),
    /// Monte-Carlo entropy rate, tail masses and surprisal variance.
    Smb(SmbArgs),
    /// Closed-form entropy constant for a = 2, uniform steps on {-1, 0, 1}.
    Hhms(HhmsArgs),
    /// Total-variation curve of μ_n mod q.
    Tv(TvArgs),
    /// Mixing times over a range of moduli.
    MixScan(MixScanArgs),
    /// The family q = a^k - 1 and the density of slowly mixing primes.
    Exceptional(ExceptionalArgs),
    /// Fourier coefficients of μ_n mod q and the small-moduli bound.
    Spectrum(SpectrumArgs),
    /// Projection, large sieve and averaging identities.
    SieveCheck(SieveArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 20)]
    pub n_max: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SmbArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Steps for the Monte-Carlo estimate.
    #[arg(long, default_value_t = 200)]
    pub n: u32,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Steps for the exact estimates, tails and variance.
    #[arg(long, default_value_t = 16)]
    pub exact_n: u32,
    /// Tail windows α.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HhmsArgs {
    #[arg(long, default_value_t = 32)]
    pub levels: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TvArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub q: u64,
    #[arg(long, default_value_t = 200)]
    pub n_max: u32,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Continue to n_max after the threshold is reached.
    #[arg(long)]
    pub full: bool,
    /// Entropy rate in nats for normalization (default: reference rate).
    #[arg(long)]
    pub h_ref: Option<f64>,
    /// Also evaluate ½TV at n = floor((1 - δ) ln q / H).
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("filter").args(["odd", "prime", "coprime", "stride"])))]
pub struct MixScanArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub q_min: u64,
    #[arg(long)]
    pub q_max: u64,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Odd moduli only.
    #[arg(long)]
    pub odd: bool,
    /// Prime moduli only.
    #[arg(long)]
    pub prime: bool,
    /// Every modulus coprime to a (the default).
    #[arg(long)]
    pub coprime: bool,
    /// Every s-th modulus from q_min.
    #[arg(long)]
    pub stride: Option<u64>,
    #[arg(long, default_value_t = 4000)]
    pub n_max: u32,
    #[arg(long)]
    pub h_ref: Option<f64>,
    /// A modulus is exceptional when t_mix·H/ln q exceeds 1 + margin.
    #[arg(long, default_value_t = 0.15)]
    pub margin: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExceptionalArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, default_value_t = 12)]
    pub k_min: u32,
    #[arg(long, default_value_t = 20)]
    pub k_max: u32,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// Random comparison moduli per k.
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4000)]
    pub n_max: u32,
    #[arg(long)]
    pub h_ref: Option<f64>,
    /// Also compute the weighted density of slowly mixing primes at this n.
    #[arg(long)]
    pub density_n: Option<u32>,
    #[arg(long, default_value_t = 1_000_000)]
    pub p_max: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub q: u64,
    #[arg(long)]
    pub n: u32,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SieveArgs {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// Modulus for the projection checks.
    #[arg(long, default_value_t = 30)]
    pub q: u64,
    /// Steps of the walk whose law is the test measure.
    #[arg(long, default_value_t = 6)]
    pub n: u32,
    /// Random measures per divisor for the operator-norm check.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// q₀ for the large sieve sum.
    #[arg(long, default_value_t = 1)]
    pub q0: u64,
    /// Q for the large sieve sum.
    #[arg(long, default_value_t = 64)]
    pub big_q: u64,
    /// Averaging length m.
    #[arg(long, default_value_t = 4)]
    pub m: u32,
    /// Largest denominator for the averaging check.
    #[arg(long, default_value_t = 60)]
    pub max_denominator: u64,
}
