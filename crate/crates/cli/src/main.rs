mod cache;
mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "zerosum", version, about = "Zero-sum invariants of finite abelian groups")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    /// Result cache (newline-delimited JSON). Defaults to ~/.zerosum-cache.ndjson.
    #[arg(long, env = "ZEROSUM_CACHE", global = true)]
    pub cache: Option<PathBuf>,
    /// Neither read nor write the cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Ceiling on reach-table cell updates per table build.
    #[arg(long, env = "ZEROSUM_MAX_CELLS", global = true)]
    pub max_cells: Option<u64>,
    /// Where counterexample artifacts are written.
    #[arg(long, default_value = "zerosum-artifacts", global = true)]
    pub artifact_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural constants of a group.
    Group {
        #[command(subcommand)]
        cmd: GroupCmd,
    },
    /// Exact invariants by exhaustive search.
    Exact {
        #[command(subcommand)]
        cmd: ExactCmd,
    },
    /// Closed-form bounds with hypothesis reports.
    Bounds(BoundsArgs),
    /// Extremal sequence certifying the lower bound `kq + D(G) − 1`.
    Witness(WitnessArgs),
    /// Polynomial certificates.
    Poly {
        #[command(subcommand)]
        cmd: PolyCmd,
    },
    /// Constructive extraction of a zero-sum subsequence.
    Extract(ExtractArgs),
    /// Compares `s_{kq}(G)` with `kq + D(G) − 1` for `k = 1..=kmax`.
    VerifyConjecture(ConjectureArgs),
}

#[derive(Subcommand, Debug)]
pub enum GroupCmd {
    /// Order, exponent, p-group profile and prime-size conditions.
    Info {
        /// Comma-separated cyclic orders, e.g. `3,3`.
        spec: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum ExactCmd {
    /// `s_K(G)`.
    S(ExactSArgs),
    /// Davenport constant `D(G)`.
    Davenport(SearchArgs),
    /// Threshold `ℓ(G)` from exact values up to `kmax`.
    Ell(EllArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    #[arg(long)]
    pub group: String,
    /// Stop once an avoider of this length exists.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Fix the first term to 0 (valid when every length is a multiple of exp(G)).
    #[arg(long)]
    pub normalize: bool,
    /// Search depth at which subtrees are run in parallel; 0 is sequential.
    #[arg(long, default_value_t = 1)]
    pub split_depth: usize,
    /// Write the witness sequence to this file.
    #[arg(long)]
    pub witness_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ExactSArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    /// Absolute lengths, comma-separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "multipliers", required_unless_present = "multipliers")]
    pub lengths: Vec<u64>,
    /// Multipliers of `--unit`, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub multipliers: Vec<u64>,
    /// Unit for `--multipliers`; defaults to exp(G).
    #[arg(long, requires = "multipliers")]
    pub unit: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct EllArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub kmax: u64,
}

#[derive(Args, Debug, Clone)]
pub struct BoundsArgs {
    #[arg(long)]
    pub group: String,
    /// Tabulate every statement for `s_{kq}`.
    #[arg(long)]
    pub k: Option<u64>,
    /// Evaluate a single statement.
    #[arg(long)]
    pub theorem: Option<String>,
    /// Best proven upper bound on `s_L` for this length.
    #[arg(long)]
    pub target: Option<u64>,
    /// Multiplier set `K` for the set statements.
    #[arg(long, value_delimiter = ',')]
    pub multipliers: Vec<u64>,
    /// Lengths `a` and `b` for subadditivity; multipliers for the filtration statement.
    #[arg(long)]
    pub a: Option<u64>,
    #[arg(long)]
    pub b: Option<u64>,
    /// Known values `s_a`, `s_b`.
    #[arg(long)]
    pub s_a: Option<u64>,
    #[arg(long)]
    pub s_b: Option<u64>,
    /// Prime power defining `qG` and `G/qG`.
    #[arg(long)]
    pub q: Option<u64>,
    /// Known `s_{an}(qG)`.
    #[arg(long)]
    pub s_an: Option<u64>,
    /// Per-prime multipliers `a_i` with `k = Π a_i`.
    #[arg(long, value_delimiter = ',')]
    pub factors: Vec<u64>,
    /// Known `D(G)` where the p-group formula is unavailable.
    #[arg(long)]
    pub davenport: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct WitnessArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long)]
    pub k: u64,
    /// Write the sequence to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum PolyCmd {
    /// Evaluate the certificate polynomial on the cube and check its top coefficient.
    Check(PolyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Sequence file.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub sequence: Option<PathBuf>,
    /// Draw a uniformly random sequence.
    #[arg(long, requires = "seed")]
    pub random: bool,
    /// Seed for `--random`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Length of the random sequence.
    #[arg(long)]
    pub length: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct PolyArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub multipliers: Vec<u64>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Skip the statement's hypotheses.
    #[arg(long)]
    pub exploratory: bool,
    /// Maximum number of listed hits.
    #[arg(long, default_value_t = zerosum::poly::DEFAULT_HIT_LIST)]
    pub max_hits: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum StrategyArg {
    Subadditive,
    PqLift,
    #[value(name = "two_piece_2d")]
    TwoPiece2d,
    HalfLemma,
    MainTheorem,
    Filtration,
}

#[derive(Args, Debug, Clone)]
pub struct ExtractArgs {
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    /// Group of a random input; checked against the file otherwise.
    #[arg(long)]
    pub group: Option<String>,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub a: Option<u64>,
    #[arg(long)]
    pub b: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub multipliers: Vec<u64>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long)]
    pub s_a: Option<u64>,
    #[arg(long)]
    pub s_b: Option<u64>,
    #[arg(long)]
    pub s_an: Option<u64>,
    /// Write the extracted subsequence to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ConjectureArgs {
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    pub kmax: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match commands::run(cli) {
        Ok(outcome) => {
            let out = outcome.render(format);
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::from(outcome.verdict.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
