//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridlab_core::archcount::FlopMode;
use hybridlab_core::quantmodel::Axis;
use hybridlab_core::tasks::{RevealSpacing, TaskKind};

#[derive(Debug, Parser)]
#[command(name = "hybridlab", version, about = "Kernels, constructions and scaling calculators for hybrid GDN/attention models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare the chunkwise GDN kernel against the sequential recurrence.
    GdnCheck(GdnCheckArgs),
    /// Run the exact constructions against task oracles.
    ConstructEval(ConstructEvalArgs),
    /// Compile Polish-notation formulas and evaluate them through the GDN composer.
    Formula(FormulaArgs),
    /// Generate synthetic task instances as JSON lines.
    GenTasks(GenTasksArgs),
    /// Tabulate exact and closed-form losses of the quantization model.
    Quantmodel(QuantmodelArgs),
    /// Fit L(N, D) = E + A/N^alpha + B/D^beta to a CSV of runs.
    FitScaling(FitScalingArgs),
    /// Resource ratio between two fitted laws at a target loss.
    Savings(SavingsArgs),
    /// Compute-optimal allocation for one or two fitted laws.
    ComputeOptimal(ComputeOptimalArgs),
    /// Parameter and FLOP counts for an architecture spec.
    Count(CountArgs),
    /// Inference-state size of one attention or GDN layer.
    StateSize(StateSizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct GdnCheckArgs {
    /// Key dimension; values are 2d wide.
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    #[arg(long, default_value_t = 1024)]
    pub len: usize,
    #[arg(long, default_value_t = 64)]
    pub chunk: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent random sequences; case i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub cases: u64,
    /// Use the classic gated delta rule (eigenvalues in [0, 1]).
    #[arg(long)]
    pub no_neg_eigenvalues: bool,
    /// JSON array of {q, k, v, alpha, beta} tokens instead of random input.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ConstructKind {
    StateBasedRecall,
    StateTracking,
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum OrderArg {
    GdnFirst,
    AttnFirst,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum EncodingArg {
    Unary,
    Binary,
}

#[derive(Debug, Args)]
pub struct ConstructEvalArgs {
    #[arg(long, value_enum)]
    pub kind: ConstructKind,
    /// Number of swaps, or bit-string length for parity.
    #[arg(long)]
    pub n: usize,
    /// Number of stored bits (state_based_recall).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 1000)]
    pub count: u64,
    #[arg(long, value_enum, default_value_t = OrderArg::Both)]
    pub order: OrderArg,
    #[arg(long, value_enum, default_value_t = EncodingArg::Unary)]
    pub encoding: EncodingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FormulaArgs {
    /// File with one formula per line; `-` reads standard input.
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    /// Generate this many random formulas instead of reading input.
    #[arg(long, conflicts_with = "input")]
    pub random: Option<u64>,
    /// Depth bound for --random.
    #[arg(long, default_value_t = 6, requires = "random")]
    pub depth: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Refuse to compile formulas deeper than this.
    #[arg(long, default_value_t = hybridlab_core::formula::DEFAULT_MAX_DEPTH)]
    pub max_depth: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct GenTasksArgs {
    #[arg(long, value_parser = parse_task_kind)]
    pub kind: TaskKind,
    /// Number of swaps.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Number of bits.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    /// Instances to emit; instance i uses seed + i.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `none`, `pow2`, or a fixed gap k.
    #[arg(long, default_value = "none", value_parser = parse_reveal)]
    pub reveal: RevealSpacing,
    /// Fraction of instances rendered without reveals.
    #[arg(long, default_value_t = hybridlab_core::tasks::DEFAULT_STRICT_FRACTION)]
    pub strict_fraction: f64,
    /// json writes one object per line.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct QuantmodelArgs {
    #[arg(long, value_parser = parse_axis)]
    pub axis: Axis,
    /// JSON file with alpha, l0, delta, delta_p, eps, c, c_p, t, t_p; overrides the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub l0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub delta_p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 2.0)]
    pub c_p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_p: f64,
    /// Comma-separated inexpressibility probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    pub eps: Vec<f64>,
    /// Grid start; defaults to C' (tasks, params) or T' (tokens).
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long, default_value_t = 1e9)]
    pub hi: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FitScalingArgs {
    /// CSV with header `N,D,loss`.
    #[arg(long)]
    pub input: PathBuf,
    /// Pin alpha,beta.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub fixed_exponents: Option<Vec<f64>>,
    /// Bootstrap resamples; 0 skips the intervals.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub huber_delta: f64,
    #[arg(long, default_value_t = 0.95)]
    pub ci_level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SavingsModeArg {
    Tokens,
    Params,
    Compute,
}

#[derive(Debug, Args)]
pub struct SavingsArgs {
    /// Params JSON of the reference law.
    #[arg(long)]
    pub reference: PathBuf,
    /// Params JSON of the compared law.
    #[arg(long)]
    pub arch: PathBuf,
    #[arg(long, value_enum, default_value_t = SavingsModeArg::Tokens)]
    pub mode: SavingsModeArg,
    /// Target loss.
    #[arg(long)]
    pub target: f64,
    /// Fixed parameter count (tokens mode).
    #[arg(long)]
    pub n: Option<f64>,
    /// Fixed token count (params mode).
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ComputeOptimalArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub arch: Option<PathBuf>,
    /// Comma-separated budgets in FLOPs (C = 6ND).
    #[arg(long, value_delimiter = ',', default_value = "1e22")]
    pub compute: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    /// Architecture spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// FLOP mode; defaults to the chunkwise training mode of the spec's recurrent layers.
    #[arg(long, value_parser = parse_flop_mode)]
    pub mode: Option<FlopMode>,
    /// Include the causal softmax score term.
    #[arg(long)]
    pub softmax: bool,
    /// Override the spec's sequence length.
    #[arg(long)]
    pub seq_len: Option<usize>,
    /// Training tokens; adds analytic and 6ND compute.
    #[arg(long)]
    pub tokens: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum StateKind {
    Mha,
    Gqa,
    Swa,
    Gdn,
}

#[derive(Debug, Args)]
pub struct StateSizeArgs {
    #[arg(long, value_enum, required_unless_present = "table")]
    pub kind: Option<StateKind>,
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub kv_heads: Option<usize>,
    #[arg(long)]
    pub d_head: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub d_k: Option<usize>,
    #[arg(long)]
    pub d_v: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub precision_bytes: u64,
    /// Print the 7B comparison (MHA, GQA, SWA at 32K context against 30 GDN heads).
    #[arg(long, conflicts_with = "kind")]
    pub table: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn parse_task_kind(s: &str) -> Result<TaskKind, String> {
    s.parse().map_err(|e: hybridlab_core::tasks::TaskError| e.to_string())
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|_| format!("unknown axis `{s}` (tasks, params, tokens)"))
}

fn parse_flop_mode(s: &str) -> Result<FlopMode, String> {
    s.parse()
}

fn parse_reveal(s: &str) -> Result<RevealSpacing, String> {
    match s {
        "none" => Ok(RevealSpacing::None),
        "pow2" => Ok(RevealSpacing::RandomizedPow2),
        k => k
            .parse()
            .map(RevealSpacing::Fixed)
            .map_err(|_| format!("expected none, pow2 or an integer gap, got `{k}`")),
    }
}
