//! Command-line front end: construct frames, evaluate them over block
//! erasures, compare spectra against reference laws, search assignments,
//! and browse the difference-set catalog.
//!
//! Exit codes are a stable contract: 0 success, 2 validation or parse
//! failure, 3 infeasible request, 4 numerical failure.

mod catalog_cmd;
mod common;
mod construct;
mod eval;
mod search_cmd;
mod spectrum;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "blockframes",
    version,
    about = "Frames for block-erasure channels: construction, evaluation, spectra, search"
)]
pub struct Cli {
    /// Seed for every randomized component (Monte Carlo sampling, stochastic search).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for parallel evaluation; 0 means one per CPU.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Directory receiving every output artifact.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Report format: json or csv.
    #[arg(long, global = true, default_value = "json")]
    pub format: String,

    /// key=value file supplying defaults for any long flag not given explicitly.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Build a frame from a catalog set or explicit rows; write it with a Welch report.
    Construct(ConstructArgs),
    /// Capacity, outage, and error-bound reports; SNR or beta^-1 sweeps as curve CSVs.
    Eval(EvalArgs),
    /// Empirical subframe spectrum with MANOVA / Marchenko-Pastur overlays and KL.
    Spectrum(SpectrumArgs),
    /// Optimize the column-to-block assignment (and optionally the row set).
    Search(SearchArgs),
    /// List, inspect, or brute-force difference sets.
    Catalog(CatalogArgs),
}

#[derive(Args)]
pub struct ConstructArgs {
    /// Catalog entry supplying the rows (and the base, unless --base overrides).
    #[arg(long, conflicts_with = "rows")]
    pub set: Option<String>,

    /// Explicit comma-separated row indices into the base matrix.
    #[arg(long)]
    pub rows: Option<String>,

    /// Base family: dft or hadamard. Required with --rows.
    #[arg(long)]
    pub base: Option<String>,

    /// External catalog file (defaults to the bundled catalog).
    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Block model as NB:NV:NA. Defaults to N:1:N for catalog sets.
    #[arg(long)]
    pub blocks: Option<String>,

    /// Column permutation as a comma-separated list (default identity).
    #[arg(long)]
    pub perm: Option<String>,

    /// Output stem (default: the set name, or frame-<base>-n<N>-m<M>).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Frame file; repeat for multi-series sweeps.
    #[arg(long, required = true)]
    pub frame: Vec<PathBuf>,

    /// Series label per --frame (default: file stem). Repeated labels merge
    /// points into one series.
    #[arg(long)]
    pub label: Vec<String>,

    /// Active blocks N_A on top of the file's block count.
    #[arg(long)]
    pub active: Option<usize>,

    /// Full block-model override as NB:NV:NA.
    #[arg(long)]
    pub blocks: Option<String>,

    /// Channel SNR in dB (the fixed SNR for beta^-1 sweeps). Not used by
    /// --sweep snr, whose axis comes from --from/--to/--step.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<f64>,

    /// Sweep axis: snr or beta-inv. Omit for a single-point report.
    #[arg(long)]
    pub sweep: Option<String>,

    /// SNR sweep start, in dB.
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,

    /// SNR sweep end, in dB (inclusive).
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,

    /// SNR sweep step, in dB.
    #[arg(long)]
    pub step: Option<f64>,

    /// beta^-1 grid for reference curves (default: the measured points).
    #[arg(long)]
    pub grid: Option<String>,

    /// Swept quantity: capacity, outage (beta-inv only), or stc-bound (snr only).
    #[arg(long, default_value = "capacity")]
    pub metric: String,

    /// Reference model series: manova or mp. Repeatable.
    #[arg(long)]
    pub reference: Vec<String>,

    /// Rate fraction for the outage probability.
    #[arg(long, default_value_t = 0.98)]
    pub outage_fraction: f64,

    /// Selection evaluation: auto, exhaustive, or mc.
    #[arg(long, default_value = "auto")]
    pub eval_mode: String,

    /// Monte Carlo sample budget for mc/auto modes.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,

    /// Include the space-time-code error bound in point reports.
    #[arg(long)]
    pub stc: bool,

    /// Include per-selection capacities in point reports.
    #[arg(long)]
    pub per_selection: bool,

    /// Also write a gnuplot script next to sweep CSVs.
    #[arg(long)]
    pub gnuplot: bool,

    /// Output stem override.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct SpectrumArgs {
    /// Frame file to pool subframe spectra from.
    #[arg(long)]
    pub frame: PathBuf,

    /// Active blocks N_A on top of the file's block count.
    #[arg(long)]
    pub active: Option<usize>,

    /// Full block-model override as NB:NV:NA.
    #[arg(long)]
    pub blocks: Option<String>,

    /// Histogram bin count.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,

    /// Overlay: manova, mp, both, or none.
    #[arg(long, default_value = "manova")]
    pub model: String,

    /// Keep the histogram range at the sample maximum instead of extending
    /// it to the model support.
    #[arg(long)]
    pub raw_range: bool,

    /// Also dump pooled eigenvalues as selection_id,eig_index,lambda.
    #[arg(long)]
    pub eigenvalues: bool,

    /// Selection evaluation: auto, exhaustive, or mc.
    #[arg(long, default_value = "auto")]
    pub eval_mode: String,

    /// Monte Carlo sample budget for mc/auto modes.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,

    /// Output stem override.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct SearchArgs {
    /// Base family: dft or hadamard. Required with --rows; defaults to the
    /// catalog entry's base with --set.
    #[arg(long)]
    pub base: Option<String>,

    /// Catalog entry supplying the row set.
    #[arg(long, conflicts_with = "rows")]
    pub set: Option<String>,

    /// Explicit comma-separated row indices.
    #[arg(long)]
    pub rows: Option<String>,

    /// External catalog file (defaults to the bundled catalog).
    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Optimize the row set jointly with the permutation. Rows given via
    /// --set/--rows become the starting point.
    #[arg(long)]
    pub free_rows: bool,

    /// Row count for a free-row search without a starting set.
    #[arg(long)]
    pub m: Option<usize>,

    /// Block model as NB:NV:NA.
    #[arg(long)]
    pub blocks: String,

    /// Channel SNR in dB defining the capacity objective.
    #[arg(long, allow_hyphen_values = true)]
    pub snr: f64,

    /// exhaustive or stochastic.
    #[arg(long, default_value = "stochastic")]
    pub search_mode: String,

    /// Annealing restarts (stochastic mode).
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,

    /// Annealing iterations per restart (stochastic mode).
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,

    /// Move set: column-swap, row-swap, or both.
    #[arg(long, default_value = "column-swap")]
    pub neighborhood: String,

    /// Checkpoint file rewritten after every restart.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,

    /// Resume from --checkpoint when the file exists.
    #[arg(long)]
    pub resume: bool,

    /// Output stem override.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct CatalogArgs {
    #[command(subcommand)]
    pub action: CatalogAction,
}

#[derive(Subcommand)]
pub enum CatalogAction {
    /// Print every catalog entry.
    List {
        /// External catalog file (defaults to the bundled catalog).
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Print one entry with its verification report.
    Show {
        #[arg(long)]
        name: String,
        /// External catalog file (defaults to the bundled catalog).
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Brute-force all difference sets of a size, up to translation.
    Find {
        /// Group: cyclic or binary.
        #[arg(long)]
        group: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
    },
}

fn main() {
    let raw: Vec<String> = std::env::args().collect();
    let argv = match common::expand_config(raw) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let cli = Cli::parse_from(argv);
    if cli.threads > 0 {
        // A second initialization (possible only under test harnesses) keeps
        // the first pool; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let run = || -> blockframes::Result<()> {
        std::fs::create_dir_all(&cli.out_dir)?;
        match &cli.command {
            Command::Construct(args) => construct::run(&cli, args),
            Command::Eval(args) => eval::run(&cli, args),
            Command::Spectrum(args) => spectrum::run(&cli, args),
            Command::Search(args) => search_cmd::run(&cli, args),
            Command::Catalog(args) => catalog_cmd::run(&cli, args),
        }
    };
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(common::exit_code(&e));
    }
}
