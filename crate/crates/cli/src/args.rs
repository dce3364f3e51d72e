use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::record::Format;

/// Experiments on Cross-model first-passage percolation, its TASEP
/// correspondence and plane percolation.
///
/// Every run is a pure function of its arguments and `--seed`. Replica `r`
/// draws from ChaCha8 seeded with `splitmix64(seed + 0x9E3779B97F4A7C15 * (r + 1))`,
/// so results do not depend on the number of threads.
///
/// Exit codes: 0 success, 1 bad parameters, 2 verification failure,
/// 3 size beyond the exact solvers.
#[derive(Debug, Parser)]
#[command(name = "cross-tasep", version)]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "CROSS_TASEP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StripMethod {
    /// Exact law of the particle chain (K <= 7).
    Exact,
    /// Independent sampled strips.
    MonteCarlo,
    /// `n (1 + 2 eps nu)` from the stationary solve (K <= 7).
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StationaryMethodArg {
    /// Stationary solve of the full chain (K <= 7).
    Exact,
    /// One long trajectory.
    Simulation,
    /// Closed-form expression.
    Formula,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected distance E[D(n, 0)] on the Cross strip, with the gaps to
    /// n (1 + 2 eps nu) and n (1 + 2 eps nu) + 2K.
    StripDistance {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = StripMethod::Exact)]
        method: StripMethod,
        /// Monte Carlo replicas.
        #[arg(long, default_value_t = 10_000)]
        replicas: u64,
        /// Write the edges of Monte Carlo replica 0 to this file.
        #[arg(long)]
        dump_edges: Option<PathBuf>,
        /// Sweep the edges in this file instead of sampling.
        #[arg(long)]
        replay_edges: Option<PathBuf>,
    },

    /// Stationary probability of a particle at site 0 and a hole at site 1.
    TasepStationary {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = StationaryMethodArg::Exact)]
        method: StationaryMethodArg,
        /// Bulk jump rate for the exact solve (default eps).
        #[arg(long)]
        alpha: Option<f64>,
        /// Entry rate for the exact solve (default eps).
        #[arg(long)]
        beta: Option<f64>,
        /// Exit rate for the exact solve (default eps).
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        burn_in: u64,
        #[arg(long, default_value_t = 10_000_000)]
        samples: u64,
        /// Batch length for the batch-means standard error.
        #[arg(long, default_value_t = 10_000)]
        batch: u64,
    },

    /// Closed form against the stationary solve for K = 1..=K-max.
    NuCompare {
        /// One or more comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long = "K-max", default_value_t = 6)]
        k_max: usize,
    },

    /// Runs the column sweep and the coupled TASEP on the same edges and
    /// reports every disagreement.
    VerifyCorrespondence {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 10_000)]
        columns: u64,
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        /// Write the sampled edges (single replica only).
        #[arg(long)]
        dump_edges: Option<PathBuf>,
        /// Check the edges in this file instead of sampling.
        #[arg(long)]
        replay_edges: Option<PathBuf>,
    },

    /// Time constant estimate from windows [-margin, n + margin] x [-margin, margin].
    MuEstimate {
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: u64,
        /// Defaults to ceil(n / 2).
        #[arg(long)]
        margin: Option<u64>,
        #[arg(long, default_value_t = 400)]
        replicas: u64,
        /// Also run with twice the margin on the same edges and require a
        /// shift below two standard errors.
        #[arg(long)]
        double_window: bool,
    },

    /// Empirical P(event A fails) against 22 K n eps^2, optionally with the
    /// pathwise D^K <= D^{K,d} + 3K check on accepted samples.
    EventABound {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Number of accepted samples for the pathwise check.
        #[arg(long)]
        pathwise: Option<u64>,
        #[arg(long, default_value_t = 10_000_000)]
        max_attempts: u64,
    },

    /// Plane distance with forced verticals and diagonals against the strip
    /// sweep and the plain plane distance.
    LowerBoundCheck {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        replicas: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::StripDistance { .. } => "strip-distance",
            Command::TasepStationary { .. } => "tasep-stationary",
            Command::NuCompare { .. } => "nu-compare",
            Command::VerifyCorrespondence { .. } => "verify-correspondence",
            Command::MuEstimate { .. } => "mu-estimate",
            Command::EventABound { .. } => "event-a-bound",
            Command::LowerBoundCheck { .. } => "lower-bound-check",
        }
    }
}
