use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "evident",
    version,
    about = "Sequential evidence: e-processes, validity checks, stopping boundaries"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Master seed; every random quantity derives from it.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Replication tier: `smoke` runs 10% of the full replications with
    /// tolerances widened threefold.
    #[arg(long, global = true, value_enum, default_value_t = Tier::Smoke)]
    pub reps_tier: Tier,

    /// Write artifacts to this directory instead of printing to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Exit with status 2 when a check fails.
    #[arg(long, global = true)]
    pub expect_pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Tier {
    Smoke,
    Full,
}

impl Tier {
    pub fn reps(self, full: usize) -> usize {
        match self {
            Tier::Smoke => (full / 10).max(1),
            Tier::Full => full,
        }
    }

    pub fn widen(self) -> f64 {
        match self {
            Tier::Smoke => 3.0,
            Tier::Full => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Crossing-time table for b in {10, 20, 50, 100, 200}.
    Table2 {
        /// Override the tier's replication count.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Step-2 conditional q(0 | 0) of the horizon-N NML distribution.
    NmlHorizon {
        #[arg(long, default_value_t = 7)]
        max_n: usize,
    },
    /// Exact NML normalizers C_1..C_n.
    NmlConstants {
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Sequential liftability of a code family.
    Liftability {
        #[arg(value_enum)]
        family: Family,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Monte Carlo experiments.
    Experiment {
        #[arg(value_enum)]
        which: Experiment,
        /// Override the tier's replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Path length (default depends on the experiment).
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 20.0)]
        b: f64,
    },
    /// Expected Brier-induced evidence under the null, n = 1..n_max.
    ScoringDecay {
        #[arg(long, default_value_t = 0.75)]
        p1: f64,
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
        #[arg(long, default_value_t = 100)]
        n_max: usize,
    },
    /// Exhaustive position-averaging check of conformal e-values.
    ConformalCheck {
        #[arg(long, default_value_t = 5)]
        max_size: usize,
        /// Examples range over {0, .., levels - 1}.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Donsker-Varadhan gap and enumeration check.
    PacbayesCheck {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 10)]
        length: usize,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        enum_length: usize,
    },
    /// Exhaustive supermartingale check of a process expression.
    Validity {
        /// e.g. `mix(0.5:lr(0.65,0.5), 0.5:lr(0.35,0.5))`
        spec: String,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Bernoulli parameter of the null.
        #[arg(long, default_value_t = 0.5)]
        null: f64,
    },
    /// Leading-order detection sample size ln(1/alpha)/mu.
    SampleComplexity {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        mu: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Kt,
    Laplace,
    NmlSeq,
    NmlFixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Accumulation,
    Type1,
    Misspec,
}
