use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "invexkit", version, about = "Nonsmooth invexity, Pareto and KKT checks for fuzzy optimization problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    /// Leave wall-clock timings out of the report.
    #[arg(long, global = true)]
    pub no_timings: bool,

    /// Numerical tolerance for KKT and feasibility checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Args, Clone)]
pub struct ProblemArgs {
    /// Problem file, or one of the bundled names ex1, ex2, ex3.
    #[arg(long)]
    pub problem: String,

    /// Candidate point u (defaults to the file's `point`).
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,

    /// Level grid `a:b:step` or a single level.
    #[arg(long)]
    pub alpha: Option<String>,

    /// Oracle x-grid `a:b:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct MultiplierArgs {
    /// Objective weights `l1,l2`.
    #[arg(long)]
    pub lambda: Option<String>,

    /// Inequality multipliers, comma separated.
    #[arg(long)]
    pub mu: Option<String>,

    /// Equality multipliers, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Weak,
    Strict,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NondomReadingArg {
    ForAll,
    Some,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReadingArg {
    Envelope,
    Existential,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExampleArg {
    Ex1,
    Ex2,
    Ex3,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify given multipliers at every level.
    CheckKkt {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        multipliers: MultiplierArgs,
    },
    /// Search for multipliers at every level.
    SolveKkt {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Fix the objective weights instead of searching over them.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Certify a generalized-convexity property on a pair grid.
    Certify {
        /// invex, pseudoinvex, quasiinvex, v_invex, v_pseudoinvex or v_quasiinvex.
        #[arg(long)]
        property: String,
        /// Function of x; repeat for vector properties.
        #[arg(long = "fn", required = true, allow_hyphen_values = true)]
        functions: Vec<String>,
        /// eta(x, u).
        #[arg(long, allow_hyphen_values = true)]
        eta: String,
        /// beta_i(x, u); repeat once per function (defaults to 1).
        #[arg(long, allow_hyphen_values = true)]
        beta: Vec<String>,
        /// Grid `a:b:step`; pairs are its square unless --point is given.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Only pairs (x, u) with this u.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long, value_enum, default_value = "envelope")]
        reading: ReadingArg,
    },
    /// Enumerate the (weak) Pareto fronts of VMP_alpha.
    Pareto {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Weights for the scalarized problem and the trade-off audit.
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Brute-force (weak) nondominance of the point.
    Nondominance {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value = "strict")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "for-all")]
        reading: NondomReadingArg,
    },
    /// Check the implications between nondominance and per-level Pareto optimality.
    Bridge {
        #[command(flatten)]
        problem: ProblemArgs,
    },
    /// Run a KKT sufficiency theorem as a pipeline.
    Theorem {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        multipliers: MultiplierArgs,
        /// T37, T38, T62, T63, T64 or T65 (defaults to the file's `theorem`).
        #[arg(long)]
        theorem: Option<String>,
        /// eta(x, u), overriding the file.
        #[arg(long, allow_hyphen_values = true)]
        eta: Option<String>,
        /// Search for multipliers instead of verifying them.
        #[arg(long)]
        solve: bool,
    },
    /// Reproduce one of the bundled examples end to end.
    RunExample {
        #[arg(value_enum)]
        name: ExampleArg,
    },
}
