//! Command-line surface.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "nedtree", version, about = "Compile optimization-problem elements into solver-ready code via recursive nonlinear decomposition")]
pub struct Cli {
    /// TOML config file; flags win over config values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Log filter (e.g. warn, info, nedtree_core=debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    /// Directory for run artifacts (transcripts, emitted models, reports).
    #[arg(long, global = true)]
    pub artifacts: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClientKind {
    Stub,
    Http,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse expression text (or a relation) and print the AST as JSON.
    Parse {
        /// Expression text; reads stdin when omitted.
        expr: Option<String>,
        /// Treat the input as a relation (lhs <op> rhs).
        #[arg(long)]
        relation: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Decompose an expression (or single relation) into definitions plus a
    /// final linear form.
    Decompose {
        #[arg(long)]
        expr: String,
        /// Parameters as name=value, comma-separated or repeated.
        #[arg(long)]
        params: Vec<String>,
        /// Variables as name[:type[:lo..hi]], comma-separated or repeated.
        #[arg(long)]
        vars: Vec<String>,
        /// Clear relation-level denominators by multiplying through
        /// (sound only when every denominator is positive).
        #[arg(long)]
        assume_positive_denominator: bool,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Verify an expression against its decomposition on sampled points.
    /// Exit code 3 when the check fails.
    Check {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        params: Vec<String>,
        #[arg(long)]
        vars: Vec<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Emit solver source (or neutral IR JSON) from a pool or IR document.
    Emit {
        /// Backend: gurobi-python or neutral-json.
        #[arg(long)]
        backend: Option<String>,
        /// Input document: a pool JSON or a neutral IR JSON.
        #[arg(long, value_name = "FILE")]
        r#in: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Backend profile file (TOML or JSON) overriding the built-in.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Clear relation-level denominators (positive-denominator
        /// assumption).
        #[arg(long)]
        assume_positive_denominator: bool,
        /// Additionally emit `denominator >= EPS` for every division
        /// definition.
        #[arg(long, value_name = "EPS")]
        denominator_guard: Option<f64>,
    },
    /// Run the extraction pipeline over a problem text and print the pool.
    Extract {
        /// Problem text file; reads stdin when omitted.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long, value_enum)]
        client: Option<ClientKind>,
        /// Fixture directory for the stub client.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Output file for the pool JSON; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the benchmark harness over a dataset file.
    Bench {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        client: Option<ClientKind>,
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Backend: gurobi-python (python executor) or neutral-json
        /// (native reference executor).
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, value_enum)]
        execute: Option<OnOff>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report JSON output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
