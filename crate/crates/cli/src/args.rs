use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "elgof",
    version,
    about = "Empirical-likelihood goodness-of-fit tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a test on data read from a CSV file.
    Test(TestArgs),
    /// Run a Monte Carlo study.
    Simulate(SimulateArgs),
    /// Estimate the size of a test on synthetic null data.
    NullStudy(NullStudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestName {
    FixedDist,
    Parametric,
    Symmetry,
    Independence,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NullTestName {
    FixedDist,
    Parametric,
    Symmetry,
    Independence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Margins {
    Known,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Delta0,
    Delta1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Significance levels, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.10])]
    pub alpha: Vec<f64>,

    /// chi-square or normal.
    #[arg(long, default_value = "chi-square")]
    pub calibration: String,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(value_enum)]
    pub test: TestName,

    /// CSV file, or - for standard input.
    #[arg(long)]
    pub input: PathBuf,

    /// Column for univariate tests, by index or header name.
    #[arg(long)]
    pub col: Option<String>,

    /// Two columns (x,y) for independence and regression.
    #[arg(long, value_delimiter = ',')]
    pub cols: Option<Vec<String>>,

    /// Treat the first row as column names.
    #[arg(long)]
    pub has_header: bool,

    /// Hypothesized law for fixed-dist, e.g. uniform01, normal:0,1, t3.
    #[arg(long)]
    pub f0: Option<String>,

    /// Basis size for the univariate tests.
    #[arg(long)]
    pub m: Option<usize>,

    /// Basis size for independence and delta1 regression.
    #[arg(long)]
    pub r: Option<usize>,

    /// normal or exponential.
    #[arg(long)]
    pub family: Option<String>,

    #[arg(long, value_enum)]
    pub margins: Option<Margins>,

    /// Known marginal law of x.
    #[arg(long)]
    pub fx: Option<String>,

    /// Known marginal law of y.
    #[arg(long)]
    pub fy: Option<String>,

    /// Hypothesized (intercept, slope).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub theta: Option<Vec<f64>>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,

    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_parser = ["table1"])]
    pub study: String,

    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long)]
    pub seed: u64,

    /// Sample size per replication.
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Worker threads; falls back to ELGOF_THREADS.
    #[arg(long)]
    pub threads: Option<usize>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct NullStudyArgs {
    #[arg(value_enum)]
    pub test: NullTestName,

    #[arg(long, default_value_t = 500)]
    pub n: usize,

    #[arg(long)]
    pub m: Option<usize>,

    #[arg(long)]
    pub r: Option<usize>,

    #[arg(long, default_value_t = 1000)]
    pub reps: usize,

    #[arg(long)]
    pub seed: u64,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Law of the null data; defaults depend on the test.
    #[arg(long)]
    pub law: Option<String>,

    #[arg(long)]
    pub family: Option<String>,

    #[arg(long, value_enum, default_value_t = Margins::Known)]
    pub margins: Margins,

    #[arg(long, default_value = "chi-square")]
    pub calibration: String,

    /// Also report the normal approximation diagnostic.
    #[arg(long)]
    pub normality: bool,

    #[arg(long)]
    pub threads: Option<usize>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}
