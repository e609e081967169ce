//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 for usage, parse and I/O errors, 2 when a
//! reduction fails its bidiagonal check.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::band_store::BandError;
use crate::chase::ChaseError;
use crate::oracle::{OracleError, SpectrumKind};
use crate::scalar::Precision;

pub use commands::{
    cmd_accuracy, cmd_bench, cmd_occupancy, cmd_reduce, cmd_tune, trial_seed, TuneGrid, ACCURACY_HEADER, BENCH_HEADER,
    TUNE_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl From<BandError> for CliError {
    fn from(e: BandError) -> Self {
        match e {
            BandError::NotBidiagonal { .. } => CliError::Numerical(e.to_string()),
            BandError::Io(e) => CliError::Io(e),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ChaseError> for CliError {
    fn from(e: ChaseError) -> Self {
        match e {
            ChaseError::Band(b) => b.into(),
            ChaseError::BadConfig(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Band(b) => b.into(),
            OracleError::Chase(c) => c.into(),
            OracleError::BadSpec(m) => CliError::Usage(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bandbidiag",
    version,
    about = "Banded-to-bidiagonal reduction by bulge chasing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Serial,
    Parallel,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Serial => "serial",
            Engine::Parallel => "parallel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectrumArg {
    All,
    Arithmetic,
    Logarithmic,
    QuarterCircle,
}

impl SpectrumArg {
    pub fn kinds(self) -> Vec<SpectrumKind> {
        match self {
            SpectrumArg::All => SpectrumKind::ALL.to_vec(),
            SpectrumArg::Arithmetic => vec![SpectrumKind::Arithmetic],
            SpectrumArg::Logarithmic => vec![SpectrumKind::Logarithmic],
            SpectrumArg::QuarterCircle => vec![SpectrumKind::QuarterCircle],
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Executor flags shared by several commands.
#[derive(Debug, Clone, Args)]
pub struct ExecArgs {
    /// Rows (columns) per reflector application step.
    #[arg(long, default_value_t = 32)]
    pub chunk: usize,
    /// Concurrent tasks per round before grouping.
    #[arg(long = "max-tasks", default_value_t = 1024)]
    pub max_tasks: usize,
    /// Worker threads for the parallel engine; defaults to the hardware parallelism.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Engine::Serial)]
    pub engine: Engine,
}

impl ExecArgs {
    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(default_workers)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a `.bnd` matrix and write its bidiagonal as `d,e` CSV.
    Reduce {
        /// Input `.bnd` file.
        input: PathBuf,
        /// Bandwidth to reduce from; defaults to the file's.
        #[arg(long)]
        bw: Option<usize>,
        /// Inner tilewidth; defaults to min(bw - 1, 32).
        #[arg(long)]
        tw: Option<usize>,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative error of computed singular values against known spectra.
    Accuracy {
        #[arg(long, value_delimiter = ',', default_values_t = [Precision::Double])]
        precision: Vec<Precision>,
        #[arg(long, value_delimiter = ',', default_values_t = [256])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [8])]
        bw: Vec<usize>,
        #[arg(long)]
        tw: Option<usize>,
        /// Trials per spectrum.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = SpectrumArg::All)]
        spectrum: SpectrumArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search over tilewidth, chunk width and task cap.
    Tune {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        bw: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        tw: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [32])]
        chunk: Vec<usize>,
        #[arg(long = "max-tasks", value_delimiter = ',', default_values_t = [1024])]
        max_tasks: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Engine::Parallel)]
        engine: Engine,
        #[arg(long, default_value_t = Precision::Double)]
        precision: Precision,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest matrix order that keeps `alus` execution units busy.
    Occupancy {
        #[arg(allow_negative_numbers = true)]
        alus: i64,
        #[arg(allow_negative_numbers = true)]
        cbw: i64,
    },
    /// Wall time of the reduction over sizes and bandwidths.
    Bench {
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [16, 32])]
        bw: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        tw: usize,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long, default_value_t = Precision::Double)]
        precision: Precision,
        /// Timed runs per configuration; the median is reported.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Refuse configurations whose band storage exceeds this many bytes.
        #[arg(long = "max-mem", default_value_t = 4 << 30)]
        max_mem: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a random banded matrix as `.bnd`.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        bw: usize,
        #[arg(long)]
        tw: Option<usize>,
        #[arg(long, default_value_t = Precision::Double)]
        precision: Precision,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Make the diagonal dominant (well-conditioned).
        #[arg(long)]
        dominant: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink<'a>(out: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(stdout),
    })
}

/// Runs one command line; returns the process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Reduce {
            input,
            bw,
            tw,
            exec,
            out,
        } => {
            let csv = cmd_reduce(&input, bw, tw, &exec)?;
            sink(&out, stdout)?.write_all(csv.as_bytes())?;
        }
        Command::Accuracy {
            precision,
            n,
            bw,
            tw,
            trials,
            spectrum,
            seed,
            out,
        } => {
            let mut w = sink(&out, stdout)?;
            cmd_accuracy(&precision, &n, &bw, tw, trials, &spectrum.kinds(), seed, &mut w)?;
        }
        Command::Tune {
            n,
            bw,
            tw,
            chunk,
            max_tasks,
            repeats,
            workers,
            engine,
            precision,
            seed,
            out,
        } => {
            let grid = TuneGrid {
                tilewidths: tw,
                chunk_widths: chunk,
                max_tasks,
                repeats,
            };
            let workers = workers.unwrap_or_else(default_workers);
            let csv = cmd_tune(&grid, n, bw, engine, workers, precision, seed)?;
            sink(&out, stdout)?.write_all(csv.as_bytes())?;
        }
        Command::Occupancy { alus, cbw } => {
            let m = cmd_occupancy(alus, cbw)?;
            writeln!(stdout, "{m}")?;
        }
        Command::Bench {
            n,
            bw,
            tw,
            exec,
            precision,
            repeats,
            seed,
            max_mem,
            out,
        } => {
            let mut w = sink(&out, stdout)?;
            cmd_bench(&n, &bw, tw, &exec, precision, repeats, seed, max_mem, &mut w)?;
        }
        Command::Generate {
            n,
            bw,
            tw,
            precision,
            seed,
            dominant,
            out,
        } => {
            let mut w = sink(&out, stdout)?;
            commands::cmd_generate(n, bw, tw, precision, seed, dominant, &mut w)?;
        }
    }
    Ok(())
}
