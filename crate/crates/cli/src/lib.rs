//! Command-line front end for `certbound`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code, writing results to `out` and diagnostics to `err`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use certbound::codec::parse_word;
use certbound::engine::RunConfig;
use certbound::oracle;
use certbound::{
    compute_bound, read_certificate, verify, write_certificate, Alphabet, Backend, CertFormat, Error, FxScale,
    MemoryBudget, Problem, Verdict,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod recipes;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_STRUCTURAL: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(
    name = "certbound",
    version,
    about = "Certified bounds on the edit distance and LCS constants of random strings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate the window transformation and emit a verified certificate.
    Compute(ComputeArgs),
    /// Check a certificate file.
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Exact and sampled reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Recompute a table of published bounds and print CSV.
    Table(TableArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemArg {
    Edit,
    Lcs,
}

impl From<ProblemArg> for Problem {
    fn from(p: ProblemArg) -> Problem {
        match p {
            ProblemArg::Edit => Problem::Edit,
            ProblemArg::Lcs => Problem::Lcs,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Auto,
    Binary,
    Dense,
    Sparse,
}

impl BackendArg {
    fn resolve(self) -> Option<Backend> {
        match self {
            BackendArg::Auto => None,
            BackendArg::Binary => Some(Backend::Binary),
            BackendArg::Dense => Some(Backend::Dense),
            BackendArg::Sparse => Some(Backend::Sparse),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Binary,
}

impl From<FormatArg> for CertFormat {
    fn from(f: FormatArg) -> CertFormat {
        match f {
            FormatArg::Json => CertFormat::Json,
            FormatArg::Binary => CertFormat::Binary,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Memory budget in GB; defaults to $CERTBOUND_MEM_GB or 8.
    #[arg(long)]
    mem_gb: Option<f64>,
}

impl RunArgs {
    fn budget(&self) -> MemoryBudget {
        match self.mem_gb {
            Some(gb) => MemoryBudget::from_gb(gb),
            None => MemoryBudget::default(),
        }
    }
}

#[derive(Args, Debug)]
struct ComputeArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long)]
    k: u32,
    /// Window length.
    #[arg(long)]
    h: u32,
    /// Index of the last iterate (at least 2).
    #[arg(long)]
    iters: u32,
    /// Fixed-point denominator p.
    #[arg(long, default_value_t = FxScale::DEFAULT_P)]
    scale: i64,
    /// Slack added to the proposed rate, in units of 1/p.
    #[arg(long, default_value_t = FxScale::DEFAULT_EPS_NUM)]
    eps_num: i64,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    backend: BackendArg,
    /// Where to write the certificate.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Binary)]
    format: FormatArg,
    /// No per-iteration progress on stderr.
    #[arg(long)]
    quiet: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Edit distance of two words over a..z.
    Distance { u: String, v: String },
    /// Longest common subsequence length of two words over a..z.
    Lcs { u: String, v: String },
    /// Exact expected best-split score for window prefixes s and t.
    Expected {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
    },
    /// Random checks of the concatenation inequalities.
    Decomposition {
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 12)]
        max_len: usize,
        #[arg(long, default_value_t = 4)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Monte-Carlo estimate of the normalized expected score.
    Mc {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, value_enum)]
    recipe: recipes::RecipeName,
    /// Skip rows with a larger window.
    #[arg(long)]
    max_h: Option<u32>,
    /// Skip rows with a larger alphabet.
    #[arg(long)]
    max_k: Option<u32>,
    #[command(flatten)]
    run: RunArgs,
}

/// Exit code for a library error.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidInput(_) | Error::InvalidConfig(_) => EXIT_USAGE,
        Error::Capacity { .. } => EXIT_CAPACITY,
        Error::NoCertificate { .. } => EXIT_INVALID,
        Error::Structural(_) => EXIT_STRUCTURAL,
        Error::Overflow(_) => EXIT_CAPACITY,
        Error::Io(_) => EXIT_IO,
    }
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            if informational {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let _ = write!(err, "{e}");
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Compute(args) => compute(args, out, err),
        Command::Verify { cert } => verify_file(cert, out),
        Command::Oracle(cmd) => run_oracle(cmd, out),
        Command::Table(args) => table(args, out, err),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn compute(args: ComputeArgs, out: &mut dyn Write, err: &mut dyn Write) -> certbound::Result<i32> {
    let problem = Problem::from(args.problem);
    let config = RunConfig {
        problem,
        alphabet: Alphabet::new(args.k, args.h)?,
        scale: FxScale::new(args.scale, args.eps_num)?,
        iterations: args.iters,
        backend: args.backend.resolve(),
        threads: args.run.threads,
        budget: args.run.budget(),
        progress: !args.quiet,
    };
    let report = match compute_bound(&config) {
        Ok(report) => report,
        Err(Error::NoCertificate { witness, r_num }) => {
            writeln!(
                err,
                "no certificate at this configuration: the inequality fails at ordinal {witness} with r_num = {r_num}; \
                 try more iterations or a longer window"
            )?;
            return Ok(EXIT_INVALID);
        }
        Err(e) => return Err(e),
    };
    let bound = report.bound();
    if let Some(path) = &args.out {
        write_certificate(&report.certificate, path, args.format.into())?;
        // the file, not just the in-memory copy, must carry the certificate
        if read_certificate(path)? != report.certificate {
            return Err(Error::Structural(format!(
                "{} did not read back identically",
                path.display()
            )));
        }
    }
    writeln!(out, "bound {} {}", bound.relation(), bound.decimal())?;
    if !args.quiet {
        writeln!(
            err,
            "{} backend, {} classes, r_num = {}, delta range [{}, {}]",
            report.backend,
            report.certificate.values.len(),
            report.rate.r_num,
            report.rate.delta_min_num,
            report.rate.delta_max_num
        )?;
    }
    Ok(EXIT_OK)
}

fn verify_file(path: PathBuf, out: &mut dyn Write) -> certbound::Result<i32> {
    let cert = read_certificate(&path)?;
    let bound = cert.bound();
    match verify(&cert)? {
        Verdict::Valid => {
            writeln!(
                out,
                "VALID: {} {} {}",
                bound.constant_name(),
                bound.relation(),
                bound.decimal()
            )?;
            Ok(EXIT_OK)
        }
        Verdict::Invalid { witness } => {
            writeln!(out, "INVALID: inequality fails at ordinal {witness}")?;
            Ok(EXIT_INVALID)
        }
    }
}

fn run_oracle(cmd: OracleCommand, out: &mut dyn Write) -> certbound::Result<i32> {
    match cmd {
        OracleCommand::Distance { u, v } => {
            writeln!(
                out,
                "{}",
                oracle::edit_distance(&parse_word(&u, 26)?, &parse_word(&v, 26)?)
            )?;
        }
        OracleCommand::Lcs { u, v } => {
            writeln!(out, "{}", oracle::lcs(&parse_word(&u, 26)?, &parse_word(&v, 26)?))?;
        }
        OracleCommand::Expected { problem, s, t, n, k } => {
            let value = oracle::exact_expected_min(problem.into(), &parse_word(&s, k)?, &parse_word(&t, k)?, n, k)?;
            writeln!(out, "{value}")?;
        }
        OracleCommand::Decomposition {
            samples,
            max_len,
            k,
            seed,
        } => {
            let report = oracle::decomposition_checks(samples, max_len, k, seed);
            writeln!(
                out,
                "{} inequalities checked, {} violations",
                report.cases,
                report.violations.len()
            )?;
            for v in report.violations.iter().take(10) {
                writeln!(out, "violation ({}): {:?}", v.problem, v.parts)?;
            }
            if !report.passed() {
                return Ok(EXIT_INVALID);
            }
        }
        OracleCommand::Mc {
            problem,
            k,
            n,
            samples,
            seed,
        } => {
            let est = oracle::mc_estimate(problem.into(), k, n, samples, seed)?;
            if est.exact {
                writeln!(out, "mean {} (exact over {} pairs)", est.mean, est.samples)?;
            } else {
                writeln!(
                    out,
                    "mean {:.6} +- {:.6} ({} samples, seed {seed})",
                    est.mean, est.std_error, est.samples
                )?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn table(args: TableArgs, out: &mut dyn Write, err: &mut dyn Write) -> certbound::Result<i32> {
    writeln!(out, "problem,k,h,iters,bound,paper_bound,ok")?;
    let rows = recipes::rows(args.recipe)
        .iter()
        .filter(|r| args.max_h.is_none_or(|m| r.h <= m) && args.max_k.is_none_or(|m| r.k <= m));
    for row in rows {
        let outcome = Alphabet::new(row.k, row.h).and_then(|alphabet| {
            let mut config = RunConfig::new(row.problem, alphabet, row.iterations);
            config.backend = Some(row.backend);
            config.scale = FxScale::new(row.p, FxScale::DEFAULT_EPS_NUM)?;
            config.threads = args.run.threads;
            config.budget = args.run.budget();
            compute_bound(&config)
        });
        let (bound, ok) = match outcome {
            Ok(report) => {
                let bound = report.bound();
                (bound.decimal(), bound.within(row.published, recipes::SLACK)?)
            }
            Err(e) => {
                writeln!(err, "{} k={} h={}: {e}", row.problem, row.k, row.h)?;
                ("error".to_string(), false)
            }
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.problem, row.k, row.h, row.iterations, bound, row.published, ok
        )?;
        out.flush()?;
    }
    Ok(EXIT_OK)
}
