//! `poprec`: simulate lossy samples, solve local inverses, recover
//! populations and run the analysis checks from the command line.
//!
//! Every command renders its whole output in memory first. The output goes to
//! `--out` (with a `<out>.manifest.json` sidecar) or to stdout (with the
//! manifest on stderr), and `poprec replay` reruns a manifest and compares
//! output hashes.

mod commands;
pub mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use manifest::{sidecar_path, RunManifest};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl From<poprec_core::Error> for CliError {
    fn from(e: poprec_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "poprec", version, about = "Lossy population recovery")]
pub struct Cli {
    /// Write the output here instead of stdout; the manifest goes next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a distribution file.
    Gen(GenArgs),
    /// Draw lossy samples from a distribution file.
    Sample(SampleArgs),
    /// Estimate the mass of one string from a sample file.
    Estimate(EstimateArgs),
    /// Solve for an optimal local inverse and print its certificate.
    Inverse(InverseArgs),
    /// Recover a population from a distribution (simulated) or a sample file.
    Recover(RecoverArgs),
    /// Run one of the analysis checks.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Sweep optimal sensitivities over a grid and write CSV.
    Bench(BenchArgs),
    /// Rerun a manifest and compare the output hash.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Uniform distribution over these comma-separated strings.
    #[arg(long, value_delimiter = ',')]
    pub strings: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of random support strings.
    #[arg(long)]
    pub support: Option<usize>,
    /// Equal masses for random support.
    #[arg(long)]
    pub uniform: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub dist: Option<PathBuf>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    /// Simulate samples from this distribution file.
    #[arg(long, conflicts_with = "samples")]
    pub dist: Option<PathBuf>,
    /// Read samples from this file.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reuse one growing sample pool across stages.
    #[arg(long)]
    pub reuse_samples: bool,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Transformed program and its dual polynomials.
    Dual(DualArgs),
    /// Hadamard's three-circle inequality for one polynomial.
    ThreeCircle(ThreeCircleArgs),
    /// The growth bound `‖p‖_{C₁} ≥ |p(0)|^{1+d}`.
    Lemma4(Lemma4Args),
    /// The `D₁`-sup relaxation objective against `(1/ε)^{f(μ)}`.
    Relaxation(RelaxationArgs),
    /// Values of `(1/C)(1−x²)^{n/2}`.
    BadPoly(BadPolyArgs),
}

#[derive(Debug, Args)]
pub struct DualArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    /// Basis nodes (default `−1 + 2j/n`).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alphas: Vec<String>,
}

/// A polynomial given by coefficients or as a bad polynomial of degree `bad`.
#[derive(Debug, Args)]
pub struct PolyArgs {
    /// Coefficients `p₀,p₁,…`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<String>,
    /// Use the bad polynomial of this even degree (needs `--mu`).
    #[arg(long)]
    pub bad: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct ThreeCircleArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Lemma4Args {
    #[command(flatten)]
    pub poly: PolyArgs,
    /// Disk `D_μ(1−μ)` unless `--center`/`--radius` are given.
    #[arg(long)]
    pub mu: Option<String>,
    /// `re` or `re,im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub center: Vec<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RelaxationArgs {
    #[command(flatten)]
    pub poly: PolyArgs,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
}

#[derive(Debug, Args)]
pub struct BadPolyArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Lengths: `1..12` (inclusive) or a comma list.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<String>,
    /// Failure probability for the `samples_required` column.
    #[arg(long, default_value = "1/20")]
    pub delta: String,
    /// Fill the `lp_time` column (makes the output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

/// What a command produced, before it is written anywhere.
pub struct Outcome {
    pub output: Vec<u8>,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let target: &mut dyn Write = if shown { out } else { err };
            let _ = write!(target, "{}", e.render());
            return if shown { 0 } else { 2 };
        }
    };
    match dispatch(cli, &argv, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(err, "run `poprec --help` for usage");
            }
            e.exit_code()
        }
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("POPREC_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Domain("POPREC_THREADS must be a positive integer".into()))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Domain(e.to_string()))
}

fn dispatch(cli: Cli, argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Replay(args) = &cli.command {
        let report = replay(&args.manifest)?;
        out.write_all(report.as_bytes()).map_err(io_err)?;
        return Ok(());
    }
    let pool = thread_pool()?;
    let start = Instant::now();
    let outcome = pool.install(|| execute(&cli.command))?;
    let duration_secs = start.elapsed().as_secs_f64();

    let inputs = outcome
        .inputs
        .iter()
        .map(|p| {
            Ok(manifest::InputRecord {
                path: p.display().to_string(),
                sha256: manifest::hash_file(p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let record = RunManifest {
        subcommand: subcommand_name(&cli.command),
        argv: argv.to_vec(),
        params: outcome.params,
        seed: outcome.seed,
        inputs,
        output: cli.out.as_ref().map(|p| p.display().to_string()),
        output_sha256: manifest::sha256_hex(&outcome.output),
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_secs,
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &outcome.output).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
            let side = sidecar_path(path);
            fs::write(&side, record.to_json() + "\n")
                .map_err(|e| CliError::Domain(format!("{}: {e}", side.display())))?;
        }
        None => {
            out.write_all(&outcome.output).map_err(io_err)?;
            writeln!(err, "{}", record.to_json()).map_err(io_err)?;
        }
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Domain(e.to_string())
}

/// Runs a command and returns its in-memory result without writing anything.
pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Gen(a) => commands::gen(a),
        Command::Sample(a) => commands::sample(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Inverse(a) => commands::inverse(a),
        Command::Recover(a) => commands::recover(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Bench(a) => commands::bench(a),
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

fn subcommand_name(command: &Command) -> String {
    match command {
        Command::Gen(_) => "gen",
        Command::Sample(_) => "sample",
        Command::Estimate(_) => "estimate",
        Command::Inverse(_) => "inverse",
        Command::Recover(_) => "recover",
        Command::Analyze(a) => match a {
            AnalyzeCommand::Dual(_) => "analyze dual",
            AnalyzeCommand::ThreeCircle(_) => "analyze three-circle",
            AnalyzeCommand::Lemma4(_) => "analyze lemma4",
            AnalyzeCommand::Relaxation(_) => "analyze relaxation",
            AnalyzeCommand::BadPoly(_) => "analyze bad-poly",
        },
        Command::Bench(_) => "bench",
        Command::Replay(_) => "replay",
    }
    .to_string()
}

/// Reruns the command recorded in a manifest and checks inputs and output
/// against the recorded hashes.
pub fn replay(path: &std::path::Path) -> Result<String, CliError> {
    let m = RunManifest::read(path)?;
    for input in &m.inputs {
        let now = manifest::hash_file(std::path::Path::new(&input.path))?;
        if now != input.sha256 {
            return Err(CliError::Domain(format!("input {} changed since the run", input.path)));
        }
    }
    let cli = Cli::try_parse_from(&m.argv).map_err(|e| CliError::Domain(format!("manifest argv: {e}")))?;
    let outcome = thread_pool()?.install(|| execute(&cli.command))?;
    let got = manifest::sha256_hex(&outcome.output);
    if got != m.output_sha256 {
        return Err(CliError::Domain(format!(
            "output differs: recorded {}, replayed {got}",
            m.output_sha256
        )));
    }
    Ok(format!("identical {got}\n"))
}
