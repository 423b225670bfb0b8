//! `stbc-lab` command line.
//!
//! Exit codes: 0 when every check passes, 1 on a failed check or runtime
//! error, 2 on invalid input (unknown code, unsupported size, bad flag
//! combination).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use stbc_core::analysis::{analyze, expected_min_det};
use stbc_core::decoders::DecoderId;
use stbc_core::{CodeId, CodeSpec, QamAlphabet};

use crate::error::LabError;
use crate::sim::{self, SimConfig, StopRule};
use crate::verify::{self, Fault, VerifyConfig};

#[derive(Debug, Parser)]
#[command(
    name = "stbc-lab",
    version,
    about = "Analysis, verification and CER simulation of 2x2 space-time block codes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum determinant and structural checks for one code (JSON).
    Analyze(AnalyzeArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Codeword-error-rate sweep over SNR (CSV).
    Simulate(SimulateArgs),
    /// List registered codes.
    Codes,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// proposed, golden, htw-pga, sezginer-sari or ciod
    pub code: String,
    /// Constellation size (4, 16 or 64).
    #[arg(long, default_value_t = 4)]
    pub qam: usize,
    /// Output path, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Random instances per randomized check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Inject a known defect (negative control).
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["shuffle-generator"]))]
    pub fault: Option<String>,
    /// JSON detail; `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub code: String,
    /// exhaustive, conditional or sphere
    #[arg(long, default_value = "sphere")]
    pub decoder: String,
    #[arg(long, default_value_t = 4)]
    pub qam: usize,
    /// `start:step:stop` in dB (stop included when on the grid), or a single value.
    #[arg(long)]
    pub snr: String,
    /// Trials per SNR point; with --target-errors, the per-point maximum.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Stop a point after this many codeword errors (checked every 10000 trials).
    #[arg(long)]
    pub target_errors: Option<u64>,
    /// Keep rows already present in --out and only simulate missing points.
    #[arg(long)]
    pub resume: bool,
    /// Transmit unnormalized integer-grid codewords.
    #[arg(long)]
    pub no_normalize: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "STBC_LAB_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// CSV path, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

fn is_stdout(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn write_output(
    path: &Path,
    f: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), LabError> {
    if is_stdout(path) {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        f(&mut lock)
            .and_then(|_| lock.flush())
            .map_err(|e| LabError::io("<stdout>", e))
    } else {
        let file = File::create(path).map_err(|e| LabError::io(path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| LabError::io(path, e))
    }
}

fn echo_config(command: &str, cfg: &impl Serialize) {
    let json = serde_json::to_string(cfg).unwrap_or_default();
    eprintln!("stbc-lab {command}: {json}");
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<bool, LabError> {
    let code = CodeSpec::by_name(&args.code)?;
    let alphabet = QamAlphabet::new(args.qam)?;
    echo_config("analyze", args);
    let report = analyze(&code, &alphabet);
    write_output(&args.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })?;
    eprintln!(
        "{} M={}: min det {:.4}, {} passed, {} failed",
        code.id(),
        args.qam,
        report.min_det,
        report.checks_passed.len(),
        report.checks_failed.len()
    );
    for name in &report.checks_failed {
        eprintln!("FAILED: {name}");
    }
    Ok(report.all_passed())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, LabError> {
    let fault = args
        .fault
        .as_deref()
        .map(|f| f.parse::<Fault>().expect("validated by clap"));
    let cfg = VerifyConfig {
        trials: args.trials,
        seed: args.seed,
        fault,
    };
    echo_config("verify", args);
    let report = verify::run(&cfg)?;
    for c in &report.checks {
        eprintln!(
            "{} {:<22} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    write_output(&args.out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })?;
    Ok(report.all_passed)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<bool, LabError> {
    let code: CodeId = args.code.parse()?;
    let decoder: DecoderId = args.decoder.parse()?;
    let snr = sim::parse_snr_range(&args.snr)?;
    let stop = match args.target_errors {
        Some(target) => StopRule::TargetErrors {
            target,
            max_trials: args.trials,
        },
        None => StopRule::Fixed {
            trials: args.trials,
        },
    };
    let cfg = SimConfig {
        code,
        decoder,
        m: args.qam,
        snr_db: snr,
        stop,
        seed: args.seed,
        normalize: !args.no_normalize,
        threads: (args.threads > 0).then_some(args.threads),
    };
    cfg.validate()?;
    if args.resume && is_stdout(&args.out) {
        return Err(LabError::BadFlags("--resume needs a file for --out".into()));
    }
    echo_config("simulate", &cfg);
    let existing = if args.resume {
        sim::resumable_points(&cfg, &args.out)?
    } else {
        Vec::new()
    };
    let points = sim::run_sweep_with(&cfg, &existing, |p, reused| {
        eprintln!(
            "{} {:>6} dB: {}/{} errors, CER {:.3e} [{:.3e}, {:.3e}]{}",
            p.code,
            p.snr_db,
            p.errors,
            p.trials,
            p.cer,
            p.ci95_lo,
            p.ci95_hi,
            if reused { " (resumed)" } else { "" }
        );
    })?;
    write_output(&args.out, |w| {
        sim::write_csv(w, &points).map_err(io::Error::other)
    })?;
    Ok(true)
}

#[derive(Serialize)]
struct CodeRow {
    name: &'static str,
    symbols: usize,
    rotated_symbols: bool,
    min_det_4qam: Option<f64>,
    conditional_decoding: bool,
}

fn cmd_codes() -> Result<bool, LabError> {
    write_output(Path::new("-"), |w| {
        for id in CodeId::ALL {
            let code = CodeSpec::get(id);
            let row = CodeRow {
                name: id.name(),
                symbols: code.symbols(),
                rotated_symbols: code.uses_rotation(),
                min_det_4qam: expected_min_det(id, 4).map(|e| e.0),
                conditional_decoding: DecoderId::Conditional.supports(&code),
            };
            writeln!(w, "{}", serde_json::to_string(&row)?)?;
        }
        Ok(())
    })?;
    Ok(true)
}

pub fn run(cli: &Cli) -> Result<bool, LabError> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Codes => cmd_codes(),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
