//! Command-line front end. Exit codes are the machine contract; all
//! human-readable text goes to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{
    noise_sweep, reference_witness, run_pipeline, separable_baseline_with, uniform_grid, write_sweep_csv,
    BaselineSummary, CertificationReport, SweepRecord, Verdict, DETECTION_MARGIN,
};
use crate::error::{Error, Result};
use crate::io::{load_state, load_witness};
use crate::network::{canonical_config, probability_table};
use crate::selftest::{selftest_check, SelfTestReport, DEFAULT_TOLERANCE};
use crate::states::{check_unit_interval, DensityMatrix};
use crate::witness::{witness_from_state, OmegaExport, WitnessSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_DETECTED: i32 = 1;
pub const EXIT_SELFTEST_FAILED: i32 = 2;
pub const EXIT_INPUT_ERROR: i32 = 3;

/// Separable terms per baseline sample.
pub const BASELINE_TERMS: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "dicert", version, about = "Device-independent entanglement certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline on a target state
    Certify(Flags),
    /// Check the chained Bell values of the canonical network
    Selftest(Flags),
    /// Sweep the auxiliary visibility
    Sweep(Flags),
    /// Minimum of I over random separable states
    Baseline(Flags),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct Flags {
    /// Target state as JSON
    #[arg(long)]
    state: Option<PathBuf>,
    /// Witness operator as JSON
    #[arg(long)]
    witness: Option<PathBuf>,
    /// Visibility of the auxiliary Bell pairs
    #[arg(long, default_value_t = 1.0)]
    visibility: f64,
    /// Self-test tolerance on the chained Bell value
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Comma-separated visibilities (default: 101 points on [0, 1])
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Certify,
    Selftest,
    Sweep,
    Baseline,
}

/// Validated settings for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub state_path: Option<PathBuf>,
    pub witness_path: Option<PathBuf>,
    pub visibility: f64,
    pub tolerance: f64,
    pub grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let grid = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad grid value {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("grid is empty".into()));
    }
    Ok(grid)
}

impl RunConfig {
    fn from_cli(cli: Cli) -> Result<Self> {
        let (command, f) = match cli.command {
            Command::Certify(f) => (CommandKind::Certify, f),
            Command::Selftest(f) => (CommandKind::Selftest, f),
            Command::Sweep(f) => (CommandKind::Sweep, f),
            Command::Baseline(f) => (CommandKind::Baseline, f),
        };
        let grid = match &f.grid {
            Some(text) => parse_grid(text)?,
            None => uniform_grid(101),
        };
        let cfg = RunConfig {
            command,
            state_path: f.state,
            witness_path: f.witness,
            visibility: f.visibility,
            tolerance: f.tolerance,
            grid,
            samples: f.samples,
            seed: f.seed,
            output_path: f.out,
            format: f.format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit_interval("visibility", self.visibility)?;
        for &v in &self.grid {
            check_unit_interval("grid visibility", v)?;
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance {} must be non-negative", self.tolerance)));
        }
        if self.command == CommandKind::Baseline && self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be at least 1".into()));
        }
        if matches!(self.command, CommandKind::Certify | CommandKind::Sweep) && self.state_path.is_none() {
            return Err(Error::InvalidParameter("--state is required".into()));
        }
        for path in self.state_path.iter().chain(&self.witness_path) {
            if !path.is_file() {
                return Err(Error::InvalidParameter(format!("no such file: {}", path.display())));
            }
        }
        Ok(())
    }

    fn state(&self) -> Result<Option<DensityMatrix>> {
        self.state_path.as_deref().map(load_state).transpose()
    }

    fn witness(&self) -> Result<Option<WitnessSpec>> {
        self.witness_path.as_deref().map(load_witness).transpose()
    }

    fn emit(&self, bytes: &[u8]) -> Result<()> {
        match &self.output_path {
            Some(path) => fs::write(path, bytes)?,
            None => io::stdout().write_all(bytes)?,
        }
        Ok(())
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    #[serde(flatten)]
    report: &'a CertificationReport,
    omega: OmegaExport,
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<i32> {
    let rho = cfg.state()?.ok_or_else(|| Error::InvalidParameter("--state is required".into()))?;
    let witness = match cfg.witness()? {
        Some(w) => w,
        None => witness_from_state(&rho)?,
    };
    let report = run_pipeline(&rho, cfg.visibility, cfg.tolerance, Some(&witness))?;
    match report.i_value {
        Some(i) => eprintln!("J = ({:.9}, {:.9}), I = {i:.9}, verdict {:?}", report.selftest.j_left, report.selftest.j_right, report.verdict),
        None => eprintln!(
            "self-test failed: J = ({:.9}, {:.9}), target {:.9}",
            report.selftest.j_left, report.selftest.j_right, report.selftest.target
        ),
    }
    let bytes = match cfg.format {
        Format::Json => json_bytes(&CertifyOutput { report: &report, omega: witness.omega().export() })?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["I", "J_left", "J_right", "witness_trace", "verdict", "config_digest"])?;
            let verdict = serde_json::to_value(report.verdict)?;
            wtr.write_record([
                report.i_value.map(|i| i.to_string()).unwrap_or_default(),
                report.selftest.j_left.to_string(),
                report.selftest.j_right.to_string(),
                report.witness_trace.to_string(),
                verdict.as_str().unwrap_or_default().to_string(),
                report.provenance.config_digest.clone(),
            ])?;
            wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    cfg.emit(&bytes)?;
    Ok(match report.verdict {
        Verdict::Entangled => EXIT_OK,
        Verdict::NotDetected => EXIT_NOT_DETECTED,
        Verdict::SelftestFailed => EXIT_SELFTEST_FAILED,
    })
}

pub fn cmd_selftest(cfg: &RunConfig) -> Result<i32> {
    // the self-test never touches the target, which only fixes dimensions
    let rho = cfg.state()?.unwrap_or_else(|| DensityMatrix::maximally_mixed(&[2, 2]));
    let table = probability_table(&canonical_config(&rho, cfg.visibility)?)?;
    let report: SelfTestReport = selftest_check(&table, cfg.tolerance)?;
    eprintln!("J = ({:.9}, {:.9}), target {:.9}, passed {}", report.j_left, report.j_right, report.target, report.passed);
    let bytes = match cfg.format {
        Format::Json => json_bytes(&report)?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.serialize(&report)?;
            wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    cfg.emit(&bytes)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_SELFTEST_FAILED })
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    /// Digest of the network at visibility 1.
    config_digest: String,
    records: &'a [SweepRecord],
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<i32> {
    let rho = cfg.state()?.ok_or_else(|| Error::InvalidParameter("--state is required".into()))?;
    let witness = cfg.witness()?;
    let records = noise_sweep(&rho, &cfg.grid, witness.as_ref())?;
    let detected = records.iter().filter(|r| r.detected).count();
    eprintln!("{} points, {detected} detected", records.len());
    let bytes = match cfg.format {
        Format::Json => {
            let config_digest = canonical_config(&rho, 1.0)?.digest();
            json_bytes(&SweepOutput { config_digest, records: &records })?
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&records, &mut buf)?;
            buf
        }
    };
    cfg.emit(&bytes)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BaselineOutput {
    normal: BaselineSummary,
    adversarial: BaselineSummary,
}

pub fn cmd_baseline(cfg: &RunConfig) -> Result<i32> {
    let witness = match (cfg.witness()?, cfg.state()?) {
        (Some(w), _) => w,
        (None, Some(rho)) => witness_from_state(&rho)?,
        (None, None) => reference_witness()?,
    };
    let normal = separable_baseline_with(&witness, cfg.samples, BASELINE_TERMS, cfg.seed, false)?;
    let adversarial = separable_baseline_with(&witness, cfg.samples, BASELINE_TERMS, cfg.seed, true)?;
    eprintln!("min I: normal {:.3e}, adversarial {:.3e}", normal.min_i, adversarial.min_i);
    let sound = normal.min_i >= -DETECTION_MARGIN && adversarial.min_i >= -DETECTION_MARGIN;
    let bytes = match cfg.format {
        Format::Json => json_bytes(&BaselineOutput { normal, adversarial })?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["mode", "min_I", "worst_seed", "samples", "seed"])?;
            for (mode, s) in [("normal", &normal), ("adversarial", &adversarial)] {
                wtr.write_record([
                    mode.to_string(),
                    s.min_i.to_string(),
                    s.worst_seed.to_string(),
                    s.num_states.to_string(),
                    s.seed.to_string(),
                ])?;
            }
            wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?
        }
    };
    cfg.emit(&bytes)?;
    Ok(if sound { EXIT_OK } else { EXIT_NOT_DETECTED })
}

pub fn execute(cfg: &RunConfig) -> Result<i32> {
    match cfg.command {
        CommandKind::Certify => cmd_certify(cfg),
        CommandKind::Selftest => cmd_selftest(cfg),
        CommandKind::Sweep => cmd_sweep(cfg),
        CommandKind::Baseline => cmd_baseline(cfg),
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT_ERROR } else { EXIT_OK };
        }
    };
    match RunConfig::from_cli(cli).and_then(|cfg| execute(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}
