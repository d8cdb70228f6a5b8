//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::cert::{build_f, certify_positive, parse_decimal};
use crate::error::{Error, Result};
use crate::profiles::{analytic_profile, profile_residual, ProfileKind, ProfileValue};
use crate::rescale::{run, RunConfig, StopReason};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Oracle tolerance on the sup-norm residual.
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "blowup-lab", version, about = "Dynamic rescaling runs, certificates and profile oracles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Burgers,
    Heat,
    Riccati,
    HighOrder,
    HouliSmooth,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation from a JSON config and write the diagnostics CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify that the truncated form minus `threshold` is positive definite.
    Certify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        threshold: String,
        #[arg(long)]
        shift: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a profile and its steady-equation residual as CSV.
    Oracle {
        #[arg(long, value_enum)]
        kind: OracleKind,
        /// `c` for riccati and high-order, `C` for burgers.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.5)]
        lambda_b: f64,
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        hi: f64,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a closed-form profile on a 512-point grid with default parameters.
    ProfileCheck {
        #[arg(long, value_enum)]
        kind: OracleKind,
    },
}

fn profile_of(kind: OracleKind, c: f64, lambda_b: f64, m: u32) -> ProfileKind {
    match kind {
        OracleKind::Burgers => ProfileKind::Burgers { lambda_b, c },
        OracleKind::Heat => ProfileKind::Heat,
        OracleKind::Riccati => ProfileKind::Riccati { c },
        OracleKind::HighOrder => ProfileKind::HighOrder { m, c },
        OracleKind::HouliSmooth => ProfileKind::HouliSmooth,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?))
}

fn cmd_run(config: &Path, out: &Path) -> i32 {
    let cfg = match std::fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("{}: {e}", config.display())))
        .and_then(|t| RunConfig::from_json(&t))
    {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e @ Error::Config(_)) | Err(e @ Error::InvalidGrid(_)) | Err(e @ Error::InvalidParameter(_)) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("{e}");
            return EXIT_BLOWUP;
        }
    };
    if let Err(e) = create(out).and_then(|w| outcome.series.write_csv(w)) {
        eprintln!("{e}");
        return EXIT_FAILED;
    }
    eprintln!("stopped: {} at tau = {}", outcome.stop, outcome.state.tau);
    match outcome.stop {
        StopReason::Blowup(_) | StopReason::DegenerateAnchor(_) => EXIT_BLOWUP,
        _ => EXIT_OK,
    }
}

fn cmd_certify(n: usize, threshold: &str, shift: &str, out: &Path) -> Result<i32> {
    let th = parse_decimal(threshold)?;
    let sh = parse_decimal(shift)?;
    let cert = certify_positive(&build_f(n)?, &th, &sh)?;
    let mut w = create(out)?;
    serde_json::to_writer_pretty(&mut w, &cert).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    eprintln!("{}", cert.verdict);
    Ok(if cert.is_verified() { EXIT_OK } else { EXIT_FAILED })
}

/// Samples `kind` at `samples` equispaced points in `[lo, hi]` and writes
/// `x,value,residual` rows. Returns the largest absolute residual.
pub fn write_oracle<W: Write>(kind: ProfileKind, samples: usize, lo: f64, hi: f64, w: W) -> Result<f64> {
    if samples < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter(format!("need samples >= 2 and lo < hi, got {samples}, [{lo}, {hi}]")));
    }
    let mut csv = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    csv.write_record(["x", "value", "residual"]).map_err(io)?;
    let mut worst = 0.0f64;
    for i in 0..samples {
        let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let v = match analytic_profile(kind, x)? {
            ProfileValue::Scalar(v) => v,
            ProfileValue::Triple(t) => t[0],
        };
        let r = profile_residual(kind, x)?;
        worst = worst.max(r.abs());
        csv.write_record([format!("{x:e}"), format!("{v:e}"), format!("{r:e}")]).map_err(io)?;
    }
    csv.flush()?;
    Ok(worst)
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// exit with [`EXIT_CONFIG`]; `--help` and `--version` with [`EXIT_OK`].
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}

/// Dispatches a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { config, out } => return cmd_run(&config, &out),
        Command::Certify { n, threshold, shift, out } => cmd_certify(n, &threshold, &shift, &out),
        Command::Oracle { kind, c, lambda_b, m, samples, lo, hi, out } => {
            let p = profile_of(kind, c, lambda_b, m);
            let worst = match out {
                Some(path) => create(&path).and_then(|w| write_oracle(p, samples, lo, hi, w)),
                None => write_oracle(p, samples, lo, hi, io::stdout().lock()),
            };
            worst.map(|r| {
                eprintln!("max |residual| = {r:e}");
                if r <= ORACLE_TOL { EXIT_OK } else { EXIT_FAILED }
            })
        }
        Command::ProfileCheck { kind } => {
            let p = profile_of(kind, 1.0, 0.5, 2);
            let hi = if kind == OracleKind::HouliSmooth { 2.0 * std::f64::consts::PI } else { 50.0 };
            write_oracle(p, 512, 0.0, hi, io::sink()).map(|r| {
                println!("{kind:?}: max |residual| = {r:e}");
                if r <= ORACLE_TOL { EXIT_OK } else { EXIT_FAILED }
            })
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("{e}");
        EXIT_FAILED
    })
}
