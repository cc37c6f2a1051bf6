//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed (or the log is incomplete),
//! 2 usage, parse or I/O error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{check_log, AnalysisError, CheckOptions};
use crate::sim::{self, load_config, ScenarioConfig, SimError, BASELINE_TOML};
use crate::telemetry::{RunLog, TelemetryError, COLUMNS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vtolsim", version, about = "VTOL position control from IMU and GPS: simulate, check, plot")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its telemetry CSV.
    Simulate {
        /// Scenario config (TOML).
        config: PathBuf,
        /// Output CSV [default: <config stem>.csv next to the config].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a telemetry CSV, or simulate a config and check the result.
    Check {
        /// Telemetry CSV or scenario config.
        input: PathBuf,
        /// Config input only: zero the wind.
        #[arg(long)]
        no_wind: bool,
        /// Config input only: ideal sensors (no noise, no gyro bias).
        #[arg(long)]
        no_noise: bool,
        /// CSV input only: scenario whose gains and Lyapunov weights the log
        /// was produced with [default: baseline].
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also require stepwise Lyapunov decrease, the attitude-error floor
        /// and lambda_min(W) > 0. Implied by --no-wind --no-noise.
        #[arg(long)]
        strict: bool,
        /// Structured report path [default: <input>.report].
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render the four SVG figures of a telemetry CSV.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the documented baseline scenario.
    Baseline {
        /// Destination [default: baseline.toml].
        #[arg(default_value = "baseline.toml")]
        path: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<TelemetryError> for Failure {
    fn from(e: TelemetryError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<sim::ConfigError> for Failure {
    fn from(e: sim::ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::Check(e.to_string())
    }
}

/// Runs the CLI with `argv` (including the program name) and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match cli.cmd {
        Command::Simulate { config, out, seed } => simulate(&config, out, seed),
        Command::Check {
            input,
            no_wind,
            no_noise,
            config,
            strict,
            report,
        } => check(&input, no_wind, no_noise, config.as_deref(), strict, report),
        Command::Plot { csv, out } => plot(&csv, &out),
        Command::Baseline { path } => baseline(&path),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            EXIT_CHECK_FAILED
        }
    }
}

fn simulate(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), Failure> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let out = out.unwrap_or_else(|| config.with_extension("csv"));
    let log = sim::run(&cfg)?;
    log.save_csv(&out)?;
    eprintln!("wrote {} rows to {}", log.len(), out.display());
    Ok(())
}

fn looks_like_csv(path: &Path) -> Result<bool, Failure> {
    use std::io::BufRead;
    let f = std::fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
    let mut first = String::new();
    std::io::BufReader::new(f)
        .read_line(&mut first)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(first.trim_end().starts_with(&format!("{},{}", COLUMNS[0], COLUMNS[1])))
}

fn check(
    input: &Path,
    no_wind: bool,
    no_noise: bool,
    config: Option<&Path>,
    strict: bool,
    report: Option<PathBuf>,
) -> Result<(), Failure> {
    let (log, cfg, strict) = if looks_like_csv(input)? {
        if no_wind || no_noise {
            return Err(Failure::Usage("--no-wind/--no-noise apply to a config input, not a CSV".into()));
        }
        let cfg = match config {
            Some(p) => load_config(p)?,
            None => ScenarioConfig::baseline(),
        };
        (RunLog::load_csv(input)?, cfg, strict)
    } else {
        if config.is_some() {
            return Err(Failure::Usage("--config applies to a CSV input".into()));
        }
        let mut cfg = load_config(input)?;
        if no_wind {
            cfg = cfg.without_wind();
        }
        if no_noise {
            cfg = cfg.without_noise();
        }
        let undisturbed = cfg.plant.v_w == crate::mathx::Vec3::zero()
            && cfg.sensors == crate::sensors::SensorParams::noiseless(cfg.sensors.r1, cfg.seed);
        (sim::run(&cfg)?, cfg, strict || undisturbed)
    };

    let opts = CheckOptions {
        strict,
        ..CheckOptions::default()
    };
    let rep = match check_log(&log, &cfg.gains, &cfg.lyapunov, &opts) {
        Ok(r) => r,
        Err(AnalysisError::IncompleteLog(m)) => return Err(Failure::Check(format!("incomplete log: {m}"))),
    };
    print!("{}", rep.to_text());
    let report = report.unwrap_or_else(|| {
        let mut s = input.as_os_str().to_owned();
        s.push(".report");
        PathBuf::from(s)
    });
    std::fs::write(&report, rep.to_summary())
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", report.display())))?;
    if rep.passed() {
        Ok(())
    } else {
        let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Failure::Check(failed.join(", ")))
    }
}

fn plot(csv: &Path, out: &Path) -> Result<(), Failure> {
    match sim::plot_csv(csv, out) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

fn baseline(path: &Path) -> Result<(), Failure> {
    std::fs::write(path, BASELINE_TOML).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["vtolsim"]), EXIT_USAGE);
        assert_eq!(run(["vtolsim", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["vtolsim", "plot", "x.csv"]), EXIT_USAGE);
        assert_eq!(run(["vtolsim", "simulate", "/nonexistent/cfg.toml"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(["vtolsim", "--help"]), EXIT_OK);
    }
}
