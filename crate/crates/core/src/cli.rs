//! Command-line front end. Exit codes: 0 success, 1 a verdict failed,
//! 2 usage or configuration error, 3 runtime or solver failure.

use crate::coefficients::CoefficientSet;
use crate::diagnostics::CheckReport;
use crate::experiments::{
    parse_config, parse_list, run_compare, run_sweep, snapshot_file_name, write_report, write_snapshot, write_text,
    RunConfig, Verdict, COMPARE_BVE_BETA2, DEFAULT_SWEEP,
};
use crate::fv::{run, RunError, RunOutput};
use crate::galerkin::{verify, VerifyConfig};
use crate::invariants::{check_invariants, InvariantConfig};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bve", version, about = "Brinkman vertical-equilibrium two-phase flow solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` configuration file; defaults apply without one.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Seed of the randomized suites.
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One simulation: snapshots and report.csv.
    Run(Common),
    /// The same setup for several β², checking that the front width shrinks.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated β² values.
        #[arg(long, value_name = "LIST")]
        beta2: Option<String>,
    },
    /// Brinkman (β² = 1e-6) against Darcy (β² = 0).
    Compare(Common),
    /// The Galerkin checks of the energy and increment estimates.
    VerifyGalerkin(Common),
    /// Randomized structural checks of the velocity reconstruction and the
    /// time step.
    CheckInvariants(Common),
}

/// Parses `argv` (including the program name) and runs the command.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::Sweep { common, beta2 } => cmd_sweep(&common, beta2.as_deref()),
        Command::Compare(c) => cmd_compare(&c),
        Command::VerifyGalerkin(c) => cmd_verify(&c),
        Command::CheckInvariants(c) => cmd_invariants(&c),
    }
}

fn load_config(common: &Common) -> Result<RunConfig, i32> {
    let Some(path) = &common.config else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn write_run(out: &RunOutput, dir: &Path) -> Result<(), i32> {
    let io = |e: crate::experiments::IoError| {
        eprintln!("error: {e}");
        EXIT_RUNTIME
    };
    for (k, snap) in out.snapshots.iter().enumerate() {
        write_snapshot(&snap.field, &dir.join(snapshot_file_name(k, snap.t))).map_err(io)?;
    }
    write_report(&out.report, &dir.join("report.csv")).map_err(io)
}

fn write_file(path: &Path, text: &str) -> Result<(), i32> {
    write_text(path, text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_RUNTIME
    })
}

fn coefficients(cfg: &RunConfig) -> Result<CoefficientSet, i32> {
    CoefficientSet::corey(cfg.sim.viscosity_ratio).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn code(r: Result<i32, i32>) -> i32 {
    r.unwrap_or_else(|c| c)
}

fn cmd_run(common: &Common) -> i32 {
    code((|| {
        let cfg = load_config(common)?;
        let coeffs = coefficients(&cfg)?;
        match run(&cfg.sim, &coeffs, &cfg.initial) {
            Ok(out) => {
                write_run(&out, &common.out)?;
                let last = out.report.last().expect("report has the initial record");
                println!(
                    "run: ok, {} steps to t = {}, front at {:.4}, max overshoot {:.4e}",
                    out.report.steps.len(),
                    last.t,
                    last.front_position,
                    out.report.max_overshoot()
                );
                Ok(EXIT_OK)
            }
            Err(RunError::Config(e)) => {
                eprintln!("error: {e}");
                Err(EXIT_USAGE)
            }
            Err(RunError::Step { source, partial }) => {
                write_run(&partial, &common.out)?;
                eprintln!("error: {source}");
                println!("run: FAILED after {} steps; partial output written", partial.report.steps.len());
                Err(EXIT_RUNTIME)
            }
        }
    })())
}

fn beta2_dir(beta2: f64) -> String {
    format!("beta2_{beta2:e}")
}

fn cmd_sweep(common: &Common, list: Option<&str>) -> i32 {
    code((|| {
        let cfg = load_config(common)?;
        let betas = match list {
            None => DEFAULT_SWEEP.to_vec(),
            Some(text) => parse_list(text).map_err(|e| {
                eprintln!("error: --beta2: {e}");
                EXIT_USAGE
            })?,
        };
        if betas.is_empty() || betas.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            eprintln!("error: --beta2 needs a non-empty list of finite, non-negative values");
            return Err(EXIT_USAGE);
        }
        let report = run_sweep(&cfg, &betas).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        })?;
        let mut failed = false;
        for e in &report.entries {
            match &e.result {
                Ok(out) => write_run(out, &common.out.join(beta2_dir(e.beta2)))?,
                Err(RunError::Step { source, partial }) => {
                    write_run(partial, &common.out.join(beta2_dir(e.beta2)))?;
                    eprintln!("error: β² = {:e}: {source}", e.beta2);
                    failed = true;
                }
                Err(err) => {
                    eprintln!("error: β² = {:e}: {err}", e.beta2);
                    failed = true;
                }
            }
            let width = e.summary.and_then(|s| s.front_width).map_or("none".to_string(), |w| format!("{w:.4}"));
            println!("sweep: β² = {:e}, front width {width}", e.beta2);
        }
        write_file(&common.out.join("sweep.csv"), &report.table_csv())?;
        println!("sweep: width strictly decreasing: {}", report.verdict.name());
        if failed {
            Err(EXIT_RUNTIME)
        } else {
            Ok(if report.verdict == Verdict::Pass { EXIT_OK } else { EXIT_VERDICT })
        }
    })())
}

fn cmd_compare(common: &Common) -> i32 {
    code((|| {
        let cfg = load_config(common)?;
        let report = run_compare(&cfg, COMPARE_BVE_BETA2, 0.0).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        })?;
        let mut failed = false;
        for (name, result) in [("bve", &report.bve), ("dve", &report.dve)] {
            match result {
                Ok(out) => write_run(out, &common.out.join(name))?,
                Err(RunError::Step { source, partial }) => {
                    write_run(partial, &common.out.join(name))?;
                    eprintln!("error: {name}: {source}");
                    failed = true;
                }
                Err(err) => {
                    eprintln!("error: {name}: {err}");
                    failed = true;
                }
            }
        }
        write_file(&common.out.join("compare.csv"), &report.table_csv())?;
        for (name, v) in report.verdicts() {
            println!("compare: {name}: {}", v.name());
        }
        if failed {
            Err(EXIT_RUNTIME)
        } else {
            Ok(if report.passed() { EXIT_OK } else { EXIT_VERDICT })
        }
    })())
}

fn finish_checks(report: &CheckReport, path: &Path) -> Result<i32, i32> {
    print!("{report}");
    write_file(path, &report.to_string())?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERDICT })
}

fn cmd_verify(common: &Common) -> i32 {
    code((|| {
        let cfg = load_config(common)?;
        let vc = VerifyConfig {
            beta2: cfg.sim.beta2,
            viscosity_ratio: cfg.sim.viscosity_ratio,
            seed: common.seed,
            ..VerifyConfig::default()
        };
        let report = verify(&vc).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        })?;
        finish_checks(&report, &common.out.join("galerkin_report.txt"))
    })())
}

fn cmd_invariants(common: &Common) -> i32 {
    code((|| {
        let cfg = load_config(common)?;
        let ic = InvariantConfig { seed: common.seed, viscosity_ratio: cfg.sim.viscosity_ratio, ..InvariantConfig::default() };
        finish_checks(&check_invariants(&ic), &common.out.join("invariants_report.txt"))
    })())
}
