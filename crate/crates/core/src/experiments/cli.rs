//! Command-line front end. `main` only forwards to [`run_cli`].

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::estimators::{default_reference_k, rng_from_seed, theory_bounds};
use crate::quadrature::halton_into;
use crate::quadrature::discrepancy_report;

use super::cases::build_case;
use super::config::{load_config, CaseKind, ExperimentConfig};
use super::csv_io::{format_real, read_manifest, read_row, write_sweep};
use super::sweep::{replay_row, run_sweep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const CASE1_CFG: &str = include_str!("../../configs/case1.cfg");
pub const CASE2_CFG: &str = include_str!("../../configs/case2.cfg");
pub const MICROCANONICAL_CFG: &str = include_str!("../../configs/microcanonical.cfg");
pub const LINEAR_SOLVER_CFG: &str = include_str!("../../configs/linear_solver.cfg");

#[derive(Debug, Parser)]
#[command(name = "lcu-lab", version, about = "Sampling studies of LCU integral estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a sweep and write its CSV plus manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the CSV; the file name comes from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Recompute one CSV row (1-based, header excluded) from its seed.
    Replay {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        row: usize,
    },
    /// Star discrepancy of the Halton points in the case's dimension, as CSV.
    Discrepancy {
        #[arg(long)]
        case: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Random probe boxes per size in two or more dimensions.
        #[arg(long, default_value_t = 20000)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Variance and bias constants of the case's primary integrand.
    Bounds {
        #[arg(long)]
        case: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        reference_k: Option<usize>,
    },
}

/// Bundled configuration for a case name; `case1` and `case2` are aliases
/// for the ground-state and Green's function studies.
pub fn bundled_config(case: &str) -> Result<ExperimentConfig> {
    let text = match case {
        "case1" => CASE1_CFG,
        "case2" => CASE2_CFG,
        other => match other.parse::<CaseKind>()? {
            CaseKind::GroundState => CASE1_CFG,
            CaseKind::Greens => CASE2_CFG,
            CaseKind::Microcanonical => MICROCANONICAL_CFG,
            CaseKind::LinearSolver => LINEAR_SOLVER_CFG,
        },
    };
    ExperimentConfig::from_toml_str(text)
}

fn case_config(case: &str, path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let cfg = load_config(p)?;
            let wanted = bundled_config(case)?.case;
            if cfg.case != wanted {
                return Err(Error::Config(format!("config is for case `{}`, not `{wanted}`", cfg.case)));
            }
            Ok(cfg)
        }
        None => bundled_config(case),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` (program name first) and executes the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Run { config, out: dir, seed, threads } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.sweep.master_seed = s;
            }
            if let Some(t) = threads {
                cfg.run.threads = t;
            }
            let csv = match dir {
                Some(d) => d.join(Path::new(&cfg.output.csv).file_name().unwrap_or_default()),
                None => PathBuf::from(&cfg.output.csv),
            };
            let result = run_sweep(&cfg)?;
            write_sweep(&csv, &cfg, &result)?;
            let failures = result.failures();
            writeln!(out, "wrote {} rows to {}", result.rows.len(), csv.display())?;
            if failures > 0 {
                writeln!(err, "{failures} cells failed or were aborted")?;
                return Ok(EXIT_PARTIAL);
            }
            Ok(EXIT_OK)
        }
        Command::Replay { csv, row } => {
            let manifest = read_manifest(&csv)?;
            let key = read_row(&csv, row)?;
            let integrands = build_case(&manifest.config)?;
            let value = replay_row(&integrands, key.method, key.k_requested, key.shots, key.seed);
            let replayed = match value {
                Ok(v) => format_real(v),
                Err(e) => format!("error: {e}"),
            };
            writeln!(out, "recorded {}", key.estimate)?;
            writeln!(out, "replayed {replayed}")?;
            if replayed == key.estimate {
                writeln!(out, "match")?;
                Ok(EXIT_OK)
            } else {
                writeln!(err, "replayed estimate differs from the recorded one")?;
                Ok(EXIT_PARTIAL)
            }
        }
        Command::Discrepancy { case, kmax, config, probes, seed } => {
            let cfg = case_config(&case, config.as_deref())?;
            let dims = build_case(&cfg)?.primary.dims();
            if kmax < 2 {
                return Err(Error::InvalidParameter("kmax must be at least 2".into()));
            }
            let mut points = vec![0.0; kmax * dims];
            for (i, chunk) in points.chunks_mut(dims).enumerate() {
                halton_into(i as u64 + 1, chunk)?;
            }
            let mut k_values: Vec<usize> = (1..usize::BITS).map(|e| 1usize << e).take_while(|&k| k <= kmax).collect();
            if k_values.last() != Some(&kmax) {
                k_values.push(kmax);
            }
            let report = discrepancy_report(&points, dims, &k_values, &mut rng_from_seed(seed), probes)?;
            writeln!(out, "dims,K,d_star,scaled,exact")?;
            for ((k, d), s) in report.k_values.iter().zip(&report.d_star).zip(&report.scaled) {
                writeln!(out, "{dims},{k},{},{},{}", format_real(*d), format_real(*s), report.exact)?;
            }
            writeln!(err, "fitted constant {}", format_real(report.fitted_constant))?;
            Ok(EXIT_OK)
        }
        Command::Bounds { case, config, reference_k } => {
            let cfg = case_config(&case, config.as_deref())?;
            let integrand = build_case(&cfg)?.primary;
            let k = reference_k.unwrap_or_else(|| default_reference_k(integrand.dims()));
            let b = theory_bounds(&integrand, k)?;
            writeln!(out, "case = \"{}\"", cfg.case)?;
            writeln!(out, "integrand = \"{}\"", integrand.label())?;
            writeln!(out, "reference_k = {}", b.reference_k)?;
            writeln!(out, "c_mc_ht = {}", format_real(b.c_mc_ht))?;
            writeln!(out, "c_mc_ni = {}", format_real(b.c_mc_ni))?;
            writeln!(out, "c_tr_ht = {}", format_real(b.c_tr_ht))?;
            writeln!(out, "c_tr_ni = {}", format_real(b.c_tr_ni))?;
            writeln!(out, "density_mass = {}", format_real(b.density_mass))?;
            Ok(EXIT_OK)
        }
    }
}
