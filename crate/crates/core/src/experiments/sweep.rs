//! Sweep execution over (method, K, M, trial) cells.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    error_rate, estimate, estimate_mc, exact_grid_sum, rng_from_seed, EvaluatedNodes,
};
use crate::integrands::LcuIntegrand;
use crate::quadrature::{grid_counts, grid_nodes, qmc_nodes, Method};
use crate::shots::ShotMode;

use super::cases::{build_case, CaseIntegrands};
use super::config::{CaseKind, ExperimentConfig};
use super::seed::{companion_seed, derive_seed};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const FLAG_DETERMINISTIC: &str = "deterministic";
pub const FLAG_ABS_FALLBACK: &str = "abs_fallback";
pub const FLAG_ZERO_DENOMINATOR: &str = "zero_denominator";
pub const FLAG_FAILED: &str = "failed";
pub const FLAG_ABORTED: &str = "aborted";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub case: CaseKind,
    pub method: Method,
    pub k_requested: usize,
    pub k_actual: usize,
    pub shots: ShotMode,
    pub trial: usize,
    pub seed: u64,
    pub estimate: f64,
    pub exact: f64,
    pub abs_error: f64,
    pub error_rate: f64,
    /// `;`-separated markers, empty for a plain successful cell.
    pub flag: String,
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.flag.split(';').any(|f| f.starts_with(FLAG_FAILED) || f.starts_with(FLAG_ABORTED))
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub config_digest: String,
    pub version: String,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub method: Method,
    pub k: usize,
    pub shots: ShotMode,
    pub trial: usize,
    pub seed: u64,
    /// Stands for every trial of a noiseless configuration.
    pub collapsed: bool,
}

/// Noiseless QMC and grid cells are deterministic and run as a single trial.
pub fn plan_cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &method in &config.sweep.methods {
        for k in config.k_values() {
            for shots in config.shot_modes() {
                let collapsed = method.deterministic_nodes() && shots == ShotMode::Exact;
                let trials = if collapsed { 1 } else { config.sweep.trials };
                for trial in 0..trials {
                    let seed = derive_seed(config.sweep.master_seed, method, k, shots, trial);
                    cells.push(Cell { method, k, shots, trial, seed, collapsed });
                }
            }
        }
    }
    cells
}

/// Node count a cell will use, or the reason it cannot run.
pub fn actual_nodes(integrand: &LcuIntegrand, method: Method, k: usize) -> Result<usize> {
    match method.grid_rule() {
        Some(rule) => Ok(grid_counts(k, integrand.dims(), rule)?.iter().product()),
        None => Ok(k),
    }
}

/// Deterministic per-(method, K) data shared by every trial.
#[derive(Debug)]
enum Prepared {
    Nodes(EvaluatedNodes),
    Exact(f64),
    Both(EvaluatedNodes, f64),
}

impl Prepared {
    fn value(&self, shots: ShotMode, seed: u64) -> Result<f64> {
        match (self, shots) {
            (Prepared::Exact(v) | Prepared::Both(_, v), ShotMode::Exact) => Ok(*v),
            (Prepared::Nodes(ev) | Prepared::Both(ev, _), mode) => ev.estimate(mode, &mut rng_from_seed(seed)),
            (Prepared::Exact(_), ShotMode::Shots(_)) => unreachable!("shot cells always get node data"),
        }
    }
}

fn prepare(integrand: &LcuIntegrand, method: Method, k: usize, need_nodes: bool, need_exact: bool) -> Result<Prepared> {
    match method.grid_rule() {
        Some(rule) => {
            let nodes = grid_nodes(k, integrand.domain(), rule)?;
            let exact = if need_exact { Some(exact_grid_sum(integrand, &nodes)?) } else { None };
            let ev = if need_nodes { Some(EvaluatedNodes::evaluate(integrand, &nodes)?) } else { None };
            Ok(match (ev, exact) {
                (Some(ev), Some(v)) => Prepared::Both(ev, v),
                (Some(ev), None) => Prepared::Nodes(ev),
                (None, Some(v)) => Prepared::Exact(v),
                (None, None) => unreachable!("prepare called with nothing to do"),
            })
        }
        None => {
            let nodes = qmc_nodes(k, integrand.density())?;
            Ok(Prepared::Nodes(EvaluatedNodes::evaluate(integrand, &nodes)?))
        }
    }
}

type PrepMap = HashMap<(Method, usize), std::result::Result<Prepared, String>>;

fn prepare_all(integrand: &LcuIntegrand, config: &ExperimentConfig, cells: &[Cell]) -> PrepMap {
    let mut wanted: Vec<(Method, usize, bool, bool)> = Vec::new();
    for c in cells.iter().filter(|c| c.method.deterministic_nodes()) {
        let exact = c.shots == ShotMode::Exact;
        let nodes = !exact || c.method == Method::Qmc;
        match wanted.iter_mut().find(|w| w.0 == c.method && w.1 == c.k) {
            Some(w) => {
                w.2 |= nodes;
                w.3 |= exact && c.method != Method::Qmc;
            }
            None => wanted.push((c.method, c.k, nodes, exact && c.method != Method::Qmc)),
        }
    }
    wanted.retain(|&(m, k, _, _)| match (actual_nodes(integrand, m, k), config.sweep.node_cap) {
        (Ok(n), Some(cap)) => n <= cap,
        _ => true,
    });
    wanted
        .into_par_iter()
        .map(|(m, k, nodes, exact)| ((m, k), prepare(integrand, m, k, nodes, exact).map_err(|e| e.to_string())))
        .collect()
}

fn cell_value(integrand: &LcuIntegrand, prep: &PrepMap, cell: &Cell, seed: u64) -> Result<f64> {
    if cell.method == Method::Mc {
        return Ok(estimate_mc(integrand, cell.k, cell.shots, seed)?.estimate);
    }
    match prep.get(&(cell.method, cell.k)) {
        Some(Ok(p)) => p.value(cell.shots, seed),
        Some(Err(msg)) => Err(Error::InvalidParameter(msg.clone())),
        None => estimate(integrand, cell.method, cell.k, cell.shots, seed).map(|r| r.estimate),
    }
}

fn run_cell(
    case: CaseKind,
    integrands: &CaseIntegrands,
    preps: &(PrepMap, Option<PrepMap>),
    cap: Option<usize>,
    cell: &Cell,
) -> SweepRow {
    let start = Instant::now();
    let num = &integrands.primary;
    let exact = match &integrands.denominator {
        Some(den) => num.exact_target() / den.exact_target(),
        None => num.exact_target(),
    };
    let mut flags: Vec<String> = Vec::new();
    if cell.collapsed {
        flags.push(FLAG_DETERMINISTIC.into());
    }
    let k_actual = actual_nodes(num, cell.method, cell.k);
    let outcome: Result<f64> = match (&k_actual, cap) {
        (Err(e), _) => Err(Error::InvalidParameter(e.to_string())),
        (Ok(n), Some(c)) if *n > c => {
            flags.push(format!("{FLAG_ABORTED}: {n} nodes exceed cap {c}"));
            Ok(f64::NAN)
        }
        _ => {
            let v = cell_value(num, &preps.0, cell, cell.seed);
            match (&integrands.denominator, preps.1.as_ref()) {
                (Some(den), Some(dp)) => v.and_then(|n| {
                    let d = cell_value(den, dp, cell, companion_seed(cell.seed))?;
                    if d == 0.0 {
                        flags.push(FLAG_ZERO_DENOMINATOR.into());
                    }
                    Ok(n / d)
                }),
                _ => v,
            }
        }
    };
    let estimate = match outcome {
        Ok(v) => v,
        Err(e) => {
            flags.push(format!("{FLAG_FAILED}: {e}"));
            f64::NAN
        }
    };
    let rate = error_rate(estimate, exact);
    if rate.absolute_fallback {
        flags.push(FLAG_ABS_FALLBACK.into());
    }
    SweepRow {
        case,
        method: cell.method,
        k_requested: cell.k,
        k_actual: k_actual.unwrap_or(0),
        shots: cell.shots,
        trial: cell.trial,
        seed: cell.seed,
        estimate,
        exact,
        abs_error: (estimate - exact).abs(),
        error_rate: rate.value,
        flag: flags.join(";"),
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs every cell on the current rayon pool and returns rows in canonical
/// (method, K, M, trial) order.
pub fn run_sweep_with(config: &ExperimentConfig, integrands: &CaseIntegrands) -> Result<SweepResult> {
    config.validate()?;
    let cells = plan_cells(config);
    let preps = (
        prepare_all(&integrands.primary, config, &cells),
        integrands.denominator.as_ref().map(|d| prepare_all(d, config, &cells)),
    );
    let mut rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|c| run_cell(config.case, integrands, &preps, config.sweep.node_cap, c))
        .collect();
    rows.sort_by_key(|r| (r.method, r.k_requested, r.shots, r.trial));
    Ok(SweepResult { rows, config_digest: config.digest(), version: VERSION.into() })
}

/// Builds the case and runs the sweep on a pool with the configured thread count.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let integrands = build_case(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| run_sweep_with(config, &integrands))
}

/// Recomputes one row from its recorded method, K, M and seed.
pub fn replay_row(integrands: &CaseIntegrands, method: Method, k: usize, shots: ShotMode, seed: u64) -> Result<f64> {
    let num = estimate(&integrands.primary, method, k, shots, seed)?.estimate;
    match &integrands.denominator {
        Some(den) => Ok(num / estimate(den, method, k, shots, companion_seed(seed))?.estimate),
        None => Ok(num),
    }
}
