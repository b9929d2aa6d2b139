//! Configuration, seeding, sweep execution, CSV persistence and the CLI.

pub mod cases;
pub mod cli;
pub mod config;
pub mod csv_io;
pub mod seed;
pub mod sweep;

pub use cases::{build_case, CaseIntegrands};
pub use config::{load_config, CaseKind, ExperimentConfig};
pub use csv_io::{write_sweep, RunManifest, HEADER};
pub use seed::{companion_seed, derive_seed};
pub use sweep::{plan_cells, replay_row, run_sweep, run_sweep_with, SweepResult, SweepRow};
