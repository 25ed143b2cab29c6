//! Configuration-driven scenario runner: ties the modules into reproducible
//! batch experiments with persisted CSV/JSON artifacts and a manifest that
//! records every parameter and tolerance used.

pub mod config;
mod scenarios;

pub use config::{Config, ConfigError};
pub use scenarios::{
    list_scenarios, run_scenario, CheckResult, ExitReport, RunError, ScenarioSpec, SCENARIOS,
};
