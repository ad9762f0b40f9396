//! Configuration, scenario runs, reports and the built-in self-test.

pub mod config;
pub mod report;
pub mod run;
pub mod selftest;

pub use config::{Overrides, QuartetSpec, Scenario, ScenarioConfig, StateChoice};
pub use report::{emit_report, ReportFormat, RunReport, CSV_HEADER};
pub use run::{chi_square, run_scenario, violates_local_bound, CHI2_15_P999};
pub use selftest::{self_test, Check};
