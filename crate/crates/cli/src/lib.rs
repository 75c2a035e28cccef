//! Scenario harness, run reports, and plot rendering behind the `owtc`
//! command-line tool.

pub mod plot;
pub mod report;
pub mod scenario;

pub use report::RunReport;
pub use scenario::{run_scenario, ScenarioConfig};
