//! Scenario loading, task execution and report writing for the `holonome`
//! command line tool.

pub mod examples;
pub mod report;
pub mod run;
pub mod scenario;

pub use report::{Report, Status, TaskEntry};
pub use run::{run_scenario, RunOptions, RunOutcome};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError};
