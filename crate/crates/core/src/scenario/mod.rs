//! Grid-world scenario generation, scenario-file handling, metrics and
//! trace persistence behind the CLI.

pub mod config;
pub mod grid;
pub mod io;
pub mod metrics;

pub use config::ScenarioConfig;
pub use grid::{generate_grid_scenario, GridScenarioParams};
pub use metrics::{max_normalized_rmse, worst_case_field, CellReport};
