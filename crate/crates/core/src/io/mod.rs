//! File formats, boundary schedules, scenario drivers and the command line.

pub mod cli;
pub mod network_file;
pub mod report;
pub mod run;
pub mod scenario;
pub mod schedule;

pub use network_file::{parse_network, read_network, serialize_native, NetworkFormat};
pub use scenario::{parse_scenario, read_scenario, ScenarioSpec};
pub use schedule::{eval_boundary_schedule, Schedule, ScheduleControls};
