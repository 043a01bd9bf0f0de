//! Task generation, suite runs and schedule charts.

mod gantt;
mod generator;
mod runner;

pub use gantt::{render_gantt, Gantt, GanttCell};
pub use generator::{generate_instance, generate_suite, tool_for, GenerateError, TierSpec, POINTS};
pub use runner::{run_benchmark, run_task, BenchError, BenchReport, Means, TaskResult};
