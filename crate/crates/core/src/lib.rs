pub mod bench;
pub mod cli;
pub mod exec;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod planner;
pub mod program;
pub mod schedule;
pub mod skill;
pub mod task;
pub mod tree;
pub mod validate;
