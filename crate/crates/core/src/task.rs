//! Task-instance files: a scene, an instruction and optional ground truth.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{build_graph, DisjunctiveGraph, GraphError};
use crate::model::{Allocation, Operation, PrecedenceSet, Scene};
use crate::program::{check_program, Program};
use crate::schedule::{is_feasible, ScheduleDoc, ScheduleError, ScheduleGraph};
use crate::validate::{validate_planner_output, validate_scene, ValidationReport, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    SingleRobot,
    SimpleMulti,
    ComplexMulti,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::SingleRobot, Tier::SimpleMulti, Tier::ComplexMulti];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::SingleRobot => "single_robot",
            Tier::SimpleMulti => "simple_multi",
            Tier::ComplexMulti => "complex_multi",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tier `{s}` (expected single_robot, simple_multi or complex_multi)"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    #[serde(default)]
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub allocation: Allocation,
    #[serde(default)]
    pub precedence: PrecedenceSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<Program>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleDoc>,
}

impl GroundTruth {
    pub fn graph(&self, scene: &Scene) -> Result<DisjunctiveGraph, GraphError> {
        build_graph(scene, &self.operations, &self.allocation, &self.precedence)
    }

    /// The stored schedule re-oriented over the ground-truth graph.
    pub fn schedule_graph(&self, graph: &DisjunctiveGraph) -> Option<Result<ScheduleGraph, ScheduleError>> {
        self.schedule.as_ref().map(|doc| ScheduleGraph::from_start_steps(graph, doc.start_steps.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    pub scene: Scene,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl TaskInstance {
    /// Identifier for reports; `"task"` when the file carries none.
    pub fn id(&self) -> &str {
        self.task_id.as_deref().unwrap_or("task")
    }

    /// Canonical form: pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("task serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("cannot read task file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed task file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid task: {0}")]
    Validation(ValidationReport),
}

/// Every invariant of the scene and, when present, the ground truth.
pub fn validate_task(task: &TaskInstance) -> ValidationReport {
    let mut report = validate_scene(&task.scene);
    let Some(gt) = &task.ground_truth else {
        return report;
    };
    let gt_report = validate_planner_output(&task.scene, &gt.operations, &gt.allocation, &gt.precedence);
    let structural_ok = report.passed() && gt_report.passed();
    report.extend(gt_report);
    if !structural_ok {
        return report;
    }

    if let Some(program) = &gt.program {
        let mut called: Vec<&str> = program.calls.iter().map(|c| c.operation.as_str()).collect();
        called.sort_unstable();
        let mut expected: Vec<&str> = gt.operations.iter().map(|o| o.id.as_str()).collect();
        expected.sort_unstable();
        if called != expected {
            report.push(Violation::ProgramMismatch {
                detail: format!("calls cover {called:?}, operations are {expected:?}"),
            });
        }
        for issue in check_program(program, &task.scene).issues {
            report.push(Violation::ProgramMismatch { detail: issue.to_string() });
        }
    }

    if let Some(doc) = &gt.schedule {
        let graph = gt.graph(&task.scene).expect("validated ground truth builds a graph");
        match ScheduleGraph::from_start_steps(&graph, doc.start_steps.clone()) {
            Err(e) => report.push(Violation::ScheduleMismatch { detail: e.to_string() }),
            Ok(schedule) => {
                if doc.start_steps.len() != graph.op_count() {
                    report.push(Violation::ScheduleMismatch {
                        detail: "start steps name operations outside the ground truth".into(),
                    });
                } else if !is_feasible(&schedule, &graph) {
                    report.push(Violation::ScheduleMismatch { detail: "schedule is not feasible".into() });
                } else if schedule.makespan != doc.makespan {
                    report.push(Violation::ScheduleMismatch {
                        detail: format!(
                            "makespan {} recorded, {} implied by start steps",
                            doc.makespan, schedule.makespan
                        ),
                    });
                }
            }
        }
    }
    report
}

pub fn parse_task_instance(text: &str) -> Result<TaskInstance, TaskError> {
    let task: TaskInstance = serde_json::from_str(text)?;
    let report = validate_task(&task);
    if report.passed() {
        Ok(task)
    } else {
        Err(TaskError::Validation(report))
    }
}

pub fn load_task_instance(path: impl AsRef<Path>) -> Result<TaskInstance, TaskError> {
    parse_task_instance(&std::fs::read_to_string(path)?)
}
