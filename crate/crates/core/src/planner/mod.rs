//! Planner contract: (scene, instruction) to operations, allocation and
//! precedence.

mod llm;
mod text;

use serde::{Deserialize, Serialize};

use crate::model::{Allocation, Operation, PrecedenceSet};
use crate::task::TaskInstance;
use crate::validate::validate_planner_output;

pub use llm::{LlmConfig, LlmPlanner, ReplayMode, PLANNER_PROMPT};
pub use text::{parse_planner_text, render_planner_text};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerOutput {
    pub ops: Vec<Operation>,
    pub alloc: Allocation,
    pub prec: PrecedenceSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
    /// Parse failures and violated invariants; empty means valid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<String>,
}

impl PlannerOutput {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("planner output serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("planner unavailable: {0}")]
    Unavailable(String),
    #[error("task `{0}` carries no ground truth")]
    NoGroundTruth(String),
}

/// Implementations must tolerate concurrent `plan` calls on distinct tasks.
///
/// Planners receive the whole task. Model-backed planners read only the
/// scene and instruction; the ground-truth planner reads the embedded record.
pub trait Planner: Send + Sync {
    fn name(&self) -> &str;
    fn plan(&self, task: &TaskInstance) -> Result<PlannerOutput, PlannerError>;
}

/// Returns the task's ground-truth triple verbatim.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroundTruthPlanner;

impl Planner for GroundTruthPlanner {
    fn name(&self) -> &str {
        "gt"
    }

    fn plan(&self, task: &TaskInstance) -> Result<PlannerOutput, PlannerError> {
        let gt = task.ground_truth.as_ref().ok_or_else(|| PlannerError::NoGroundTruth(task.id().to_string()))?;
        let report = validate_planner_output(&task.scene, &gt.operations, &gt.allocation, &gt.precedence);
        Ok(PlannerOutput {
            ops: gt.operations.clone(),
            alloc: gt.allocation.clone(),
            prec: gt.precedence.clone(),
            raw: None,
            issues: report.violations.iter().map(|v| v.to_string()).collect(),
        })
    }
}

/// Wraps another planner and reassigns one operation per task to a
/// different robot, for sensitivity checks.
pub struct WrongRobotPlanner<P> {
    pub inner: P,
}

impl<P: Planner> Planner for WrongRobotPlanner<P> {
    fn name(&self) -> &str {
        "wrong-robot"
    }

    fn plan(&self, task: &TaskInstance) -> Result<PlannerOutput, PlannerError> {
        let mut out = self.inner.plan(task)?;
        if let Some((op, robot)) = perturbation(task, &out) {
            out.alloc.pairs.insert(op, robot);
        }
        Ok(out)
    }
}

/// First operation (in list order) that another robot can also serve, with
/// the first such robot by id. Falls back to any other robot when no
/// reachable alternative exists.
pub fn perturbation(task: &TaskInstance, out: &PlannerOutput) -> Option<(String, String)> {
    let mut robots: Vec<&str> = task.scene.robots.iter().map(|r| r.id.as_str()).collect();
    robots.sort_unstable();
    let mut fallback = None;
    for op in &out.ops {
        let current = out.alloc.robot_of(&op.id).map(String::as_str);
        for r in robots.iter().copied().filter(|r| Some(*r) != current) {
            let reaches =
                task.scene.robot(r).is_some_and(|robot| op.machines().all(|m| robot.reachable_machines.contains(m)));
            if reaches {
                return Some((op.id.clone(), r.to_string()));
            }
            fallback.get_or_insert_with(|| (op.id.clone(), r.to_string()));
        }
    }
    fallback
}
