//! Evaluation metrics: operation consistency (OC), scheduling efficiency
//! (SE), executability (Exe), goal condition recall (GCR) and success (SR).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::exec::{execute, status_delta, Execution, ExecutionTrace, StatusSet, SymbolicState};
use crate::model::{Allocation, Operation, OperationType};
use crate::schedule::{ScheduleGraph, ScheduleOrigin};
use crate::task::TaskInstance;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error(
        "scheduling efficiency undefined: ground truth is fully serial ({ops} ops in {ops} steps) and makespans differ"
    )]
    DegenerateDenominator { ops: usize },
    #[error("goal condition recall undefined: ground-truth status set is empty")]
    EmptyGtStatus,
    #[error("task has no ground truth {0}")]
    MissingGroundTruth(&'static str),
    #[error("ground truth is inconsistent: {0}")]
    InvalidGroundTruth(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub oc: f64,
    pub se: f64,
    pub exe: f64,
    pub gcr: f64,
    pub sr: u8,
    pub executed_fully: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_schedule_origin: Option<ScheduleOrigin>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl MetricsReport {
    /// All five metrics at their maximum.
    pub fn is_perfect(&self) -> bool {
        self.oc == 1.0 && self.se == 1.0 && self.exe == 1.0 && self.gcr == 1.0 && self.sr == 1
    }
}

type OpKey<'a> = (OperationType, &'a str, &'a str, Option<&'a str>, Option<&'a str>);

fn allocation_multiset<'a>(ops: &'a [Operation], alloc: &'a Allocation) -> BTreeMap<OpKey<'a>, usize> {
    let mut out = BTreeMap::new();
    for op in ops {
        let key = (
            op.op_type,
            op.workpiece.as_str(),
            op.machine_1.as_str(),
            op.machine_2.as_deref(),
            alloc.robot_of(&op.id).map(String::as_str),
        );
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

/// Multiset intersection over union of (type, workpiece, machines, robot)
/// entries. Operation ids play no part in the match.
pub fn operation_consistency(
    gen_ops: &[Operation],
    gen_alloc: &Allocation,
    gt_ops: &[Operation],
    gt_alloc: &Allocation,
) -> f64 {
    let gen = allocation_multiset(gen_ops, gen_alloc);
    let gt = allocation_multiset(gt_ops, gt_alloc);
    let mut inter = 0usize;
    let mut union = 0usize;
    for key in gen.keys().chain(gt.keys().filter(|k| !gen.contains_key(*k))) {
        let a = gen.get(key).copied().unwrap_or(0);
        let b = gt.get(key).copied().unwrap_or(0);
        inter += a.min(b);
        union += a.max(b);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// `gen` is `None` when the generated schedule is infeasible.
pub fn scheduling_efficiency(
    gen: Option<&ScheduleGraph>,
    gt: &ScheduleGraph,
    o_gt_count: usize,
    oc: f64,
) -> Result<f64, MetricsError> {
    let Some(gen) = gen.filter(|_| oc >= 1.0) else {
        return Ok(0.0);
    };
    let (ts_gen, ts_gt) = (gen.makespan as f64, gt.makespan as f64);
    if gen.makespan == gt.makespan {
        return Ok(1.0);
    }
    if o_gt_count as u32 == gt.makespan {
        return Err(MetricsError::DegenerateDenominator { ops: o_gt_count });
    }
    let o = o_gt_count as f64;
    let raw = (o - ts_gen) / (o - ts_gt);
    if !(0.0..=1.0).contains(&raw) {
        log::warn!("scheduling efficiency {raw} clamped (|O_gt| = {o_gt_count}, gen {ts_gen}, gt {ts_gt})");
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Fraction of operations that ran every statement without failure.
pub fn executability(trace: &ExecutionTrace, op_count: usize) -> f64 {
    if op_count == 0 {
        return 1.0;
    }
    trace.executed_count() as f64 / op_count as f64
}

pub fn goal_condition_recall(status_gen: &StatusSet, status_gt: &StatusSet) -> Result<f64, MetricsError> {
    if status_gt.is_empty() {
        return Err(MetricsError::EmptyGtStatus);
    }
    let hit = status_gt.intersection(status_gen).count();
    Ok(hit as f64 / status_gt.len() as f64)
}

pub fn success_rate(se: f64, gcr: f64) -> u8 {
    u8::from(se == 1.0 && gcr == 1.0)
}

/// Ground-truth status: the state change produced by the ground-truth
/// program under the ground-truth schedule.
pub fn ground_truth_status(task: &TaskInstance) -> Result<(ScheduleGraph, StatusSet), MetricsError> {
    let gt = task.ground_truth.as_ref().ok_or(MetricsError::MissingGroundTruth("record"))?;
    let program = gt.program.as_ref().ok_or(MetricsError::MissingGroundTruth("program"))?;
    let graph = gt.graph(&task.scene).map_err(|e| MetricsError::InvalidGroundTruth(e.to_string()))?;
    let schedule = gt
        .schedule_graph(&graph)
        .ok_or(MetricsError::MissingGroundTruth("schedule"))?
        .map_err(|e| MetricsError::InvalidGroundTruth(e.to_string()))?;
    let run = execute(&schedule, program, &task.scene);
    if !run.executed_fully {
        let first = run.trace.failures().next().map(|f| format!("{} failed: {}", f.operation, f.reason));
        return Err(MetricsError::InvalidGroundTruth(first.unwrap_or_else(|| "blocked operations".into())));
    }
    let status = status_delta(&run.final_state, &SymbolicState::initial(&task.scene));
    Ok((schedule, status))
}

/// Composes the five metrics for one generated plan.
///
/// `schedule` is `None` when no feasible schedule could be produced, and
/// `execution` is `None` when nothing could be executed at all.
pub fn evaluate_instance(
    task: &TaskInstance,
    ops: &[Operation],
    alloc: &Allocation,
    schedule: Option<&ScheduleGraph>,
    execution: Option<&Execution>,
) -> Result<MetricsReport, MetricsError> {
    let gt = task.ground_truth.as_ref().ok_or(MetricsError::MissingGroundTruth("record"))?;
    let (gt_schedule, gt_status) = ground_truth_status(task)?;
    let mut notes = Vec::new();

    let oc = operation_consistency(ops, alloc, &gt.operations, &gt.allocation);
    let se = match scheduling_efficiency(schedule, &gt_schedule, gt.operations.len(), oc) {
        Ok(v) => v,
        Err(e @ MetricsError::DegenerateDenominator { .. }) => {
            notes.push(format!("degenerate_denominator: {e}"));
            0.0
        }
        Err(e) => return Err(e),
    };
    let (exe, gcr, executed_fully) = match execution {
        Some(run) => {
            let status = status_delta(&run.final_state, &SymbolicState::initial(&task.scene));
            (executability(&run.trace, ops.len()), goal_condition_recall(&status, &gt_status)?, run.executed_fully)
        }
        None => (0.0, goal_condition_recall(&StatusSet::new(), &gt_status)?, false),
    };
    let origin = gt.schedule.as_ref().and_then(|s| s.origin);
    if origin == Some(ScheduleOrigin::Fifo) {
        notes.push("gt_schedule_fifo: scheduling efficiency measured against the heuristic".into());
    }
    Ok(MetricsReport { oc, se, exe, gcr, sr: success_rate(se, gcr), executed_fully, gt_schedule_origin: origin, notes })
}
