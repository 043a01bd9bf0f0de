//! Step-synchronous symbolic execution of a scheduled program.
//!
//! Each operation runs its wrapper's bound skill sequence against a private
//! view of the state; effects are committed at the end of the step only if
//! every skill succeeded. Failed operations block their schedule successors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{VertexId, VertexPayload};
use crate::model::{MachineId, OpId, OperationType, RobotId, Scene, StateLabel, WorkpieceId};
use crate::program::{Program, Wrapper};
use crate::schedule::ScheduleGraph;
use crate::skill::{bind, FailureReason, Skill, SkillCall, Slot};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolicState {
    pub workpiece_location: BTreeMap<WorkpieceId, MachineId>,
    pub workpiece_flags: BTreeMap<WorkpieceId, BTreeSet<StateLabel>>,
    pub robot_busy: BTreeMap<RobotId, Option<OpId>>,
    pub machine_busy: BTreeMap<MachineId, Option<OpId>>,
}

impl SymbolicState {
    pub fn initial(scene: &Scene) -> Self {
        let mut state = SymbolicState::default();
        for w in &scene.workpieces {
            if let Some(m) = scene.initial_location(&w.id) {
                state.workpiece_location.insert(w.id.clone(), m.clone());
            }
            state.workpiece_flags.insert(w.id.clone(), BTreeSet::new());
        }
        state.robot_busy = scene.robots.iter().map(|r| (r.id.clone(), None)).collect();
        state.machine_busy = scene.machines.iter().map(|m| (m.id.clone(), None)).collect();
        state
    }

    fn clear_busy(&mut self) {
        self.robot_busy.values_mut().for_each(|v| *v = None);
        self.machine_busy.values_mut().for_each(|v| *v = None);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutedOp {
    pub operation: OpId,
    pub robot: RobotId,
    pub calls: Vec<SkillCall>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureRecord {
    pub step: u32,
    pub operation: OpId,
    /// Index of the failing statement; equal to the statement count when the
    /// operation-level effect itself could not be applied.
    pub skill_index: usize,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub step: u32,
    pub executed: Vec<ExecutedOp>,
    pub failures: Vec<FailureRecord>,
    /// Operations due this step that were not launched because a schedule
    /// predecessor did not complete.
    pub blocked: Vec<OpId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionTrace {
    pub steps: Vec<StepRecord>,
}

impl ExecutionTrace {
    pub fn failures(&self) -> impl Iterator<Item = &FailureRecord> {
        self.steps.iter().flat_map(|s| s.failures.iter())
    }

    pub fn executed(&self) -> impl Iterator<Item = &ExecutedOp> {
        self.steps.iter().flat_map(|s| s.executed.iter())
    }

    pub fn executed_count(&self) -> usize {
        self.steps.iter().map(|s| s.executed.len()).sum()
    }

    /// One JSON object per step, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("step record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<ExecutionTrace, serde_json::Error> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<StepRecord>, _>>()?;
        Ok(ExecutionTrace { steps })
    }
}

/// Workpiece facts that differ from the initial state.
pub type StatusSet = BTreeSet<(WorkpieceId, StateLabel)>;

pub fn status_delta(final_state: &SymbolicState, initial: &SymbolicState) -> StatusSet {
    let mut out = StatusSet::new();
    for (w, m) in &final_state.workpiece_location {
        if initial.workpiece_location.get(w) != Some(m) {
            out.insert((w.clone(), StateLabel::At(m.clone())));
        }
    }
    let empty = BTreeSet::new();
    for (w, flags) in &final_state.workpiece_flags {
        let before = initial.workpiece_flags.get(w).unwrap_or(&empty);
        for f in flags.difference(before) {
            out.insert((w.clone(), f.clone()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub trace: ExecutionTrace,
    pub final_state: SymbolicState,
    pub executed_fully: bool,
}

enum Effect {
    Move(WorkpieceId, MachineId),
    Flag(WorkpieceId, StateLabel),
}

struct Outcome {
    robot: RobotId,
    machines: Vec<MachineId>,
    result: Result<(Vec<SkillCall>, Effect), (usize, FailureReason)>,
}

fn run_operation(wrapper: &Wrapper, body: &[SkillCall], state: &SymbolicState, scene: &Scene) -> Outcome {
    let b = &wrapper.bindings;
    let robot = b.get("robot").cloned().unwrap_or_default();
    let machine_1 = b.get("machine_1").cloned();
    let machine_2 = b.get("machine_2").cloned();
    let machines: Vec<MachineId> = machine_1.iter().chain(machine_2.iter()).cloned().collect();
    let fail = |i, r| Outcome { robot: robot.clone(), machines: machines.clone(), result: Err((i, r)) };

    let Some(workpiece) = b.get("workpiece") else {
        return fail(body.len(), FailureReason::UnboundPlaceholder);
    };
    let mut location = state.workpiece_location.get(workpiece).cloned();
    let mut held = false;
    let mut bound_calls = Vec::with_capacity(body.len());

    for (i, call) in body.iter().enumerate() {
        let bound = match bind(call, b) {
            Ok(bc) => bc,
            Err(reason) => return fail(i, reason),
        };
        let Some(r) = scene.robot(bound.slot(Slot::Robot).unwrap_or_default()) else {
            return fail(i, FailureReason::MissingDevice);
        };
        let machine_id = bound.slot(Slot::Machine);
        let machine = machine_id.and_then(|m| scene.machine(m));
        if machine_id.is_some() && machine.is_none() {
            return fail(i, FailureReason::WrongLocation);
        }
        match bound.skill {
            Skill::ConvertToRobot | Skill::MotionPlan | Skill::MoveByPath => {
                let point = bound.slot(Slot::Point).unwrap_or_default();
                if !machine.is_some_and(|m| m.points.contains(point)) {
                    return fail(i, FailureReason::MissingPoint);
                }
            }
            Skill::ControlDevice => {
                if !r.devices.contains(bound.slot(Slot::Device).unwrap_or_default()) {
                    return fail(i, FailureReason::MissingDevice);
                }
            }
            Skill::DetectBoundary | Skill::ComputeTrajectory | Skill::Attach => {
                if bound.slot(Slot::Workpiece) != Some(workpiece.as_str()) || location.as_deref() != machine_id {
                    return fail(i, FailureReason::WrongLocation);
                }
                if bound.skill == Skill::Attach {
                    held = true;
                }
            }
            Skill::Detach => {
                if !held || bound.slot(Slot::Workpiece) != Some(workpiece.as_str()) {
                    return fail(i, FailureReason::WrongLocation);
                }
                held = false;
                location = machine_id.map(str::to_string);
            }
            Skill::ReturnHome => {}
        }
        bound_calls.push(bound.to_call());
    }

    let start = state.workpiece_location.get(workpiece);
    let effect = match wrapper.op_type {
        OperationType::Transport => {
            let (Some(m1), Some(m2)) = (&machine_1, &machine_2) else {
                return fail(body.len(), FailureReason::UnboundPlaceholder);
            };
            if start != Some(m1) || held {
                return fail(body.len(), FailureReason::WrongLocation);
            }
            Effect::Move(workpiece.clone(), m2.clone())
        }
        processing => {
            let Some(m1) = &machine_1 else {
                return fail(body.len(), FailureReason::UnboundPlaceholder);
            };
            if start != Some(m1) || location.as_ref() != Some(m1) {
                return fail(body.len(), FailureReason::WrongLocation);
            }
            Effect::Flag(workpiece.clone(), processing.flag().expect("processing type has a flag"))
        }
    };
    Outcome { robot, machines, result: Ok((bound_calls, effect)) }
}

/// Runs `program` under `schedule` from the scene's initial state.
pub fn execute(schedule: &ScheduleGraph, program: &Program, scene: &Scene) -> Execution {
    let mut state = SymbolicState::initial(scene);
    let preds = schedule_predecessors(schedule);
    let mut completed: BTreeSet<&str> = BTreeSet::new();
    let mut steps = Vec::new();

    for step in 0..schedule.makespan {
        let mut record = StepRecord { step, executed: vec![], failures: vec![], blocked: vec![] };
        let mut effects = Vec::new();
        for op in schedule.ops_at(step) {
            let ready = preds[op.as_str()].iter().all(|p| completed.contains(*p));
            if !ready {
                record.blocked.push(op.clone());
                continue;
            }

            let resolved = program
                .call_for(op)
                .and_then(|c| program.wrappers.get(&c.wrapper))
                .and_then(|w| program.executions.get(&w.execution).map(|body| (w, body)));
            let Some((wrapper, body)) = resolved else {
                record.failures.push(FailureRecord {
                    step,
                    operation: op.clone(),
                    skill_index: 0,
                    reason: FailureReason::MissingCall,
                });
                continue;
            };

            let outcome = run_operation(wrapper, body, &state, scene);
            state.robot_busy.insert(outcome.robot.clone(), Some(op.clone()));
            for m in outcome.machines.iter().filter(|m| scene.is_exclusive(m)) {
                state.machine_busy.insert(m.clone(), Some(op.clone()));
            }
            match outcome.result {
                Ok((calls, effect)) => {
                    record.executed.push(ExecutedOp { operation: op.clone(), robot: outcome.robot, calls });
                    effects.push((op.as_str(), effect));
                }
                Err((skill_index, reason)) => {
                    log::debug!("step {step}: `{op}` failed at statement {skill_index}: {reason}");
                    record.failures.push(FailureRecord { step, operation: op.clone(), skill_index, reason });
                }
            }
        }
        for (op, effect) in effects {
            match effect {
                Effect::Move(w, m) => {
                    state.workpiece_location.insert(w, m);
                }
                Effect::Flag(w, f) => {
                    state.workpiece_flags.entry(w).or_default().insert(f);
                }
            }
            completed.insert(op);
        }
        state.clear_busy();
        steps.push(record);
    }

    let trace = ExecutionTrace { steps };
    let executed_fully = trace.executed_count() == schedule.start_step.len();
    Execution { trace, final_state: state, executed_fully }
}

/// Operation-level predecessors in the oriented schedule graph, conjunctive
/// and resource arcs alike.
fn schedule_predecessors(schedule: &ScheduleGraph) -> BTreeMap<&str, Vec<&str>> {
    let og = &schedule.oriented_graph;
    let name = |v: VertexId| match &og.vertices.get(v.0)?.payload {
        VertexPayload::Operation(id) => Some(id.as_str()),
        _ => None,
    };
    let mut preds: BTreeMap<&str, Vec<&str>> = schedule.start_step.keys().map(|k| (k.as_str(), vec![])).collect();
    for &(from, to) in &og.arcs {
        if let (Some(f), Some(t)) = (name(from), name(to)) {
            preds.entry(t).or_default().push(f);
        }
    }
    preds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use crate::model::{Allocation, Machine, Operation, PrecedenceSet, Robot, Workpiece};
    use crate::program::assemble_program;
    use crate::schedule::solve_fifo;
    use crate::tree::reference_tree;

    const POINTS: [&str; 4] = ["Photo_Point", "Pick_Point", "Place_Point", "Work_Point"];

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn scene() -> Scene {
        let m = |id: &str, held: &[&str], exclusive| Machine {
            id: id.into(),
            name: id.into(),
            held_workpieces: held.iter().map(|s| s.to_string()).collect(),
            exclusive,
            points: set(&POINTS),
        };
        Scene {
            robots: vec![
                Robot {
                    id: "r1".into(),
                    devices: set(&["bracket_camera", "magnetic_gripper"]),
                    reachable_machines: set(&["conveyor", "table"]),
                },
                Robot {
                    id: "r2".into(),
                    devices: set(&["bracket_camera", "polishing_spindle", "vacuum_gripper"]),
                    reachable_machines: set(&["table", "pallet"]),
                },
            ],
            machines: vec![m("conveyor", &["w1", "w2"], false), m("table", &[], true), m("pallet", &[], false)],
            workpieces: vec![
                Workpiece { id: "w1".into(), kind: "plate".into(), state_sequence: vec![StateLabel::Polished] },
                Workpiece { id: "w2".into(), kind: "plate".into(), state_sequence: vec![] },
            ],
        }
    }

    fn pipeline(ops: &[Operation], pairs: &[(&str, &str)], scene: &Scene) -> (ScheduleGraph, Program) {
        let alloc: Allocation = pairs.iter().copied().collect();
        let prec = PrecedenceSet::from_operation_order(ops);
        let graph = build_graph(scene, ops, &alloc, &prec).unwrap();
        let order: Vec<OpId> = ops.iter().map(|o| o.id.clone()).collect();
        let schedule = solve_fifo(&graph, &order).unwrap();
        let program = assemble_program(&reference_tree(), ops, &alloc, scene).unwrap();
        (schedule, program)
    }

    fn polish_chain() -> Vec<Operation> {
        vec![
            Operation::transport("o1", "w1", "conveyor", "table"),
            Operation::process("o2", OperationType::Polishing, "w1", "table"),
            Operation::transport("o3", "w1", "table", "pallet"),
            Operation::transport("o4", "w2", "conveyor", "table"),
        ]
    }

    #[test]
    fn empty_operation_set() {
        let s = scene();
        let (schedule, program) = pipeline(&[], &[], &s);
        let run = execute(&schedule, &program, &s);
        assert!(run.trace.steps.is_empty());
        assert!(run.executed_fully);
        assert_eq!(run.final_state, SymbolicState::initial(&s));
    }

    #[test]
    fn single_transport_relocates() {
        let mut s = scene();
        s.robots[0].reachable_machines.insert("pallet".into());
        let ops = vec![Operation::transport("o1", "w1", "conveyor", "pallet")];
        let (schedule, program) = pipeline(&ops, &[("o1", "r1")], &s);
        let run = execute(&schedule, &program, &s);
        assert!(run.executed_fully);
        assert_eq!(run.final_state.workpiece_location["w1"], "pallet");
        assert_eq!(
            status_delta(&run.final_state, &SymbolicState::initial(&s)),
            StatusSet::from([("w1".to_string(), StateLabel::At("pallet".into()))])
        );
    }

    #[test]
    fn chain_runs_to_completion() {
        let s = scene();
        let ops = polish_chain();
        let (schedule, program) = pipeline(&ops, &[("o1", "r1"), ("o2", "r2"), ("o3", "r2"), ("o4", "r1")], &s);
        let run = execute(&schedule, &program, &s);
        assert!(run.executed_fully, "{:?}", run.trace.failures().collect::<Vec<_>>());
        let delta = status_delta(&run.final_state, &SymbolicState::initial(&s));
        let expected = StatusSet::from([
            ("w1".to_string(), StateLabel::At("pallet".into())),
            ("w1".to_string(), StateLabel::Polished),
            ("w2".to_string(), StateLabel::At("table".into())),
        ]);
        assert_eq!(delta, expected);
        assert_eq!(run.trace.steps.len() as u32, schedule.makespan);
        assert!(run.final_state.robot_busy.values().all(Option::is_none));
    }

    #[test]
    fn missing_device_cascades_to_descendants() {
        // FIFO: o1@0, o2@1, o3@2, o4@3, every pair serialized by the table.
        // o2 fails at statement 6: camera on, detect, compute, three go_to
        // statements, then the missing spindle. o3 follows o2 on w1 and o4
        // follows o2 on the table, so only o1 completes.
        let s = scene();
        let ops = polish_chain();
        let (schedule, program) = pipeline(&ops, &[("o1", "r1"), ("o2", "r2"), ("o3", "r2"), ("o4", "r1")], &s);
        let mut broken = s.clone();
        broken.robots[1].devices.remove("polishing_spindle");
        let run = execute(&schedule, &program, &broken);
        assert!(!run.executed_fully);
        let failures: Vec<_> = run.trace.failures().collect();
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].operation, "o2");
        assert_eq!(failures[0].reason, FailureReason::MissingDevice);
        let body = &program.executions[&program.wrappers["run_o2"].execution];
        assert_eq!(body[failures[0].skill_index].skill, "control_device");
        assert!(!run.final_state.workpiece_flags["w1"].contains(&StateLabel::Polished));
        assert_eq!(failures[0].skill_index, 6);
        assert_eq!(schedule.start_step.values().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let blocked: Vec<&str> = run.trace.steps.iter().flat_map(|s| s.blocked.iter().map(String::as_str)).collect();
        assert_eq!(blocked, vec!["o3", "o4"]);
        let executed: Vec<&str> = run.trace.executed().map(|e| e.operation.as_str()).collect();
        assert_eq!(executed, vec!["o1"]);
    }

    #[test]
    fn missing_call_is_a_failure() {
        let s = scene();
        let ops = polish_chain();
        let (schedule, mut program) = pipeline(&ops, &[("o1", "r1"), ("o2", "r2"), ("o3", "r2"), ("o4", "r1")], &s);
        program.calls.retain(|c| c.operation != "o4");
        let run = execute(&schedule, &program, &s);
        let f: Vec<_> = run.trace.failures().collect();
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].operation.as_str(), f[0].skill_index, f[0].reason), ("o4", 0, FailureReason::MissingCall));
        assert!(run.final_state.workpiece_flags["w1"].contains(&StateLabel::Polished));
    }

    #[test]
    fn wrong_location_when_order_is_inverted() {
        let s = scene();
        let ops = polish_chain();
        let (schedule, mut program) = pipeline(&ops, &[("o1", "r1"), ("o2", "r2"), ("o3", "r2"), ("o4", "r1")], &s);
        let w = program.wrappers.get_mut("run_o2").unwrap();
        w.bindings.insert("machine_1".into(), "conveyor".into());
        let run = execute(&schedule, &program, &s);
        let f = run.trace.failures().next().unwrap();
        assert_eq!((f.operation.as_str(), f.reason), ("o2", FailureReason::WrongLocation));
    }

    #[test]
    fn jsonl_round_trip() {
        let s = scene();
        let ops = polish_chain();
        let (schedule, program) = pipeline(&ops, &[("o1", "r1"), ("o2", "r2"), ("o3", "r2"), ("o4", "r1")], &s);
        let mut broken = s.clone();
        broken.robots[1].devices.remove("polishing_spindle");
        let run = execute(&schedule, &program, &broken);
        let text = run.trace.to_jsonl();
        assert_eq!(text.lines().count() as u32, schedule.makespan);
        let back = ExecutionTrace::from_jsonl(&text).unwrap();
        assert_eq!(back, run.trace);
        assert_eq!(back.to_jsonl(), text);
        assert!(text.contains("\"reason\":\"missing_device\""));
    }
}
