//! Invariant checks for scenes and planner output.
//!
//! Checks never fail early: every violated invariant ends up in the report,
//! so a planner's output can be scored and explained in one pass.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::{Allocation, Operation, PrecedenceSet, Scene, StateLabel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateId {
        entity: &'static str,
        id: String,
    },
    UnknownMachine {
        context: String,
        machine: String,
    },
    UnknownWorkpiece {
        context: String,
        workpiece: String,
    },
    UnknownRobot {
        context: String,
        robot: String,
    },
    UnknownOperation {
        context: String,
        op: String,
    },
    WorkpieceOnSeveralMachines {
        workpiece: String,
    },
    WorkpieceNotPlaced {
        workpiece: String,
    },
    /// Transport without a destination machine.
    MissingMachine2 {
        op: String,
    },
    /// Non-transport operation carrying a second machine.
    UnexpectedMachine2 {
        op: String,
    },
    SameMachineTwice {
        op: String,
    },
    AllocationNotTotal {
        op: String,
    },
    Unreachable {
        op: String,
        robot: String,
        machine: String,
    },
    OperationNotInPrecedence {
        op: String,
    },
    OperationInSeveralPrecedenceLists {
        op: String,
    },
    PrecedenceWrongWorkpiece {
        op: String,
        listed_under: String,
        actual: String,
    },
    PrecedenceDuplicate {
        workpiece: String,
        op: String,
    },
    ScheduleMismatch {
        detail: String,
    },
    ProgramMismatch {
        detail: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateId { entity, id } => write!(f, "duplicate {entity} id `{id}`"),
            UnknownMachine { context, machine } => {
                write!(f, "dangling reference: {context} names unknown machine `{machine}`")
            }
            UnknownWorkpiece { context, workpiece } => {
                write!(f, "dangling reference: {context} names unknown workpiece `{workpiece}`")
            }
            UnknownRobot { context, robot } => {
                write!(f, "dangling reference: {context} names unknown robot `{robot}`")
            }
            UnknownOperation { context, op } => {
                write!(f, "dangling reference: {context} names unknown operation `{op}`")
            }
            WorkpieceOnSeveralMachines { workpiece } => {
                write!(f, "placement: workpiece `{workpiece}` held by more than one machine")
            }
            WorkpieceNotPlaced { workpiece } => {
                write!(f, "placement: workpiece `{workpiece}` held by no machine")
            }
            MissingMachine2 { op } => write!(f, "machine_2 required for transport (op `{op}`)"),
            UnexpectedMachine2 { op } => {
                write!(f, "machine_2 only allowed for transport (op `{op}`)")
            }
            SameMachineTwice { op } => write!(f, "machine_1 equals machine_2 (op `{op}`)"),
            AllocationNotTotal { op } => write!(f, "allocation not total: op `{op}` has no robot"),
            Unreachable { op, robot, machine } => {
                write!(f, "reachability: robot `{robot}` cannot reach machine `{machine}` for op `{op}`")
            }
            OperationNotInPrecedence { op } => {
                write!(f, "precedence: op `{op}` missing from every workpiece list")
            }
            OperationInSeveralPrecedenceLists { op } => {
                write!(f, "precedence: op `{op}` appears in more than one list")
            }
            PrecedenceWrongWorkpiece { op, listed_under, actual } => {
                write!(f, "precedence: op `{op}` listed under `{listed_under}` but processes `{actual}`")
            }
            PrecedenceDuplicate { workpiece, op } => {
                write!(f, "precedence: op `{op}` repeated in list of `{workpiece}`")
            }
            ScheduleMismatch { detail } => write!(f, "ground-truth schedule: {detail}"),
            ProgramMismatch { detail } => write!(f, "ground-truth program: {detail}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("ok");
        }
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&lines.join("; "))
    }
}

fn check_unique<'a>(report: &mut ValidationReport, entity: &'static str, ids: impl Iterator<Item = &'a String>) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            report.push(Violation::DuplicateId { entity, id: id.clone() });
        }
    }
}

pub fn validate_scene(scene: &Scene) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_unique(&mut report, "robot", scene.robots.iter().map(|r| &r.id));
    check_unique(&mut report, "machine", scene.machines.iter().map(|m| &m.id));
    check_unique(&mut report, "workpiece", scene.workpieces.iter().map(|w| &w.id));

    let machine_ids: BTreeSet<&String> = scene.machines.iter().map(|m| &m.id).collect();
    let workpiece_ids: BTreeSet<&String> = scene.workpieces.iter().map(|w| &w.id).collect();

    for robot in &scene.robots {
        for m in &robot.reachable_machines {
            if !machine_ids.contains(m) {
                report.push(Violation::UnknownMachine {
                    context: format!("robot `{}` reachable_machines", robot.id),
                    machine: m.clone(),
                });
            }
        }
    }

    let mut holders: BTreeMap<&String, usize> = BTreeMap::new();
    for machine in &scene.machines {
        for w in &machine.held_workpieces {
            if !workpiece_ids.contains(w) {
                report.push(Violation::UnknownWorkpiece {
                    context: format!("machine `{}` held_workpieces", machine.id),
                    workpiece: w.clone(),
                });
            }
            *holders.entry(w).or_default() += 1;
        }
    }
    for w in &scene.workpieces {
        match holders.get(&w.id).copied().unwrap_or(0) {
            0 => report.push(Violation::WorkpieceNotPlaced { workpiece: w.id.clone() }),
            1 => {}
            _ => report.push(Violation::WorkpieceOnSeveralMachines { workpiece: w.id.clone() }),
        }
        for label in &w.state_sequence {
            if let StateLabel::At(m) = label {
                if !machine_ids.contains(m) {
                    report.push(Violation::UnknownMachine {
                        context: format!("workpiece `{}` state_sequence", w.id),
                        machine: m.clone(),
                    });
                }
            }
        }
    }
    report
}

/// Checks a planner's (operations, allocation, precedence) triple against the scene.
///
/// A passing report guarantees graph construction cannot fail structurally.
pub fn validate_planner_output(
    scene: &Scene,
    ops: &[Operation],
    alloc: &Allocation,
    prec: &PrecedenceSet,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_unique(&mut report, "operation", ops.iter().map(|o| &o.id));

    let by_id: BTreeMap<&String, &Operation> = ops.iter().map(|o| (&o.id, o)).collect();

    for op in ops {
        if scene.workpiece(&op.workpiece).is_none() {
            report.push(Violation::UnknownWorkpiece {
                context: format!("op `{}`", op.id),
                workpiece: op.workpiece.clone(),
            });
        }
        for m in op.machines() {
            if scene.machine(m).is_none() {
                report.push(Violation::UnknownMachine { context: format!("op `{}`", op.id), machine: m.clone() });
            }
        }
        match (op.op_type == crate::model::OperationType::Transport, &op.machine_2) {
            (true, None) => report.push(Violation::MissingMachine2 { op: op.id.clone() }),
            (false, Some(_)) => report.push(Violation::UnexpectedMachine2 { op: op.id.clone() }),
            (true, Some(m2)) if *m2 == op.machine_1 => report.push(Violation::SameMachineTwice { op: op.id.clone() }),
            _ => {}
        }

        match alloc.robot_of(&op.id) {
            None => report.push(Violation::AllocationNotTotal { op: op.id.clone() }),
            Some(robot_id) => match scene.robot(robot_id) {
                None => report.push(Violation::UnknownRobot {
                    context: format!("allocation of op `{}`", op.id),
                    robot: robot_id.clone(),
                }),
                Some(robot) => {
                    for m in op.machines() {
                        if !robot.reachable_machines.contains(m) {
                            report.push(Violation::Unreachable {
                                op: op.id.clone(),
                                robot: robot_id.clone(),
                                machine: m.clone(),
                            });
                        }
                    }
                }
            },
        }
    }
    for op_id in alloc.pairs.keys() {
        if !by_id.contains_key(op_id) {
            report.push(Violation::UnknownOperation { context: "allocation".into(), op: op_id.clone() });
        }
    }

    let mut listed: BTreeMap<&String, usize> = BTreeMap::new();
    for (workpiece, list) in &prec.per_workpiece {
        if scene.workpiece(workpiece).is_none() {
            report.push(Violation::UnknownWorkpiece { context: "precedence".into(), workpiece: workpiece.clone() });
        }
        let mut in_list = BTreeSet::new();
        for op_id in list {
            if !in_list.insert(op_id) {
                report.push(Violation::PrecedenceDuplicate { workpiece: workpiece.clone(), op: op_id.clone() });
                continue;
            }
            *listed.entry(op_id).or_default() += 1;
            match by_id.get(op_id) {
                None => report.push(Violation::UnknownOperation {
                    context: format!("precedence list of `{workpiece}`"),
                    op: op_id.clone(),
                }),
                Some(op) if op.workpiece != *workpiece => report.push(Violation::PrecedenceWrongWorkpiece {
                    op: op_id.clone(),
                    listed_under: workpiece.clone(),
                    actual: op.workpiece.clone(),
                }),
                Some(_) => {}
            }
        }
    }
    for op in ops {
        match listed.get(&op.id).copied().unwrap_or(0) {
            0 => report.push(Violation::OperationNotInPrecedence { op: op.id.clone() }),
            1 => {}
            _ => report.push(Violation::OperationInSeveralPrecedenceLists { op: op.id.clone() }),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Machine, OperationType, Robot, Workpiece};

    fn scene() -> Scene {
        Scene {
            robots: vec![Robot {
                id: "r1".into(),
                devices: ["magnetic_gripper".to_string()].into(),
                reachable_machines: ["conveyor".to_string(), "pallet".to_string()].into(),
            }],
            machines: vec![
                Machine {
                    id: "conveyor".into(),
                    name: "conveyor belt".into(),
                    held_workpieces: vec!["w1".into()],
                    exclusive: false,
                    points: Default::default(),
                },
                Machine {
                    id: "pallet".into(),
                    name: "pallet".into(),
                    held_workpieces: vec![],
                    exclusive: true,
                    points: Default::default(),
                },
                Machine {
                    id: "table".into(),
                    name: "polishing table".into(),
                    held_workpieces: vec![],
                    exclusive: true,
                    points: Default::default(),
                },
            ],
            workpieces: vec![Workpiece {
                id: "w1".into(),
                kind: "plate".into(),
                state_sequence: vec![StateLabel::At("pallet".into())],
            }],
        }
    }

    fn triple() -> (Vec<Operation>, Allocation, PrecedenceSet) {
        let ops = vec![Operation::transport("o1", "w1", "conveyor", "pallet")];
        let alloc = [("o1", "r1")].into_iter().collect();
        let prec = PrecedenceSet::from_operation_order(&ops);
        (ops, alloc, prec)
    }

    #[test]
    fn consistent_triple_passes() {
        let (ops, alloc, prec) = triple();
        assert!(validate_scene(&scene()).passed());
        assert!(validate_planner_output(&scene(), &ops, &alloc, &prec).passed());
    }

    #[test]
    fn allocation_missing_an_operation() {
        let (ops, _, prec) = triple();
        let report = validate_planner_output(&scene(), &ops, &Allocation::default(), &prec);
        assert_eq!(report.violations, vec![Violation::AllocationNotTotal { op: "o1".into() }]);
    }

    #[test]
    fn transport_without_destination() {
        let (mut ops, alloc, prec) = triple();
        ops[0].machine_2 = None;
        let report = validate_planner_output(&scene(), &ops, &alloc, &prec);
        assert!(report.violations.contains(&Violation::MissingMachine2 { op: "o1".into() }));
        assert!(report.to_string().contains("machine_2 required for transport"));
    }

    #[test]
    fn processing_with_second_machine() {
        let ops = vec![Operation::new("o1", OperationType::Polishing, "w1", "conveyor", Some("pallet"))];
        let alloc = [("o1", "r1")].into_iter().collect();
        let prec = PrecedenceSet::from_operation_order(&ops);
        let report = validate_planner_output(&scene(), &ops, &alloc, &prec);
        assert_eq!(report.violations, vec![Violation::UnexpectedMachine2 { op: "o1".into() }]);
    }

    #[test]
    fn unreachable_machine_is_named() {
        let ops = vec![Operation::transport("o1", "w1", "conveyor", "table")];
        let alloc = [("o1", "r1")].into_iter().collect();
        let prec = PrecedenceSet::from_operation_order(&ops);
        let report = validate_planner_output(&scene(), &ops, &alloc, &prec);
        assert_eq!(
            report.violations,
            vec![Violation::Unreachable { op: "o1".into(), robot: "r1".into(), machine: "table".into() }]
        );
        assert!(report.to_string().starts_with("reachability"));
    }

    #[test]
    fn precedence_errors() {
        let (ops, alloc, _) = triple();
        let mut prec = PrecedenceSet::default();
        prec.per_workpiece.insert("w1".into(), vec!["o1".into(), "o1".into()]);
        prec.per_workpiece.insert("w9".into(), vec!["o7".into()]);
        let report = validate_planner_output(&scene(), &ops, &alloc, &prec);
        assert!(report
            .violations
            .contains(&Violation::PrecedenceDuplicate { workpiece: "w1".into(), op: "o1".into() }));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::UnknownWorkpiece { .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::UnknownOperation { .. })));

        let report = validate_planner_output(&scene(), &ops, &alloc, &PrecedenceSet::default());
        assert_eq!(report.violations, vec![Violation::OperationNotInPrecedence { op: "o1".into() }]);
    }

    #[test]
    fn scene_placement_is_a_partition() {
        let mut s = scene();
        s.machines[1].held_workpieces.push("w1".into());
        let report = validate_scene(&s);
        assert_eq!(report.violations, vec![Violation::WorkpieceOnSeveralMachines { workpiece: "w1".into() }]);
        s.machines[0].held_workpieces.clear();
        s.machines[1].held_workpieces.clear();
        assert_eq!(validate_scene(&s).violations, vec![Violation::WorkpieceNotPlaced { workpiece: "w1".into() }]);
    }

    #[test]
    fn scene_dangling_references() {
        let mut s = scene();
        s.robots[0].reachable_machines.insert("ghost".into());
        s.workpieces[0].state_sequence.push(StateLabel::At("nowhere".into()));
        s.robots.push(s.robots[0].clone());
        let report = validate_scene(&s);
        assert!(report.violations.contains(&Violation::DuplicateId { entity: "robot", id: "r1".into() }));
        assert_eq!(report.violations.iter().filter(|v| matches!(v, Violation::UnknownMachine { .. })).count(), 3);
    }
}
