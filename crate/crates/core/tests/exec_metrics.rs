use std::collections::BTreeSet;

use shopfloor::exec::execute;
use shopfloor::graph::build_graph;
use shopfloor::metrics::{evaluate_instance, executability};
use shopfloor::model::{
    Allocation, Machine, Operation, OperationType, PrecedenceSet, Robot, Scene, StateLabel, Workpiece,
};
use shopfloor::program::assemble_program;
use shopfloor::schedule::{solve_fifo, ScheduleGraph};
use shopfloor::task::{GroundTruth, TaskInstance};
use shopfloor::tree::reference_tree;

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn machine(id: &str, held: &[&str], exclusive: bool) -> Machine {
    Machine {
        id: id.into(),
        name: id.replace('_', " "),
        held_workpieces: held.iter().map(|s| s.to_string()).collect(),
        exclusive,
        points: set(&["Photo_Point", "Pick_Point", "Place_Point", "Work_Point"]),
    }
}

fn scene(r1_devices: &[&str]) -> Scene {
    Scene {
        robots: vec![
            Robot {
                id: "r1".into(),
                devices: set(r1_devices),
                reachable_machines: set(&["conveyor", "table_1", "pallet"]),
            },
            Robot {
                id: "r2".into(),
                devices: set(&["bracket_camera", "vacuum_gripper"]),
                reachable_machines: set(&["conveyor", "pallet"]),
            },
        ],
        machines: vec![
            machine("conveyor", &["w1", "w2"], false),
            machine("table_1", &[], true),
            machine("pallet", &[], false),
        ],
        workpieces: vec![
            Workpiece { id: "w1".into(), kind: "plate".into(), state_sequence: vec![StateLabel::Polished] },
            Workpiece { id: "w2".into(), kind: "plate".into(), state_sequence: vec![] },
        ],
    }
}

/// r1 moves w1 to a table, polishes it and moves it to the pallet; r2 moves w2 to the pallet.
fn plan() -> (Vec<Operation>, Allocation, PrecedenceSet) {
    let ops = vec![
        Operation::transport("o1", "w1", "conveyor", "table_1"),
        Operation::process("o2", OperationType::Polishing, "w1", "table_1"),
        Operation::transport("o3", "w1", "table_1", "pallet"),
        Operation::transport("o4", "w2", "conveyor", "pallet"),
    ];
    let alloc: Allocation = [("o1", "r1"), ("o2", "r1"), ("o3", "r1"), ("o4", "r2")].into_iter().collect();
    let prec = PrecedenceSet::from_operation_order(&ops);
    (ops, alloc, prec)
}

const FULL: &[&str] = &["bracket_camera", "magnetic_gripper", "polishing_spindle"];

fn task() -> (TaskInstance, ScheduleGraph) {
    let scene = scene(FULL);
    let (ops, alloc, prec) = plan();
    let graph = build_graph(&scene, &ops, &alloc, &prec).unwrap();
    let schedule = solve_fifo(&graph, &["o1", "o2", "o3", "o4"].map(String::from)).unwrap();
    let program = assemble_program(&reference_tree(), &ops, &alloc, &scene).unwrap();
    let task = TaskInstance {
        task_id: Some("half".into()),
        tier: None,
        scene,
        instruction: "Polish w1 and put both workpieces on the pallet.".into(),
        ground_truth: Some(GroundTruth {
            operations: ops,
            allocation: alloc,
            precedence: prec,
            program: Some(program),
            schedule: Some(schedule.to_doc()),
        }),
    };
    (task, schedule)
}

#[test]
fn ground_truth_scores_all_ones() {
    let (task, schedule) = task();
    let gt = task.ground_truth.as_ref().unwrap();
    let run = execute(&schedule, gt.program.as_ref().unwrap(), &task.scene);
    assert!(run.executed_fully);
    let report = evaluate_instance(&task, &gt.operations, &gt.allocation, Some(&schedule), Some(&run)).unwrap();
    assert!(report.is_perfect(), "{report:?}");
}

#[test]
fn failure_blocks_its_descendant_and_halves_exe() {
    let (task, schedule) = task();
    let gt = task.ground_truth.as_ref().unwrap();
    let degraded = scene(&["bracket_camera", "magnetic_gripper"]);
    let run = execute(&schedule, gt.program.as_ref().unwrap(), &degraded);

    let failures: Vec<_> = run.trace.failures().collect();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0].operation, "o2");
    assert_eq!(failures[0].reason.to_string(), "missing_device");
    let blocked: Vec<&String> = run.trace.steps.iter().flat_map(|s| &s.blocked).collect();
    assert_eq!(blocked, ["o3"]);
    let executed: BTreeSet<&str> = run.trace.executed().map(|e| e.operation.as_str()).collect();
    assert_eq!(executed, ["o1", "o4"].into());
    assert_eq!(executability(&run.trace, 4), 0.5);

    let report = evaluate_instance(&task, &gt.operations, &gt.allocation, Some(&schedule), Some(&run)).unwrap();
    assert_eq!(report.exe, 0.5);
    assert_eq!(report.oc, 1.0);
    assert_eq!(report.se, 1.0);
    // Missing: w1 polished, w1 at pallet. Present: w2 at pallet.
    assert!((report.gcr - 1.0 / 3.0).abs() < 1e-12, "{}", report.gcr);
    assert_eq!(report.sr, 0);
}
