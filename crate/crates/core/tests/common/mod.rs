#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use shopfloor::graph::build_graph;
use shopfloor::model::{
    Allocation, Machine, Operation, OperationType, PrecedenceSet, Robot, Scene, StateLabel, Workpiece,
};
use shopfloor::program::assemble_program;
use shopfloor::schedule::{brute_force_optimal, ScheduleOrigin};
use shopfloor::task::{GroundTruth, TaskInstance};
use shopfloor::tree::reference_tree;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn blessing() -> bool {
    std::env::var_os("SHOPFLOOR_BLESS").is_some()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn machine(id: &str, name: &str, held: &[&str], exclusive: bool) -> Machine {
    Machine {
        id: id.into(),
        name: name.into(),
        held_workpieces: held.iter().map(|s| s.to_string()).collect(),
        exclusive,
        points: set(&["Photo_Point", "Pick_Point", "Place_Point", "Work_Point"]),
    }
}

/// Two workpieces on a shared conveyor, three robots, one polishing and
/// one welding table, two pallets. w2 is polished and placed on pallet_1;
/// w1 is welded, then polished, then placed on pallet_2.
pub fn conveyor_pallets_scene() -> Scene {
    Scene {
        robots: vec![
            Robot {
                id: "r1".into(),
                devices: set(&["handheld_camera", "magnetic_gripper", "polishing_spindle"]),
                reachable_machines: set(&["conveyor", "polishing_table"]),
            },
            Robot {
                id: "r2".into(),
                devices: set(&["bracket_camera", "vacuum_gripper", "welding_gun"]),
                reachable_machines: set(&["conveyor", "welding_table", "polishing_table"]),
            },
            Robot {
                id: "r3".into(),
                devices: set(&["bracket_camera", "magnetic_gripper"]),
                reachable_machines: set(&["polishing_table", "pallet_1", "pallet_2"]),
            },
        ],
        machines: vec![
            machine("conveyor", "conveyor", &["w1", "w2"], false),
            machine("polishing_table", "polishing table", &[], true),
            machine("welding_table", "welding table", &[], true),
            machine("pallet_1", "pallet 1", &[], true),
            machine("pallet_2", "pallet 2", &[], true),
        ],
        workpieces: vec![
            Workpiece {
                id: "w1".into(),
                kind: "plate".into(),
                state_sequence: vec![StateLabel::Welded, StateLabel::Polished],
            },
            Workpiece { id: "w2".into(), kind: "plate".into(), state_sequence: vec![StateLabel::Polished] },
        ],
    }
}

/// Operations in the order the FIFO solver receives them.
pub fn conveyor_pallets_ops() -> (Vec<Operation>, Allocation) {
    let ops = vec![
        Operation::transport("op01", "w2", "conveyor", "polishing_table"),
        Operation::process("op02", OperationType::Polishing, "w2", "polishing_table"),
        Operation::transport("op03", "w1", "conveyor", "welding_table"),
        Operation::process("op04", OperationType::Welding, "w1", "welding_table"),
        Operation::transport("op05", "w1", "welding_table", "polishing_table"),
        Operation::process("op06", OperationType::Polishing, "w1", "polishing_table"),
        Operation::transport("op07", "w2", "polishing_table", "pallet_1"),
        Operation::transport("op08", "w1", "polishing_table", "pallet_2"),
    ];
    let alloc = [
        ("op01", "r1"),
        ("op02", "r1"),
        ("op03", "r2"),
        ("op04", "r2"),
        ("op05", "r2"),
        ("op06", "r1"),
        ("op07", "r3"),
        ("op08", "r3"),
    ]
    .into_iter()
    .collect();
    (ops, alloc)
}

/// The conveyor/pallet task with ground-truth program and oracle schedule.
pub fn conveyor_pallets_task() -> TaskInstance {
    let scene = conveyor_pallets_scene();
    let (ops, alloc) = conveyor_pallets_ops();
    let prec = PrecedenceSet::from_operation_order(&ops);
    let graph = build_graph(&scene, &ops, &alloc, &prec).unwrap();
    let mut schedule = brute_force_optimal(&graph).unwrap().to_doc();
    schedule.origin = Some(ScheduleOrigin::Oracle);
    let program = assemble_program(&reference_tree(), &ops, &alloc, &scene).unwrap();
    TaskInstance {
        task_id: Some("conveyor_pallets".into()),
        tier: None,
        scene,
        instruction:
            "Polish workpiece w2 and place it on pallet 1. Weld workpiece w1, polish it, and place it on pallet 2."
                .into(),
        ground_truth: Some(GroundTruth {
            operations: ops,
            allocation: alloc,
            precedence: prec,
            program: Some(program),
            schedule: Some(schedule),
        }),
    }
}

/// Chat-completion response body wrapping `content`.
pub fn chat_response(content: &str) -> String {
    let body = serde_json::json!({
        "id": "recorded-0",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    });
    let mut s = serde_json::to_string_pretty(&body).unwrap();
    s.push('\n');
    s
}
