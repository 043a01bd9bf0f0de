//! Scores the ground-truth plan of the bundled task and a variant with one
//! operation handed to a different robot.

use std::path::Path;

use shopfloor::pipeline::run_pipeline;
use shopfloor::planner::{GroundTruthPlanner, Planner, WrongRobotPlanner};
use shopfloor::task::load_task_instance;
use shopfloor::tree::reference_tree;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/conveyor_pallets.json");
    let task = load_task_instance(path).unwrap();
    let tree = reference_tree();
    let planners: [&dyn Planner; 2] = [&GroundTruthPlanner, &WrongRobotPlanner { inner: GroundTruthPlanner }];
    for planner in planners {
        let output = planner.plan(&task).unwrap();
        let run = run_pipeline(&task, output, &tree).unwrap();
        let m = &run.report;
        println!("{:<12} oc={:.3} se={:.3} exe={:.3} gcr={:.3} sr={}", planner.name(), m.oc, m.se, m.exe, m.gcr, m.sr);
        for note in &m.notes {
            println!("    note: {note}");
        }
    }
}
