//! Runs the symbolic executor on the bundled task, once as given and once
//! with robot r1's polishing spindle removed, and prints both traces.

use std::path::Path;

use shopfloor::exec::{execute, status_delta, SymbolicState};
use shopfloor::task::load_task_instance;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/conveyor_pallets.json");
    let task = load_task_instance(path).unwrap();
    let gt = task.ground_truth.as_ref().unwrap();
    let graph = gt.graph(&task.scene).unwrap();
    let schedule = gt.schedule_graph(&graph).unwrap().unwrap();
    let program = gt.program.as_ref().unwrap();

    let run = execute(&schedule, program, &task.scene);
    print!("{}", run.trace.to_jsonl());
    println!("final locations: {:?}", run.final_state.workpiece_location);
    let delta = status_delta(&run.final_state, &SymbolicState::initial(&task.scene));
    println!("status delta: {delta:?}");

    let mut degraded = task.scene.clone();
    degraded.robots[0].devices.remove("polishing_spindle");
    let run = execute(&schedule, program, &degraded);
    println!();
    for step in &run.trace.steps {
        let done: Vec<&str> = step.executed.iter().map(|e| e.operation.as_str()).collect();
        println!("step {}: executed {:?} blocked {:?}", step.step, done, step.blocked);
        for f in &step.failures {
            println!("    {} failed at skill {}: {}", f.operation, f.skill_index, f.reason);
        }
    }
    println!("executed {} of {}", run.trace.executed_count(), gt.operations.len());
}
