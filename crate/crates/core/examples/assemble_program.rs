//! Assembles the robot program for the bundled task and prints it as a
//! script, then runs the static checker against the scene.

use std::path::Path;

use shopfloor::program::{assemble_program, check_program, render_script};
use shopfloor::task::load_task_instance;
use shopfloor::tree::reference_tree;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/conveyor_pallets.json");
    let task = load_task_instance(path).unwrap();
    let gt = task.ground_truth.as_ref().unwrap();
    let program = assemble_program(&reference_tree(), &gt.operations, &gt.allocation, &task.scene).unwrap();

    print!("{}", render_script(&program));
    println!();
    println!(
        "{} calls, {} wrappers, {} shared execution functions",
        program.calls.len(),
        program.wrappers.len(),
        program.executions.len()
    );

    let report = check_program(&program, &task.scene);
    if report.passed() {
        println!("static check: ok");
    }
    for issue in &report.issues {
        println!("static check: {issue}");
    }
}
