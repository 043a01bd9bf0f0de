//! Walks the reference process tree for every operation of the bundled task
//! and prints the selected branch and its skill snippet.

use std::path::Path;

use shopfloor::task::load_task_instance;
use shopfloor::tree::{reference_tree, select_branch};

fn main() {
    let tree = reference_tree();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/conveyor_pallets.json");
    let task = load_task_instance(path).unwrap();
    let gt = task.ground_truth.as_ref().unwrap();
    for op in &gt.operations {
        let robot = gt.allocation.robot_of(&op.id).and_then(|r| task.scene.robot(r));
        match select_branch(&tree, op, robot, &task.scene) {
            Ok(branch) => {
                println!("{} ({}) -> {:?}", op.id, op.op_type, branch);
                for call in tree.branch_snippet(&branch) {
                    println!("    {call}");
                }
            }
            Err(e) => println!("{}: {e}", op.id),
        }
    }
}
