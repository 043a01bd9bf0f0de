//! Builds the disjunctive graph of the bundled conveyor/pallet task and
//! prints its arc counts followed by a Graphviz rendering.
//!
//! ```text
//! cargo run --example disjunctive_graph | tail -n +5 | dot -Tsvg > graph.svg
//! ```

use std::path::Path;

use shopfloor::task::load_task_instance;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/conveyor_pallets.json");
    let task = load_task_instance(&path).expect("bundled fixture loads");
    let graph = task.ground_truth.as_ref().unwrap().graph(&task.scene).expect("ground truth is valid");

    println!("operations:        {}", graph.op_count());
    println!("conjunctive arcs:  {}", graph.conjunctive.len());
    println!("machine arcs:      {}", graph.machine_disjunctive.len());
    println!("robot arcs:        {}", graph.robot_disjunctive.len());
    print!("{}", graph.to_dot());
}
