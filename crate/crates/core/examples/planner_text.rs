//! Renders a plan in the fenced-block text format a language model is asked
//! to produce, then parses it back and reports a damaged copy.

use std::path::Path;

use shopfloor::planner::{parse_planner_text, render_planner_text};
use shopfloor::task::load_task_instance;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/conveyor_pallets.json");
    let task = load_task_instance(path).unwrap();
    let gt = task.ground_truth.as_ref().unwrap();

    let text = render_planner_text(&gt.operations, &gt.allocation, &gt.precedence);
    print!("{text}");
    let parsed = parse_planner_text(&text, &task.scene);
    println!("round trip valid: {}", parsed.is_valid() && parsed.ops == gt.operations);

    let damaged = text.replace("op03 | r2", "op03 | r9");
    for issue in parse_planner_text(&damaged, &task.scene).issues {
        println!("damaged copy: {issue}");
    }
}
